//! Uniform entry point over all estimators.

use serde::{Deserialize, Serialize};

use crate::admm::{cdmd, AdmmConfig, ResidualRecord};
use crate::dmd::{
    exact_backward, exact_dmd, fb_dmd_reduced, pod_reduce, tls_backward, tls_dmd, DmdResult,
    Method, RankPolicy, ReducedData, SnapshotData,
};
use crate::error::Result;
use crate::lifted::{cdmd2, Cdmd2Config};
use crate::linalg::RealMatrix;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub admm: AdmmConfig,
    pub cdmd2: Cdmd2Config,
}

#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub result: DmdResult,
    pub reduced: ReducedData,
    /// Backward operator in the same coordinates as `result.a`.
    pub backward: RealMatrix,
    /// Empty for the non-iterative methods.
    pub history: Vec<ResidualRecord>,
    pub converged: bool,
}

impl MethodOutput {
    /// `‖A B − I‖_F`.
    pub fn consistency(&self) -> f64 {
        let r = self.result.a.nrows();
        (&self.result.a * &self.backward - RealMatrix::identity(r, r)).norm()
    }
}

/// POD-reduces `data` to rank `r` (truncating with a warning if the data has
/// lower numerical rank) and runs `method`.
pub fn run_method(
    data: &SnapshotData,
    method: Method,
    r: usize,
    cfg: &SolverConfig,
) -> Result<MethodOutput> {
    let rd = pod_reduce(data, r, RankPolicy::Truncate)?;
    run_reduced(rd, method, cfg)
}

pub fn run_reduced(rd: ReducedData, method: Method, cfg: &SolverConfig) -> Result<MethodOutput> {
    let (result, backward, history, converged) = match method {
        Method::Exact => (exact_dmd(&rd)?, exact_backward(&rd)?, Vec::new(), true),
        Method::Fbdmd => {
            let out = fb_dmd_reduced(&rd)?;
            (out.result, out.backward, Vec::new(), true)
        }
        Method::Tlsdmd => (tls_dmd(&rd)?, tls_backward(&rd)?, Vec::new(), true),
        Method::Cdmd => {
            let out = cdmd(&rd, &cfg.admm)?;
            (out.result, out.backward, out.history, out.converged)
        }
        Method::Cdmd2 => {
            let out = cdmd2(&rd, &cfg.cdmd2)?;
            (out.result, out.backward, out.history, out.converged)
        }
    };
    Ok(MethodOutput {
        result,
        reduced: rd,
        backward,
        history,
        converged,
    })
}
