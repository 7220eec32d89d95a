//! Dense real and complex matrix kernels.
//!
//! Matrices are `nalgebra` dynamic matrices, stored column-major. Everything
//! here is a pure function of its inputs.

mod eig;
mod schur;
mod sqrtm;
mod sylvester;

pub use eig::{eig, EigenPairs};
pub use schur::{complex_schur, ComplexSchur};
pub use sqrtm::sqrtm;
pub use sylvester::{sylvester_solve, sylvester_solve_complex};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RealMatrix = DMatrix<f64>;
pub type ComplexMatrix = DMatrix<Complex64>;

/// Largest condition number accepted by [`linsolve_right`], `1/sqrt(eps)`.
pub const CONDITION_CAP: f64 = 67_108_864.0;

const SVD_MAX_SWEEPS: usize = 10_000;

/// Thin singular value decomposition `M = U diag(S) Vᵀ` with `k = min(m, n)`
/// and `S` sorted in descending order.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: RealMatrix,
    pub s: DVector<f64>,
    pub v: RealMatrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Number of singular values above `tol * S_max`.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        let smax = self.s.get(0).copied().unwrap_or(0.0);
        self.s.iter().filter(|&&s| s > tol * smax && s > 0.0).count()
    }

    pub fn reconstruct(&self) -> RealMatrix {
        let mut us = self.u.clone();
        for (j, s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

pub fn ensure_finite(m: &RealMatrix, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub fn frobenius(m: &RealMatrix) -> f64 {
    m.norm()
}

pub fn to_complex(m: &RealMatrix) -> ComplexMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Default relative rank tolerance `max(m, n) * eps`.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

pub fn svd(m: &RealMatrix) -> Result<SvdFactors> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::InvalidArgument("svd of an empty matrix".into()));
    }
    ensure_finite(m, "svd input")?;
    let raw = nalgebra::SVD::try_new(m.clone(), true, true, f64::EPSILON, SVD_MAX_SWEEPS)
        .ok_or(Error::NoConvergence {
            what: "svd",
            iterations: SVD_MAX_SWEEPS,
        })?;
    let (u, v_t) = match (raw.u, raw.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("requested both singular vector sets"),
    };
    let k = raw.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        raw.singular_values[b]
            .total_cmp(&raw.singular_values[a])
            .then(a.cmp(&b))
    });
    let s = DVector::from_iterator(k, order.iter().map(|&j| raw.singular_values[j]));
    let u = RealMatrix::from_fn(m.nrows(), k, |i, j| u[(i, order[j])]);
    let v = RealMatrix::from_fn(m.ncols(), k, |i, j| v_t[(order[j], i)]);
    Ok(SvdFactors { u, s, v })
}

/// Moore-Penrose pseudoinverse. Singular values at or below `rank_tol * S_max`
/// are treated as zero.
pub fn pinv(m: &RealMatrix, rank_tol: f64) -> Result<RealMatrix> {
    let f = svd(m)?;
    let smax = f.s.get(0).copied().unwrap_or(0.0);
    let cut = rank_tol * smax;
    let mut vs = f.v.clone();
    for (j, &s) in f.s.iter().enumerate() {
        let inv = if s > cut && s > 0.0 { 1.0 / s } else { 0.0 };
        vs.column_mut(j).scale_mut(inv);
    }
    Ok(vs * f.u.transpose())
}

pub fn pinv_default(m: &RealMatrix) -> Result<RealMatrix> {
    pinv(m, default_rank_tol(m.nrows(), m.ncols()))
}

/// 2-norm condition number from the singular values.
pub fn condition_number(a: &RealMatrix) -> Result<f64> {
    let f = svd(a)?;
    let smax = f.s[0];
    let smin = f.s[f.s.len() - 1];
    Ok(if smin > 0.0 { smax / smin } else { f64::INFINITY })
}

/// Solves `X A = B` for `X`.
pub fn linsolve_right(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "linsolve_right needs a square coefficient, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.ncols() != a.nrows() {
        return Err(Error::Dimension(format!(
            "linsolve_right: B has {} columns, A is {}x{}",
            b.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    ensure_finite(b, "linsolve_right rhs")?;
    let cond = condition_number(a)?;
    if !(cond <= CONDITION_CAP) {
        return Err(Error::IllConditioned { cond });
    }
    // X A = B  <=>  Aᵀ Xᵀ = Bᵀ
    let lu = a.transpose().lu();
    let xt = lu
        .solve(&b.transpose())
        .ok_or(Error::IllConditioned { cond: f64::INFINITY })?;
    Ok(xt.transpose())
}
