//! Lifted consistent DMD with provable convergence. Auxiliary blocks split
//! the biaffine constraints so every subproblem has a closed form:
//!
//! ```text
//! min ½‖A′X − Y‖² + ½‖X − B′Y‖² + ν/2‖C − I‖² + μ/2‖A″‖² + μ/2‖B″‖²
//! s.t. C = AB, C = BA, A = A′ + A″, B = B′ + B″
//! ```
//!
//! Blocks are updated in the order A, A′, B, B′, then (C, A″, B″), then the
//! four scaled dual blocks.

use serde::{Deserialize, Serialize};

use crate::admm::{normalization_scale, stack, update_rho, validate_common, ResidualRecord};
use crate::dmd::{DmdResult, Method, ReducedData};
use crate::error::{Error, Result};
use crate::linalg::{linsolve_right, pinv_default, sylvester_solve, RealMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cdmd2Config {
    pub rho0: f64,
    pub tau: f64,
    /// Residual ratio that triggers a penalty change.
    pub mu_trigger: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iters: usize,
    /// Weight on `‖C − I‖²`.
    pub nu: f64,
    /// Weight on `‖A″‖²` and `‖B″‖²`.
    pub mu_reg: f64,
    pub adaptive_rho: bool,
}

impl Default for Cdmd2Config {
    fn default() -> Self {
        Cdmd2Config {
            rho0: 1.0,
            tau: 2.0,
            mu_trigger: 5.0,
            eps_abs: 1e-8,
            eps_rel: 1e-6,
            max_iters: 500,
            nu: 10.0,
            mu_reg: 1e-2,
            adaptive_rho: true,
        }
    }
}

impl Cdmd2Config {
    pub fn validate(&self) -> Result<()> {
        validate_common(
            self.rho0,
            self.tau,
            self.mu_trigger,
            self.eps_abs,
            self.eps_rel,
            self.max_iters,
        )?;
        if !(self.nu > 0.0 && self.mu_reg > 0.0) {
            return Err(Error::Config(format!(
                "nu and mu_reg must be positive, got nu={}, mu_reg={}",
                self.nu, self.mu_reg
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cdmd2State {
    pub a: RealMatrix,
    pub a_prime: RealMatrix,
    pub a_dprime: RealMatrix,
    pub b: RealMatrix,
    pub b_prime: RealMatrix,
    pub b_dprime: RealMatrix,
    pub c: RealMatrix,
    pub q1: RealMatrix,
    pub q2: RealMatrix,
    pub q3: RealMatrix,
    pub q4: RealMatrix,
    pub rho: f64,
    pub iter: usize,
}

impl Cdmd2State {
    pub fn initial(x: &RealMatrix, y: &RealMatrix, rho0: f64) -> Result<Self> {
        let r = x.nrows();
        let a = y * pinv_default(x)?;
        let b = x * pinv_default(y)?;
        let z = RealMatrix::zeros(r, r);
        Ok(Cdmd2State {
            a_prime: a.clone(),
            a,
            a_dprime: z.clone(),
            b_prime: b.clone(),
            b,
            b_dprime: z.clone(),
            c: RealMatrix::identity(r, r),
            q1: z.clone(),
            q2: z.clone(),
            q3: z.clone(),
            q4: z,
            rho: rho0,
            iter: 0,
        })
    }

    pub fn dual_stack(&self) -> RealMatrix {
        stack(&[&self.q1, &self.q2, &self.q3, &self.q4])
    }

    fn blocks(&self) -> [&RealMatrix; 11] {
        [
            &self.a,
            &self.a_prime,
            &self.a_dprime,
            &self.b,
            &self.b_prime,
            &self.b_dprime,
            &self.c,
            &self.q1,
            &self.q2,
            &self.q3,
            &self.q4,
        ]
    }

    fn is_finite(&self) -> bool {
        self.blocks().iter().all(|m| m.iter().all(|v| v.is_finite())) && self.rho.is_finite()
    }
}

/// Stages of one step, reported in execution order by [`cdmd2_step_traced`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cdmd2Stage {
    A,
    APrime,
    B,
    BPrime,
    C,
    ADoublePrime,
    BDoublePrime,
    Dual,
    Penalty,
}

/// `(AB − C; BA − C; A − A′ − A″; B − B′ − B″)`.
pub fn cdmd2_residual(s: &Cdmd2State) -> RealMatrix {
    stack(&[
        &(&s.a * &s.b - &s.c),
        &(&s.b * &s.a - &s.c),
        &(&s.a - &s.a_prime - &s.a_dprime),
        &(&s.b - &s.b_prime - &s.b_dprime),
    ])
}

/// Scaled-form augmented Lagrangian of the lifted problem.
pub fn cdmd2_lagrangian(s: &Cdmd2State, x: &RealMatrix, y: &RealMatrix, cfg: &Cdmd2Config) -> f64 {
    let r = s.a.nrows();
    let i = RealMatrix::identity(r, r);
    let q = s.dual_stack();
    0.5 * (&s.a_prime * x - y).norm_squared()
        + 0.5 * (x - &s.b_prime * y).norm_squared()
        + 0.5 * cfg.nu * (&s.c - i).norm_squared()
        + 0.5 * cfg.mu_reg * (s.a_dprime.norm_squared() + s.b_dprime.norm_squared())
        + 0.5 * s.rho * (cdmd2_residual(s) + &q).norm_squared()
        - 0.5 * s.rho * q.norm_squared()
}

pub fn update_a(s: &Cdmd2State) -> Result<RealMatrix> {
    let r = s.a.nrows();
    let bt = s.b.transpose();
    let a1 = RealMatrix::identity(r, r) + &bt * &s.b;
    let a2 = &s.b * &bt;
    let a3 = (&s.c - &s.q1) * &bt + &bt * (&s.c - &s.q2) + &s.a_prime + &s.a_dprime - &s.q3;
    sylvester_solve(&a1, &a2, &a3).map_err(|e| e.at_step("A"))
}

pub fn update_a_prime(s: &Cdmd2State, x: &RealMatrix, y: &RealMatrix) -> Result<RealMatrix> {
    let r = s.a.nrows();
    let lhs = RealMatrix::identity(r, r) * s.rho + x * x.transpose();
    let rhs = y * x.transpose() + (&s.a - &s.a_dprime + &s.q3) * s.rho;
    linsolve_right(&lhs, &rhs).map_err(|e| e.at_step("A'"))
}

pub fn update_b(s: &Cdmd2State) -> Result<RealMatrix> {
    let r = s.a.nrows();
    let at = s.a.transpose();
    let b1 = RealMatrix::identity(r, r) + &at * &s.a;
    let b2 = &s.a * &at;
    let b3 = &at * (&s.c - &s.q1) + (&s.c - &s.q2) * &at + &s.b_prime + &s.b_dprime - &s.q4;
    sylvester_solve(&b1, &b2, &b3).map_err(|e| e.at_step("B"))
}

pub fn update_b_prime(s: &Cdmd2State, x: &RealMatrix, y: &RealMatrix) -> Result<RealMatrix> {
    let r = s.a.nrows();
    let lhs = RealMatrix::identity(r, r) * s.rho + y * y.transpose();
    let rhs = x * y.transpose() + (&s.b - &s.b_dprime + &s.q4) * s.rho;
    linsolve_right(&lhs, &rhs).map_err(|e| e.at_step("B'"))
}

pub fn update_c(s: &Cdmd2State, nu: f64) -> RealMatrix {
    let r = s.a.nrows();
    let rho = s.rho;
    let w = rho / (2.0 * rho + nu);
    (&s.a * &s.b + &s.b * &s.a + &s.q1 + &s.q2) * w
        + RealMatrix::identity(r, r) * (nu / (2.0 * rho + nu))
}

pub fn update_a_dprime(s: &Cdmd2State, mu_reg: f64) -> RealMatrix {
    (&s.a - &s.a_prime + &s.q3) * (s.rho / (mu_reg + s.rho))
}

pub fn update_b_dprime(s: &Cdmd2State, mu_reg: f64) -> RealMatrix {
    (&s.b - &s.b_prime + &s.q4) * (s.rho / (mu_reg + s.rho))
}

pub fn cdmd2_step(
    s: &Cdmd2State,
    x: &RealMatrix,
    y: &RealMatrix,
    cfg: &Cdmd2Config,
) -> Result<Cdmd2State> {
    cdmd2_step_traced(s, x, y, cfg, &mut |_| {}).map(|(next, _)| next)
}

/// One full step; `trace` receives each stage as it runs.
pub fn cdmd2_step_traced(
    s: &Cdmd2State,
    x: &RealMatrix,
    y: &RealMatrix,
    cfg: &Cdmd2Config,
    trace: &mut dyn FnMut(Cdmd2Stage),
) -> Result<(Cdmd2State, ResidualRecord)> {
    let r = s.a.nrows();
    let mut n = s.clone();

    n.a = update_a(&n)?;
    trace(Cdmd2Stage::A);
    n.a_prime = update_a_prime(&n, x, y)?;
    trace(Cdmd2Stage::APrime);
    n.b = update_b(&n)?;
    trace(Cdmd2Stage::B);
    n.b_prime = update_b_prime(&n, x, y)?;
    trace(Cdmd2Stage::BPrime);
    // C, A″ and B″ form one block: all three read the pre-update dual
    let c = update_c(&n, cfg.nu);
    trace(Cdmd2Stage::C);
    let a_dprime = update_a_dprime(&n, cfg.mu_reg);
    trace(Cdmd2Stage::ADoublePrime);
    let b_dprime = update_b_dprime(&n, cfg.mu_reg);
    trace(Cdmd2Stage::BDoublePrime);
    n.c = c;
    n.a_dprime = a_dprime;
    n.b_dprime = b_dprime;

    let res = cdmd2_residual(&n);
    n.q1 += res.rows(0, r);
    n.q2 += res.rows(r, r);
    n.q3 += res.rows(2 * r, r);
    n.q4 += res.rows(3 * r, r);
    trace(Cdmd2Stage::Dual);
    n.iter = s.iter + 1;
    if !n.is_finite() {
        return Err(Error::Divergence { iteration: n.iter });
    }

    let rho = n.rho;
    let primal = res.norm();
    let diffs = [
        (&n.a, &s.a),
        (&n.a_prime, &s.a_prime),
        (&n.b, &s.b),
        (&n.b_prime, &s.b_prime),
        (&n.c, &s.c),
        (&n.a_dprime, &s.a_dprime),
        (&n.b_dprime, &s.b_dprime),
    ];
    let dual = rho * diffs.iter().map(|(p, q)| (*p - *q).norm_squared()).sum::<f64>().sqrt();
    let p_norm = stack(&[
        &(&n.a * &n.b),
        &(&n.b * &n.a),
        &(&n.a - &n.a_prime),
        &(&n.b - &n.b_prime),
    ])
    .norm();
    let q_map_norm = stack(&[&n.c, &n.c, &n.a_dprime, &n.b_dprime]).norm();
    let rf = r as f64;
    let eps_pri = (4.0 * rf).sqrt() * cfg.eps_abs + cfg.eps_rel * p_norm.max(q_map_norm);
    let eps_dual = (7.0 * rf).sqrt() * cfg.eps_abs + cfg.eps_rel * rho * n.dual_stack().norm();
    let objective = 0.5 * (&n.a_prime * x - y).norm_squared()
        + 0.5 * (x - &n.b_prime * y).norm_squared()
        + 0.5 * cfg.nu * (&n.c - RealMatrix::identity(r, r)).norm_squared()
        + 0.5 * cfg.mu_reg * (n.a_dprime.norm_squared() + n.b_dprime.norm_squared());
    let record = ResidualRecord {
        iteration: n.iter,
        primal,
        dual,
        objective,
        eps_pri,
        eps_dual,
        rho,
    };
    if !record.converged() && cfg.adaptive_rho {
        let new_rho = update_rho(rho, primal, dual, cfg.tau, cfg.mu_trigger);
        if new_rho != rho {
            let factor = rho / new_rho;
            for q in [&mut n.q1, &mut n.q2, &mut n.q3, &mut n.q4] {
                *q *= factor;
            }
            n.rho = new_rho;
        }
    }
    trace(Cdmd2Stage::Penalty);
    Ok((n, record))
}

#[derive(Debug, Clone)]
pub struct Cdmd2Output {
    pub result: DmdResult,
    pub backward: RealMatrix,
    pub history: Vec<ResidualRecord>,
    pub converged: bool,
    pub iterations: usize,
    pub state: Cdmd2State,
}

pub fn cdmd2(rd: &ReducedData, cfg: &Cdmd2Config) -> Result<Cdmd2Output> {
    cdmd2_with_observer(rd, cfg, |_| {})
}

/// Like [`crate::admm::cdmd_with_observer`], the iteration runs on
/// normalized data.
pub fn cdmd2_with_observer(
    rd: &ReducedData,
    cfg: &Cdmd2Config,
    mut observer: impl FnMut(&ResidualRecord),
) -> Result<Cdmd2Output> {
    cfg.validate()?;
    let c = normalization_scale(&rd.x);
    let (x, y) = (&(&rd.x * c), &(&rd.y * c));
    let mut state = Cdmd2State::initial(x, y, cfg.rho0)?;
    let mut history = Vec::new();
    let mut converged = false;
    while history.len() < cfg.max_iters {
        let (next, mut rec) = cdmd2_step_traced(&state, x, y, cfg, &mut |_| {})?;
        rec.objective /= c * c;
        state = next;
        observer(&rec);
        history.push(rec);
        if rec.converged() {
            converged = true;
            break;
        }
    }
    let result = DmdResult::from_operator(state.a.clone(), rd, Method::Cdmd2)?;
    Ok(Cdmd2Output {
        result,
        backward: state.b.clone(),
        iterations: history.len(),
        history,
        converged,
        state,
    })
}
