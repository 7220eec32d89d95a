//! Consistent DMD: ADMM on
//!
//! ```text
//! min ½‖AX − Y‖² + ½‖X − BY‖²   s.t.  AB = I, BA = I
//! ```
//!
//! with the scaled dual `Q = (Q1; Q2)`. Each primal block update is a
//! Sylvester equation.

use serde::{Deserialize, Serialize};

use crate::dmd::{DmdResult, Method, ReducedData};
use crate::error::{Error, Result};
use crate::linalg::{default_rank_tol, pinv_default, svd, sylvester_solve, RealMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub rho0: f64,
    pub tau: f64,
    pub mu: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iters: usize,
    /// When false, ρ stays at `rho0` for the whole solve.
    pub adaptive_rho: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            rho0: 1.0,
            tau: 2.0,
            mu: 5.0,
            eps_abs: 1e-8,
            eps_rel: 1e-6,
            max_iters: 500,
            adaptive_rho: true,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        validate_common(self.rho0, self.tau, self.mu, self.eps_abs, self.eps_rel, self.max_iters)
    }
}

pub(crate) fn validate_common(
    rho0: f64,
    tau: f64,
    mu: f64,
    eps_abs: f64,
    eps_rel: f64,
    max_iters: usize,
) -> Result<()> {
    if !(rho0 > 0.0 && rho0.is_finite()) {
        return Err(Error::Config(format!("rho0 must be positive, got {rho0}")));
    }
    if !(tau > 1.0 && tau.is_finite()) {
        return Err(Error::Config(format!("tau must exceed 1, got {tau}")));
    }
    if !(mu > 1.0 && mu.is_finite()) {
        return Err(Error::Config(format!("mu must exceed 1, got {mu}")));
    }
    if !(eps_abs > 0.0 && eps_rel > 0.0) {
        return Err(Error::Config(format!(
            "tolerances must be positive, got eps_abs={eps_abs}, eps_rel={eps_rel}"
        )));
    }
    if max_iters == 0 {
        return Err(Error::Config("max_iters must be at least 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub a: RealMatrix,
    pub b: RealMatrix,
    pub q1: RealMatrix,
    pub q2: RealMatrix,
    pub rho: f64,
    pub iter: usize,
}

impl AdmmState {
    /// `A⁰ = Y X⁺`, `B⁰ = X Y⁺`, `Q⁰ = 0`.
    pub fn initial(x: &RealMatrix, y: &RealMatrix, rho0: f64) -> Result<Self> {
        let r = x.nrows();
        Ok(AdmmState {
            a: y * pinv_default(x)?,
            b: x * pinv_default(y)?,
            q1: RealMatrix::zeros(r, r),
            q2: RealMatrix::zeros(r, r),
            rho: rho0,
            iter: 0,
        })
    }

    pub fn dual_stack(&self) -> RealMatrix {
        stack(&[&self.q1, &self.q2])
    }

    fn is_finite(&self) -> bool {
        [&self.a, &self.b, &self.q1, &self.q2]
            .iter()
            .all(|m| m.iter().all(|v| v.is_finite()))
            && self.rho.is_finite()
    }
}

/// One row of the per-iteration convergence log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub iteration: usize,
    pub primal: f64,
    pub dual: f64,
    pub objective: f64,
    pub eps_pri: f64,
    pub eps_dual: f64,
    pub rho: f64,
}

impl ResidualRecord {
    pub fn converged(&self) -> bool {
        self.primal <= self.eps_pri && self.dual <= self.eps_dual
    }
}

pub(crate) fn stack(blocks: &[&RealMatrix]) -> RealMatrix {
    let cols = blocks[0].ncols();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = RealMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.rows_mut(at, b.nrows()).copy_from(*b);
        at += b.nrows();
    }
    out
}

/// `(AB − I; BA − I)`.
pub fn consistency_residual(a: &RealMatrix, b: &RealMatrix) -> RealMatrix {
    let r = a.nrows();
    let i = RealMatrix::identity(r, r);
    stack(&[&(a * b - &i), &(b * a - &i)])
}

/// `½‖AX − Y‖² + ½‖X − BY‖²`.
pub fn cdmd_objective(a: &RealMatrix, b: &RealMatrix, x: &RealMatrix, y: &RealMatrix) -> f64 {
    0.5 * (a * x - y).norm_squared() + 0.5 * (x - b * y).norm_squared()
}

/// Scaled-form augmented Lagrangian at `state`.
pub fn augmented_lagrangian(state: &AdmmState, x: &RealMatrix, y: &RealMatrix) -> f64 {
    let r = consistency_residual(&state.a, &state.b);
    let q = state.dual_stack();
    cdmd_objective(&state.a, &state.b, x, y) + 0.5 * state.rho * (&r + &q).norm_squared()
        - 0.5 * state.rho * q.norm_squared()
}

/// Gradient of the augmented Lagrangian with respect to `A`.
pub fn lagrangian_grad_a(state: &AdmmState, x: &RealMatrix, y: &RealMatrix) -> RealMatrix {
    let (a, b, rho) = (&state.a, &state.b, state.rho);
    let r = a.nrows();
    let i = RealMatrix::identity(r, r);
    (a * x - y) * x.transpose()
        + (a * b - &i + &state.q1) * b.transpose() * rho
        + b.transpose() * (b * a - &i + &state.q2) * rho
}

/// Gradient of the augmented Lagrangian with respect to `B`.
pub fn lagrangian_grad_b(state: &AdmmState, x: &RealMatrix, y: &RealMatrix) -> RealMatrix {
    let (a, b, rho) = (&state.a, &state.b, state.rho);
    let r = a.nrows();
    let i = RealMatrix::identity(r, r);
    (b * y - x) * y.transpose()
        + a.transpose() * (a * b - &i + &state.q1) * rho
        + (b * a - &i + &state.q2) * a.transpose() * rho
}

/// Minimizer of the Lagrangian over `A` with `B`, `Q`, `ρ` held at `state`.
pub fn update_a(state: &AdmmState, x: &RealMatrix, y: &RealMatrix) -> Result<RealMatrix> {
    let (b, rho) = (&state.b, state.rho);
    let bt = b.transpose();
    let c1 = &bt * b * rho;
    let c2 = x * x.transpose() + b * &bt * rho;
    let c3 = y * x.transpose() + &bt * (2.0 * rho) - &state.q1 * &bt * rho - &bt * &state.q2 * rho;
    sylvester_solve(&c1, &c2, &c3).map_err(|e| e.at_step("A"))
}

/// Minimizer of the Lagrangian over `B` with `A`, `Q`, `ρ` held at `state`.
pub fn update_b(state: &AdmmState, x: &RealMatrix, y: &RealMatrix) -> Result<RealMatrix> {
    let (a, rho) = (&state.a, state.rho);
    let at = a.transpose();
    let d1 = &at * a * rho;
    let d2 = y * y.transpose() + a * &at * rho;
    let d3 = x * y.transpose() + &at * (2.0 * rho) - &at * &state.q1 * rho - &state.q2 * &at * rho;
    sylvester_solve(&d1, &d2, &d3).map_err(|e| e.at_step("B"))
}

/// Residual-balancing penalty update.
pub fn update_rho(rho: f64, primal: f64, dual: f64, tau: f64, mu: f64) -> f64 {
    if primal > mu * dual {
        rho * tau
    } else if dual > mu * primal {
        rho / tau
    } else {
        rho
    }
}

/// Iteration driver that owns the mutable state of one solve.
pub struct CdmdSolver<'a> {
    x: &'a RealMatrix,
    y: &'a RealMatrix,
    cfg: AdmmConfig,
    state: AdmmState,
}

impl<'a> CdmdSolver<'a> {
    pub fn new(x: &'a RealMatrix, y: &'a RealMatrix, cfg: AdmmConfig) -> Result<Self> {
        cfg.validate()?;
        if x.shape() != y.shape() {
            return Err(Error::Dimension(format!(
                "X is {:?} but Y is {:?}",
                x.shape(),
                y.shape()
            )));
        }
        warn_if_rank_deficient(x, "X");
        warn_if_rank_deficient(y, "Y");
        let state = AdmmState::initial(x, y, cfg.rho0)?;
        Ok(CdmdSolver { x, y, cfg, state })
    }

    pub fn with_state(x: &'a RealMatrix, y: &'a RealMatrix, cfg: AdmmConfig, state: AdmmState) -> Result<Self> {
        cfg.validate()?;
        Ok(CdmdSolver { x, y, cfg, state })
    }

    pub fn state(&self) -> &AdmmState {
        &self.state
    }

    pub fn into_state(self) -> AdmmState {
        self.state
    }

    /// One pass: A, B, dual ascent, then (unless converged) the ρ update
    /// with the matching rescale of the scaled dual.
    pub fn step(&mut self) -> Result<ResidualRecord> {
        let r = self.state.a.nrows();
        let iteration = self.state.iter + 1;
        let prev_a = self.state.a.clone();
        let prev_b = self.state.b.clone();

        self.state.a = update_a(&self.state, self.x, self.y)?;
        self.state.b = update_b(&self.state, self.x, self.y)?;
        let ab = &self.state.a * &self.state.b;
        let ba = &self.state.b * &self.state.a;
        let i = RealMatrix::identity(r, r);
        let r1 = &ab - &i;
        let r2 = &ba - &i;
        self.state.q1 += &r1;
        self.state.q2 += &r2;
        self.state.iter = iteration;
        if !self.state.is_finite() {
            return Err(Error::Divergence { iteration });
        }

        let rho = self.state.rho;
        let primal = (r1.norm_squared() + r2.norm_squared()).sqrt();
        let dual = rho * ((&self.state.a - prev_a).norm_squared() + (&self.state.b - prev_b).norm_squared()).sqrt();
        let eps_pri = (r as f64).sqrt() * self.cfg.eps_abs + self.cfg.eps_rel * ab.norm().max(ba.norm());
        let q_norm = (self.state.q1.norm_squared() + self.state.q2.norm_squared()).sqrt();
        let eps_dual = (2.0 * r as f64).sqrt() * self.cfg.eps_abs + self.cfg.eps_rel * rho * q_norm;
        let record = ResidualRecord {
            iteration,
            primal,
            dual,
            objective: cdmd_objective(&self.state.a, &self.state.b, self.x, self.y),
            eps_pri,
            eps_dual,
            rho,
        };
        if !record.converged() && self.cfg.adaptive_rho {
            let new_rho = update_rho(rho, primal, dual, self.cfg.tau, self.cfg.mu);
            if new_rho != rho {
                // keep the unscaled multiplier ρQ continuous
                let factor = rho / new_rho;
                self.state.q1 *= factor;
                self.state.q2 *= factor;
                self.state.rho = new_rho;
            }
        }
        Ok(record)
    }
}

fn warn_if_rank_deficient(m: &RealMatrix, name: &str) {
    if let Ok(f) = svd(m) {
        let rank = f.numerical_rank(default_rank_tol(m.nrows(), m.ncols()));
        if rank < m.nrows() {
            log::warn!(
                "{name} has numerical rank {rank} < {}; the fit terms are not strongly convex",
                m.nrows()
            );
        }
    }
}

#[derive(Debug, Clone)]
pub struct CdmdOutput {
    pub result: DmdResult,
    /// Final backward operator `B`.
    pub backward: RealMatrix,
    pub history: Vec<ResidualRecord>,
    pub converged: bool,
    pub iterations: usize,
    pub state: AdmmState,
}

pub fn cdmd(rd: &ReducedData, cfg: &AdmmConfig) -> Result<CdmdOutput> {
    cdmd_with_observer(rd, cfg, |_| {})
}

/// Factor `c` such that `c·X` has `trace(c² XXᵀ) = r`.
///
/// The fit terms scale with the data while the consistency constraints do
/// not, so a fixed ρ behaves very differently on data of different
/// magnitude. The minimizer itself is unchanged by a common scaling of `X`
/// and `Y`, so the solvers run on normalized data.
pub fn normalization_scale(x: &RealMatrix) -> f64 {
    let norm = x.norm();
    if norm > 0.0 {
        (x.nrows() as f64).sqrt() / norm
    } else {
        1.0
    }
}

/// Runs the solver, passing each residual record to `observer` as it is
/// produced.
///
/// The iteration runs on normalized data (see [`normalization_scale`]), so
/// `rho` and the dual state refer to that scaling; recorded objectives are
/// in the original units.
pub fn cdmd_with_observer(
    rd: &ReducedData,
    cfg: &AdmmConfig,
    mut observer: impl FnMut(&ResidualRecord),
) -> Result<CdmdOutput> {
    let c = normalization_scale(&rd.x);
    let (x, y) = (&rd.x * c, &rd.y * c);
    let mut solver = CdmdSolver::new(&x, &y, *cfg)?;
    let mut history = Vec::new();
    let mut converged = false;
    while history.len() < cfg.max_iters {
        let mut rec = solver.step()?;
        rec.objective /= c * c;
        observer(&rec);
        history.push(rec);
        if rec.converged() {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("CDMD stopped at max_iters={} without meeting tolerances", cfg.max_iters);
    }
    let state = solver.into_state();
    let result = DmdResult::from_operator(state.a.clone(), rd, Method::Cdmd)?;
    Ok(CdmdOutput {
        result,
        backward: state.b.clone(),
        iterations: history.len(),
        history,
        converged,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmd::{pod_reduce, RankPolicy, SnapshotData};
    use crate::linalg::testutil::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn random_state(seed: u64, r: usize, rho: f64) -> AdmmState {
        let mut g = rng(seed);
        AdmmState {
            a: random_matrix(&mut g, r, r),
            b: random_matrix(&mut g, r, r),
            q1: random_matrix(&mut g, r, r) * 0.1,
            q2: random_matrix(&mut g, r, r) * 0.1,
            rho,
            iter: 0,
        }
    }

    #[test]
    fn residual_examples() {
        let a = RealMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        let b = a.clone().try_inverse().unwrap();
        assert!(consistency_residual(&a, &b).norm() < 1e-15);
        let i = RealMatrix::identity(3, 3);
        assert_eq!(consistency_residual(&i, &i), RealMatrix::zeros(6, 3));
        let r = consistency_residual(&(&i * 2.0), &i);
        assert_eq!(r, stack(&[&i, &i]));
    }

    #[test]
    fn objective_examples() {
        let r = 3;
        let z = RealMatrix::zeros(r, r);
        let i = RealMatrix::identity(r, r);
        assert_eq!(cdmd_objective(&z, &z, &i, &i), 3.0);
        let mut g = rng(1);
        let x = random_matrix(&mut g, r, 7);
        let a = random_matrix(&mut g, r, r) + &i;
        let y = &a * &x;
        let b = a.clone().try_inverse().unwrap();
        assert!(cdmd_objective(&a, &b, &x, &y) < 1e-25);
    }

    #[test]
    fn objective_matches_naive_sum() {
        let mut g = rng(2);
        let (a, b) = (random_matrix(&mut g, 3, 3), random_matrix(&mut g, 3, 3));
        let (x, y) = (random_matrix(&mut g, 3, 8), random_matrix(&mut g, 3, 8));
        let mut naive = 0.0;
        for i in 0..3 {
            for j in 0..8 {
                let mut ax = 0.0;
                let mut by = 0.0;
                for k in 0..3 {
                    ax += a[(i, k)] * x[(k, j)];
                    by += b[(i, k)] * y[(k, j)];
                }
                naive += 0.5 * (ax - y[(i, j)]).powi(2) + 0.5 * (x[(i, j)] - by).powi(2);
            }
        }
        assert!((cdmd_objective(&a, &b, &x, &y) - naive).abs() <= 1e-12 * naive);
    }

    #[test]
    fn update_a_zeroes_gradient() {
        let mut g = rng(3);
        let x = random_matrix(&mut g, 4, 10);
        let y = random_matrix(&mut g, 4, 10);
        let mut s = random_state(4, 4, 2.0);
        s.a = update_a(&s, &x, &y).unwrap();
        assert!(lagrangian_grad_a(&s, &x, &y).norm() <= 1e-8);
    }

    #[test]
    fn update_b_zeroes_gradient() {
        let mut g = rng(5);
        let x = random_matrix(&mut g, 4, 10);
        let y = random_matrix(&mut g, 4, 10);
        let mut s = random_state(6, 4, 0.7);
        s.b = update_b(&s, &x, &y).unwrap();
        assert!(lagrangian_grad_b(&s, &x, &y).norm() <= 1e-8);
    }

    #[test]
    fn small_rho_gives_least_squares() {
        let mut g = rng(7);
        let x = random_matrix(&mut g, 3, 9);
        let y = random_matrix(&mut g, 3, 9);
        let s = random_state(8, 3, 1e-10);
        let a = update_a(&s, &x, &y).unwrap();
        assert!((a - &y * pinv_default(&x).unwrap()).norm() < 1e-7);
        let b = update_b(&s, &x, &y).unwrap();
        assert!((b - &x * pinv_default(&y).unwrap()).norm() < 1e-7);
    }

    #[test]
    fn update_a_is_local_minimum() {
        let mut g = rng(9);
        let x = random_matrix(&mut g, 3, 8);
        let y = random_matrix(&mut g, 3, 8);
        let mut s = random_state(10, 3, 1.5);
        s.a = update_a(&s, &x, &y).unwrap();
        let best = augmented_lagrangian(&s, &x, &y);
        for _ in 0..100 {
            let d = random_matrix(&mut g, 3, 3);
            let d = &d * (1e-3 / d.norm());
            let mut p = s.clone();
            p.a += d;
            assert!(augmented_lagrangian(&p, &x, &y) >= best);
        }
    }

    #[test]
    fn update_b_mirrors_update_a_under_role_swap() {
        // swapping (X, Y) and (A, B) and exchanging the dual blocks turns
        // the B-subproblem into the A-subproblem
        let mut g = rng(11);
        let x = random_matrix(&mut g, 3, 8);
        let y = random_matrix(&mut g, 3, 8);
        let s = random_state(12, 3, 0.9);
        let b = update_b(&s, &x, &y).unwrap();
        let swapped = AdmmState {
            a: s.b.clone(),
            b: s.a.clone(),
            q1: s.q2.clone(),
            q2: s.q1.clone(),
            ..s.clone()
        };
        let a_sw = update_a(&swapped, &y, &x).unwrap();
        assert_relative_eq!(b, a_sw, epsilon = 1e-10);
    }

    #[test]
    fn rho_update_rule() {
        assert_eq!(update_rho(1.0, 10.0, 1.0, 2.0, 5.0), 2.0);
        assert_eq!(update_rho(1.0, 1.0, 10.0, 2.0, 5.0), 0.5);
        assert_eq!(update_rho(1.0, 3.0, 3.0, 2.0, 5.0), 1.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut g = rng(13);
        let x = random_matrix(&mut g, 3, 7);
        let y = random_matrix(&mut g, 3, 7);
        let s = random_state(14, 3, 1.3);
        let ga = lagrangian_grad_a(&s, &x, &y);
        let gb = lagrangian_grad_b(&s, &x, &y);
        let h = 1e-6;
        for i in 0..3 {
            for j in 0..3 {
                let mut p = s.clone();
                let mut m = s.clone();
                p.a[(i, j)] += h;
                m.a[(i, j)] -= h;
                let fd = (augmented_lagrangian(&p, &x, &y) - augmented_lagrangian(&m, &x, &y)) / (2.0 * h);
                assert!((fd - ga[(i, j)]).abs() <= 1e-4 * ga[(i, j)].abs().max(1.0));
                let mut p = s.clone();
                let mut m = s.clone();
                p.b[(i, j)] += h;
                m.b[(i, j)] -= h;
                let fd = (augmented_lagrangian(&p, &x, &y) - augmented_lagrangian(&m, &x, &y)) / (2.0 * h);
                assert!((fd - gb[(i, j)]).abs() <= 1e-4 * gb[(i, j)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn forward_backward_asymmetry() {
        let mut g = rng(15);
        let x = random_matrix(&mut g, 3, 6);
        let y = random_matrix(&mut g, 3, 6);
        let a = random_matrix(&mut g, 3, 3) + RealMatrix::identity(3, 3) * 2.0;
        let ainv = a.clone().try_inverse().unwrap();
        let fwd = (&a * &x - &y).norm_squared();
        let bwd = (&x - &ainv * &y).norm_squared();
        assert!((fwd - bwd).abs() > 1e-6);

        let q = random_matrix(&mut g, 3, 3).qr().q();
        let fwd = (&q * &x - &y).norm_squared();
        let bwd = (&x - q.transpose() * &y).norm_squared();
        assert!((fwd - bwd).abs() <= 1e-10);
    }

    #[test]
    fn hessian_surrogate_positive_definite() {
        let mut g = rng(16);
        let x = random_matrix(&mut g, 4, 12);
        let h = &x * x.transpose();
        let evals = h.symmetric_eigenvalues();
        assert!(evals.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn identity_dynamics_converge_immediately() {
        let mut g = rng(17);
        let x = random_matrix(&mut g, 3, 10);
        let data = SnapshotData::new(x.clone(), x, 1.0).unwrap();
        let rd = pod_reduce(&data, 3, RankPolicy::Strict).unwrap();
        let out = cdmd(&rd, &AdmmConfig::default()).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 2);
        assert_relative_eq!(out.result.a, RealMatrix::identity(3, 3), epsilon = 1e-10);
        assert_relative_eq!(out.backward, RealMatrix::identity(3, 3), epsilon = 1e-10);
    }

    #[test]
    fn fixed_rho_dual_is_sum_of_residuals() {
        let mut g = rng(18);
        let x = random_matrix(&mut g, 3, 9);
        let y = &x * 0.8 + random_matrix(&mut g, 3, 9) * 0.3;
        let cfg = AdmmConfig {
            adaptive_rho: false,
            ..AdmmConfig::default()
        };
        let mut solver = CdmdSolver::new(&x, &y, cfg).unwrap();
        let mut sum = RealMatrix::zeros(6, 3);
        for _ in 0..15 {
            solver.step().unwrap();
            let s = solver.state();
            sum += consistency_residual(&s.a, &s.b);
            assert_eq!(s.rho, cfg.rho0);
        }
        assert!((solver.state().dual_stack() - sum).norm() <= 1e-12);
    }

    #[test]
    fn rho_change_rescales_dual() {
        let mut g = rng(19);
        let x = random_matrix(&mut g, 2, 6);
        let y = random_matrix(&mut g, 2, 6);
        let mut solver = CdmdSolver::new(&x, &y, AdmmConfig::default()).unwrap();
        for _ in 0..30 {
            let before_q = solver.state().dual_stack();
            let rec = solver.step().unwrap();
            let s = solver.state();
            if s.rho != rec.rho {
                let unscaled_after = s.dual_stack() * s.rho;
                let r = consistency_residual(&s.a, &s.b);
                let unscaled_before = (before_q + r) * rec.rho;
                assert!((unscaled_after - unscaled_before).norm() <= 1e-10 * (1.0 + s.rho));
                return;
            }
        }
    }

    #[test]
    fn random_noisy_problem_converges() {
        let mut g = rng(20);
        let a0 = RealMatrix::from_row_slice(2, 2, &[0.9, -0.3, 0.3, 0.9]);
        let x = random_matrix(&mut g, 2, 20);
        let noise = RealMatrix::from_fn(2, 20, |_, _| g.random_range(-0.05..0.05));
        let y = &a0 * &x + noise;
        let data = SnapshotData::new(x, y, 1.0).unwrap();
        let rd = pod_reduce(&data, 2, RankPolicy::Strict).unwrap();
        let out = cdmd(&rd, &AdmmConfig::default()).unwrap();
        assert!(out.converged, "iterations {}", out.iterations);
        let last = out.history.last().unwrap();
        assert!(last.primal <= last.eps_pri);
    }
}
