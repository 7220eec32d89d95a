//! Monte Carlo studies over noisy benchmark data: eigenvalue scatter with
//! confidence ellipses, consistency sweeps, trajectory errors and solver
//! convergence statistics.

mod config;
mod experiment;

pub use config::{parse_solver_key, ExperimentConfig, ExperimentKind};
pub use experiment::{run_experiment, ExperimentOutcome};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::admm::ResidualRecord;
use crate::dmd::{reconstruct_trajectory, Method, SnapshotData};
use crate::error::{Error, Result};
use crate::linalg::RealMatrix;
use crate::runner::{run_method, MethodOutput, SolverConfig};
use crate::systems::{
    add_noise, gen_linear_periodic, gen_sine_superposition, LinearPeriodicSpec, NoiseLevel,
    NoiseSpec, SineSuperpositionSpec,
};

/// Fraction of estimates kept, nearest to the truth, when fitting an ellipse.
pub const ELLIPSE_COVERAGE: f64 = 0.95;
pub const MIN_ELLIPSE_TRIALS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    LinearPeriodic(LinearPeriodicSpec),
    Sine(SineSuperpositionSpec),
}

impl SystemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::LinearPeriodic(_) => "linear_periodic",
            SystemSpec::Sine(_) => "sine",
        }
    }

    /// Number of snapshot pairs.
    pub fn n(&self) -> usize {
        match self {
            SystemSpec::LinearPeriodic(s) => s.n,
            SystemSpec::Sine(s) => s.t.len().saturating_sub(1),
        }
    }

    /// Same system sampled with `n` pairs over the same time span.
    pub fn with_n(&self, n: usize) -> SystemSpec {
        match self {
            SystemSpec::LinearPeriodic(s) => SystemSpec::LinearPeriodic(LinearPeriodicSpec { n, ..*s }),
            SystemSpec::Sine(s) => {
                let t0 = s.t.first().copied().unwrap_or(0.0);
                let t1 = s.t.last().copied().unwrap_or(4.0);
                let h = (t1 - t0) / n.max(1) as f64;
                SystemSpec::Sine(SineSuperpositionSpec {
                    t: (0..=n).map(|j| t0 + j as f64 * h).collect(),
                    ..s.clone()
                })
            }
        }
    }

    pub fn generate(&self) -> Result<SnapshotData> {
        match self {
            SystemSpec::LinearPeriodic(s) => gen_linear_periodic(s),
            SystemSpec::Sine(s) => gen_sine_superposition(s),
        }
    }

    /// Analytic rank of the data: 2 for the linear system, 2 per active sine mode.
    pub fn default_rank(&self) -> usize {
        match self {
            SystemSpec::LinearPeriodic(_) => 2,
            SystemSpec::Sine(s) => s.eigenvalues().len(),
        }
    }

    /// Eigenvalues tracked by default: `−i` for the linear system, the
    /// upper-half-plane eigenvalue of each sine mode.
    pub fn default_track(&self) -> Vec<Complex64> {
        match self {
            SystemSpec::LinearPeriodic(_) => vec![Complex64::new(0.0, -1.0)],
            SystemSpec::Sine(s) => s.eigenvalues().into_iter().filter(|z| z.im > 0.0).collect(),
        }
    }
}

/// Everything that defines one cell of a study except the method and seeds.
#[derive(Debug, Clone)]
pub struct Study {
    pub system: SystemSpec,
    pub r: usize,
    pub noise: NoiseLevel,
    pub solver: SolverConfig,
}

impl Study {
    pub fn new(system: SystemSpec, noise: NoiseLevel) -> Study {
        Study {
            r: system.default_rank(),
            system,
            noise,
            solver: SolverConfig::default(),
        }
    }
}

/// Runs `f(t, seedbase + t)` for every trial in parallel; results are in
/// trial order regardless of scheduling.
pub fn run_trials<T: Send>(
    n_trials: usize,
    seedbase: u64,
    f: impl Fn(usize, u64) -> Result<T> + Sync,
) -> Vec<Result<T>> {
    (0..n_trials)
        .into_par_iter()
        .map(|t| f(t, seedbase.wrapping_add(t as u64)))
        .collect()
}

/// Clean data and the per-trial noisy copies of one study cell.
pub struct TrialData {
    pub clean: SnapshotData,
    pub sigma2: f64,
    noise: NoiseLevel,
}

impl TrialData {
    pub fn new(study: &Study) -> Result<TrialData> {
        let clean = study.system.generate()?;
        let sigma2 = NoiseSpec { level: study.noise, seed: 0 }.resolve_variance(&clean)?;
        Ok(TrialData {
            clean,
            sigma2,
            noise: study.noise,
        })
    }

    pub fn noisy(&self, seed: u64) -> Result<SnapshotData> {
        add_noise(&self.clean, &NoiseSpec { level: self.noise, seed })
    }

    /// `z_0 .. z_n` of the clean data.
    pub fn reference_path(&self) -> RealMatrix {
        let (m, n) = self.clean.xtilde.shape();
        let mut z = RealMatrix::zeros(m, n + 1);
        z.columns_mut(0, n).copy_from(&self.clean.xtilde);
        z.set_column(n, &self.clean.ytilde.column(n - 1));
        z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub message: String,
}

/// Tracked-eigenvalue estimates of one method over seeded trials.
#[derive(Debug, Clone, Serialize)]
pub struct TrialBatch {
    pub method: Method,
    #[serde(serialize_with = "ser_complex")]
    pub truth: Complex64,
    /// One entry per trial; `None` where the method failed.
    #[serde(skip)]
    pub estimates: Vec<Option<Complex64>>,
    pub n_trials: usize,
    pub seedbase: u64,
    pub failures: Vec<TrialFailure>,
    /// Iterative methods that stopped at the iteration cap.
    pub unconverged: usize,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl TrialBatch {
    /// Builds a batch from raw estimates (all successful).
    pub fn from_estimates(method: Method, truth: Complex64, estimates: Vec<Complex64>) -> Self {
        TrialBatch {
            method,
            truth,
            n_trials: estimates.len(),
            estimates: estimates.into_iter().map(Some).collect(),
            seedbase: 0,
            failures: Vec::new(),
            unconverged: 0,
        }
    }

    pub fn successful(&self) -> Vec<Complex64> {
        self.estimates.iter().flatten().copied().collect()
    }

    /// Mean over all successful estimates.
    pub fn lambda_avg(&self) -> Result<Complex64> {
        let s = self.successful();
        if s.is_empty() {
            return Err(Error::DegenerateBatch("no successful trials".into()));
        }
        Ok(s.iter().sum::<Complex64>() / s.len() as f64)
    }
}

/// The entry of `eigs` nearest `truth`; the first one on ties.
pub fn match_eigenvalue(eigs: &[Complex64], truth: Complex64) -> Result<Complex64> {
    let mut best: Option<(Complex64, f64)> = None;
    for &z in eigs {
        let d = (z - truth).norm();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((z, d));
        }
    }
    best.map(|(z, _)| z)
        .ok_or_else(|| Error::InvalidArgument("no eigenvalues to match".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipseSummary {
    /// Mean of the selected estimates.
    #[serde(serialize_with = "ser_complex")]
    pub center: Complex64,
    /// `(r_major, r_min)`.
    pub semi_axes: (f64, f64),
    /// Angle of the major axis from the real axis, radians in `(−π/2, π/2]`.
    pub orientation: f64,
    pub coverage: f64,
    pub n_selected: usize,
}

impl EllipseSummary {
    pub fn r_min(&self) -> f64 {
        self.semi_axes.1
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let d = z - self.center;
        let (c, s) = (self.orientation.cos(), self.orientation.sin());
        let u = c * d.re + s * d.im;
        let v = -s * d.re + c * d.im;
        let (a, b) = self.semi_axes;
        (u / a).powi(2) + (v / b).powi(2) <= 1.0
    }
}

/// Covariance ellipse of the `ELLIPSE_COVERAGE` fraction of estimates
/// nearest the truth, inflated until every selected estimate lies inside.
pub fn confidence_ellipse(batch: &TrialBatch) -> Result<EllipseSummary> {
    let pts = batch.successful();
    if pts.len() < MIN_ELLIPSE_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "an ellipse needs at least {MIN_ELLIPSE_TRIALS} successful trials, got {}",
            pts.len()
        )));
    }
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&i, &j| {
        (pts[i] - batch.truth)
            .norm()
            .total_cmp(&(pts[j] - batch.truth).norm())
            .then(i.cmp(&j))
    });
    let k = ((ELLIPSE_COVERAGE * pts.len() as f64).ceil() as usize).min(pts.len());
    let sel: Vec<Complex64> = order[..k].iter().map(|&i| pts[i]).collect();
    let center = sel.iter().sum::<Complex64>() / k as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for z in &sel {
        let d = z - center;
        sxx += d.re * d.re;
        syy += d.im * d.im;
        sxy += d.re * d.im;
    }
    sxx /= k as f64;
    syy /= k as f64;
    sxy /= k as f64;

    let half_tr = 0.5 * (sxx + syy);
    let disc = (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
    let l_major = half_tr + disc;
    let l_minor = (half_tr - disc).max(0.0);
    let scale = sel.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let floor = 64.0 * f64::EPSILON * scale;
    if l_minor.sqrt() <= floor {
        return Err(Error::DegenerateBatch(format!(
            "estimates have no spread in some direction (minor std {:.3e})",
            l_minor.sqrt()
        )));
    }
    let mut orientation = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    if orientation <= -std::f64::consts::FRAC_PI_2 {
        orientation += std::f64::consts::PI;
    }
    let (c, s) = (orientation.cos(), orientation.sin());
    // squared Mahalanobis radius that reaches the farthest selected point
    let reach = sel
        .iter()
        .map(|z| {
            let d = z - center;
            let u = c * d.re + s * d.im;
            let v = -s * d.re + c * d.im;
            u * u / l_major + v * v / l_minor
        })
        .fold(0.0, f64::max);
    let inflate = (reach * (1.0 + 1e-9)).sqrt();
    Ok(EllipseSummary {
        center,
        semi_axes: (inflate * l_major.sqrt(), inflate * l_minor.sqrt()),
        orientation,
        coverage: ELLIPSE_COVERAGE,
        n_selected: k,
    })
}

/// `a·|λ_avg − λ_gt| + (1 − a)·r_min`, with `λ_avg` over all successful
/// estimates. With `allow_degenerate`, a batch without spread counts as
/// `r_min = 0` instead of failing.
pub fn error_metric(batch: &TrialBatch, a: f64, allow_degenerate: bool) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidArgument(format!("metric weight must lie in [0, 1], got {a}")));
    }
    let avg = batch.lambda_avg()?;
    let r_min = match confidence_ellipse(batch) {
        Ok(e) => e.r_min(),
        Err(Error::DegenerateBatch(_)) if allow_degenerate => 0.0,
        Err(e) => return Err(e),
    };
    Ok(a * (avg - batch.truth).norm() + (1.0 - a) * r_min)
}

/// `‖computed − reference‖_F / ‖reference‖_F` over all samples.
pub fn trajectory_error(computed: &RealMatrix, reference: &RealMatrix) -> Result<f64> {
    if computed.shape() != reference.shape() {
        return Err(Error::Dimension(format!(
            "paths differ in shape: {:?} vs {:?}",
            computed.shape(),
            reference.shape()
        )));
    }
    let denom = reference.norm();
    if denom == 0.0 {
        return Err(Error::InvalidArgument("reference path is identically zero".into()));
    }
    Ok((computed - reference).norm() / denom)
}

/// Relative error of the path the method predicts from the reference's
/// initial state.
pub fn path_error(out: &MethodOutput, reference: &RealMatrix) -> Result<f64> {
    let x0 = reference.column(0).into_owned();
    let path = reconstruct_trajectory(&out.result, &out.reduced, &x0, reference.ncols())?;
    trajectory_error(&path, reference)
}

/// Tracked eigenvalue of `method` over `n_trials` seeded trials.
pub fn monte_carlo(
    study: &Study,
    method: Method,
    truth: Complex64,
    n_trials: usize,
    seedbase: u64,
) -> Result<TrialBatch> {
    let mut batches = eigen_batches(study, method, &[truth], n_trials, seedbase)?;
    Ok(batches.remove(0))
}

/// One batch per tracked eigenvalue, all from the same trial runs.
pub fn eigen_batches(
    study: &Study,
    method: Method,
    track: &[Complex64],
    n_trials: usize,
    seedbase: u64,
) -> Result<Vec<TrialBatch>> {
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be positive".into()));
    }
    let data = TrialData::new(study)?;
    let runs = run_trials(n_trials, seedbase, |_, seed| {
        let out = run_method(&data.noisy(seed)?, method, study.r, &study.solver)?;
        Ok((out.result.eigs_continuous, out.converged))
    });
    let mut batches = Vec::with_capacity(track.len());
    for &truth in track {
        let mut batch = TrialBatch {
            method,
            truth,
            estimates: Vec::with_capacity(n_trials),
            n_trials,
            seedbase,
            failures: Vec::new(),
            unconverged: 0,
        };
        for (trial, run) in runs.iter().enumerate() {
            match run {
                Ok((eigs, converged)) => {
                    batch.estimates.push(Some(match_eigenvalue(eigs, truth)?));
                    batch.unconverged += usize::from(!converged);
                }
                Err(e) => {
                    batch.estimates.push(None);
                    batch.failures.push(TrialFailure {
                        trial,
                        message: e.to_string(),
                    });
                }
            }
        }
        batches.push(batch);
    }
    Ok(batches)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub method: Method,
    pub n: usize,
    pub sigma2: f64,
    pub value: f64,
    pub successes: usize,
    pub failures: Vec<TrialFailure>,
}

fn summarize(
    method: Method,
    n: usize,
    sigma2: f64,
    runs: Vec<Result<f64>>,
    reduce: impl Fn(&mut [f64]) -> f64,
) -> SweepRow {
    let mut values = Vec::new();
    let mut failures = Vec::new();
    for (trial, r) in runs.into_iter().enumerate() {
        match r {
            Ok(v) => values.push(v),
            Err(e) => failures.push(TrialFailure {
                trial,
                message: e.to_string(),
            }),
        }
    }
    let value = if values.is_empty() { f64::NAN } else { reduce(&mut values) };
    SweepRow {
        method,
        n,
        sigma2,
        value,
        successes: values.len(),
        failures,
    }
}

pub fn mean(v: &mut [f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-trial `‖AB − I‖_F` of one study cell.
pub fn consistency_trials(
    study: &Study,
    method: Method,
    n_trials: usize,
    seedbase: u64,
) -> Result<(f64, Vec<Result<f64>>)> {
    let data = TrialData::new(study)?;
    let runs = run_trials(n_trials, seedbase, |_, seed| {
        Ok(run_method(&data.noisy(seed)?, method, study.r, &study.solver)?.consistency())
    });
    Ok((data.sigma2, runs))
}

/// Mean consistency error per (method, n).
pub fn consistency_sweep(
    base: &Study,
    methods: &[Method],
    ns: &[usize],
    n_trials: usize,
    seedbase: u64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        let study = Study {
            system: base.system.with_n(n),
            ..base.clone()
        };
        for &m in methods {
            let (sigma2, runs) = consistency_trials(&study, m, n_trials, seedbase)?;
            rows.push(summarize(m, n, sigma2, runs, mean));
        }
    }
    Ok(rows)
}

/// Per-trial relative path error of one study cell.
pub fn trajectory_trials(
    study: &Study,
    method: Method,
    n_trials: usize,
    seedbase: u64,
) -> Result<(f64, Vec<Result<f64>>)> {
    let data = TrialData::new(study)?;
    let reference = data.reference_path();
    let runs = run_trials(n_trials, seedbase, |_, seed| {
        let out = run_method(&data.noisy(seed)?, method, study.r, &study.solver)?;
        path_error(&out, &reference)
    });
    Ok((data.sigma2, runs))
}

/// Median path error per (method, n).
pub fn trajectory_sweep(
    base: &Study,
    methods: &[Method],
    ns: &[usize],
    n_trials: usize,
    seedbase: u64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        let study = Study {
            system: base.system.with_n(n),
            ..base.clone()
        };
        for &m in methods {
            let (sigma2, runs) = trajectory_trials(&study, m, n_trials, seedbase)?;
            rows.push(summarize(m, n, sigma2, runs, median));
        }
    }
    Ok(rows)
}

/// Whether one trial converged, and its residual history.
pub type ConvergenceRun = (bool, Vec<ResidualRecord>);

/// Residual histories of an iterative method over seeded trials.
pub fn convergence_trials(
    study: &Study,
    method: Method,
    n_trials: usize,
    seedbase: u64,
) -> Result<(f64, Vec<Result<ConvergenceRun>>)> {
    if !method.is_admm() {
        return Err(Error::InvalidArgument(format!("{method} is not iterative")));
    }
    let data = TrialData::new(study)?;
    let runs = run_trials(n_trials, seedbase, |_, seed| {
        let out = run_method(&data.noisy(seed)?, method, study.r, &study.solver)?;
        Ok((out.converged, out.history))
    });
    Ok((data.sigma2, runs))
}
