//! Flat `section.key = value` experiment files.
//!
//! `#` starts a comment. Lists are comma-separated. Unknown or repeated keys
//! are errors.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use super::SystemSpec;
use crate::dmd::Method;
use crate::error::{Error, Result};
use crate::runner::SolverConfig;
use crate::systems::{LinearPeriodicSpec, NoiseLevel, SineSuperpositionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Tracked-eigenvalue scatter, ellipses and the error metric.
    Eigenvalues,
    /// Mean `‖AB − I‖_F` per method and `n`.
    Consistency,
    /// Median relative path error per method and `n`.
    Trajectory,
    /// Residual histories of the iterative solvers.
    Convergence,
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eigenvalues" => Ok(ExperimentKind::Eigenvalues),
            "consistency" => Ok(ExperimentKind::Consistency),
            "trajectory" => Ok(ExperimentKind::Trajectory),
            "convergence" => Ok(ExperimentKind::Convergence),
            other => Err(Error::Config(format!("unknown experiment.kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub system: SystemSpec,
    pub ns: Vec<usize>,
    pub r: usize,
    pub noise: Vec<NoiseLevel>,
    pub methods: Vec<Method>,
    pub trials: usize,
    /// Trial count used in full mode.
    pub full_trials: usize,
    pub seed: u64,
    pub track: Vec<Complex64>,
    pub metric_a: f64,
    pub solver: SolverConfig,
    /// Every key as given, for the manifest.
    pub entries: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn trial_count(&self, full: bool) -> usize {
        if full {
            self.full_trials
        } else {
            self.trials
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("{key}: empty list")));
    }
    Ok(items)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("{key}: expected true or false, got '{other}'"))),
    }
}

fn parse_complex(key: &str, value: &str) -> Result<Complex64> {
    let compact: String = value.chars().filter(|c| !c.is_whitespace()).collect();
    Complex64::from_str(&compact)
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}' as a complex number")))
}

/// Applies one `admm.*` or `cdmd2.*` key. Returns `Ok(false)` for keys
/// outside those sections.
pub fn parse_solver_key(cfg: &mut SolverConfig, key: &str, value: &str) -> Result<bool> {
    let a = &mut cfg.admm;
    let c = &mut cfg.cdmd2;
    match key {
        "admm.rho0" => a.rho0 = parse_num(key, value)?,
        "admm.tau" => a.tau = parse_num(key, value)?,
        "admm.mu" => a.mu = parse_num(key, value)?,
        "admm.eps_abs" => a.eps_abs = parse_num(key, value)?,
        "admm.eps_rel" => a.eps_rel = parse_num(key, value)?,
        "admm.max_iters" => a.max_iters = parse_num(key, value)?,
        "admm.adaptive_rho" => a.adaptive_rho = parse_bool(key, value)?,
        "cdmd2.rho0" => c.rho0 = parse_num(key, value)?,
        "cdmd2.tau" => c.tau = parse_num(key, value)?,
        "cdmd2.mu_trigger" => c.mu_trigger = parse_num(key, value)?,
        "cdmd2.eps_abs" => c.eps_abs = parse_num(key, value)?,
        "cdmd2.eps_rel" => c.eps_rel = parse_num(key, value)?,
        "cdmd2.max_iters" => c.max_iters = parse_num(key, value)?,
        "cdmd2.nu" => c.nu = parse_num(key, value)?,
        "cdmd2.mu_reg" => c.mu_reg = parse_num(key, value)?,
        "cdmd2.adaptive_rho" => c.adaptive_rho = parse_bool(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

/// Splits the text into `(key, value)` pairs, rejecting duplicates.
fn entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected key = value", i + 1)));
        };
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if out.insert(k.clone(), v).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key '{k}'", i + 1)));
        }
    }
    Ok(out)
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let map = entries(text)?;
        let get = |k: &str| map.get(k).map(String::as_str);

        let kind: ExperimentKind = get("experiment.kind")
            .ok_or_else(|| Error::Config("missing experiment.kind".into()))?
            .parse()?;
        let system_kind = get("system.kind")
            .ok_or_else(|| Error::Config("missing system.kind".into()))?;

        let mut system = match system_kind {
            "linear_periodic" => {
                let mut s = LinearPeriodicSpec::default();
                if let Some(v) = get("system.t_end") {
                    s.t_end = parse_num("system.t_end", v)?;
                }
                if let Some(v) = get("system.z0") {
                    let z: Vec<f64> = parse_list("system.z0", v)?;
                    s.z0 = z.try_into().map_err(|_| {
                        Error::Config("system.z0 needs exactly two entries".into())
                    })?;
                }
                SystemSpec::LinearPeriodic(s)
            }
            "sine" => {
                let nx = get("system.nx").map(|v| parse_num("system.nx", v)).transpose()?.unwrap_or(128);
                let x_end = get("system.x_end")
                    .map(|v| parse_num("system.x_end", v))
                    .transpose()?
                    .unwrap_or(4.0 * std::f64::consts::PI);
                let t_end = get("system.t_end").map(|v| parse_num("system.t_end", v)).transpose()?.unwrap_or(4.0);
                let mut s = SineSuperpositionSpec::with_grid(nx, x_end, 32, t_end);
                for (key, field) in [
                    ("system.k1", &mut s.k1),
                    ("system.omega1", &mut s.omega1),
                    ("system.gamma1", &mut s.gamma1),
                    ("system.k2", &mut s.k2),
                    ("system.omega2", &mut s.omega2),
                    ("system.gamma2", &mut s.gamma2),
                    ("system.amp2", &mut s.amp2),
                ] {
                    if let Some(v) = get(key) {
                        *field = parse_num(key, v)?;
                    }
                }
                SystemSpec::Sine(s)
            }
            other => return Err(Error::Config(format!("unknown system.kind '{other}'"))),
        };

        let allowed_system: &[&str] = match system {
            SystemSpec::LinearPeriodic(_) => &["system.t_end", "system.z0"],
            SystemSpec::Sine(_) => &[
                "system.nx",
                "system.x_end",
                "system.t_end",
                "system.k1",
                "system.omega1",
                "system.gamma1",
                "system.k2",
                "system.omega2",
                "system.gamma2",
                "system.amp2",
            ],
        };

        let ns: Vec<usize> = match get("system.n") {
            Some(v) => parse_list("system.n", v)?,
            None => vec![system.n()],
        };
        if ns.iter().any(|&n| n < 2) {
            return Err(Error::Config("system.n entries must be >= 2".into()));
        }
        system = system.with_n(ns[0]);
        let r = match get("system.r") {
            Some(v) => parse_num("system.r", v)?,
            None => system.default_rank(),
        };
        if r == 0 {
            return Err(Error::Config("system.r must be positive".into()));
        }

        let noise: Vec<NoiseLevel> = match (get("noise.variance"), get("noise.snr_db")) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give noise.variance or noise.snr_db, not both".into()))
            }
            (Some(v), None) => {
                let vs: Vec<f64> = parse_list("noise.variance", v)?;
                if vs.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                    return Err(Error::Config("noise.variance entries must be >= 0".into()));
                }
                vs.into_iter().map(NoiseLevel::Variance).collect()
            }
            (None, Some(v)) => parse_list::<f64>("noise.snr_db", v)?
                .into_iter()
                .map(NoiseLevel::Snr)
                .collect(),
            (None, None) => vec![NoiseLevel::Variance(0.0)],
        };

        let methods: Vec<Method> = match get("experiment.methods") {
            Some(v) => parse_list("experiment.methods", v)?,
            None => Method::ALL.to_vec(),
        };
        if kind == ExperimentKind::Convergence && methods.iter().any(|m| !m.is_admm()) {
            return Err(Error::Config(
                "convergence experiments accept only iterative methods (cdmd, cdmd2)".into(),
            ));
        }
        let trials: usize = get("experiment.trials").map(|v| parse_num("experiment.trials", v)).transpose()?.unwrap_or(500);
        let full_trials: usize = get("experiment.full_trials")
            .map(|v| parse_num("experiment.full_trials", v))
            .transpose()?
            .unwrap_or(10_000);
        if trials == 0 || full_trials == 0 {
            return Err(Error::Config("trial counts must be positive".into()));
        }
        let seed: u64 = get("experiment.seed").map(|v| parse_num("experiment.seed", v)).transpose()?.unwrap_or(0);

        let track: Vec<Complex64> = match get("eigen.track") {
            Some(v) => v
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| parse_complex("eigen.track", s))
                .collect::<Result<_>>()?,
            None => system.default_track(),
        };
        let metric_a: f64 = get("eigen.a").map(|v| parse_num("eigen.a", v)).transpose()?.unwrap_or(0.9);
        if !(0.0..=1.0).contains(&metric_a) {
            return Err(Error::Config(format!("eigen.a must lie in [0, 1], got {metric_a}")));
        }

        let mut solver = SolverConfig::default();
        let fixed = [
            "experiment.kind",
            "experiment.methods",
            "experiment.trials",
            "experiment.full_trials",
            "experiment.seed",
            "system.kind",
            "system.n",
            "system.r",
            "noise.variance",
            "noise.snr_db",
            "eigen.track",
            "eigen.a",
        ];
        for (k, v) in &map {
            if fixed.contains(&k.as_str()) || allowed_system.contains(&k.as_str()) {
                continue;
            }
            if !parse_solver_key(&mut solver, k, v)? {
                return Err(Error::Config(format!("unknown key '{k}'")));
            }
        }
        solver.admm.validate()?;
        solver.cdmd2.validate()?;

        Ok(ExperimentConfig {
            kind,
            system,
            ns,
            r,
            noise,
            methods,
            trials,
            full_trials,
            seed,
            track,
            metric_a,
            solver,
            entries: map,
        })
    }
}
