//! Runs a parsed experiment and writes its artifacts.
//!
//! Every kind writes `summary.json` and `manifest.json` next to its CSV
//! tables:
//!
//! | kind          | CSV files and headers |
//! |---------------|-----------------------|
//! | `eigenvalues` | `eigenvalues.csv`: `trial,method,n,sigma2,target_re,target_im,re,im`; `metrics.csv`: `method,n,sigma2,target_re,target_im,value` |
//! | `consistency` | `consistency.csv`: `method,n,sigma2,value` (mean `‖AB − I‖_F`) |
//! | `trajectory`  | `trajectory_trials.csv`: `trial,method,n,sigma2,error`; `trajectory.csv`: `method,n,sigma2,value` (median) |
//! | `convergence` | `convergence.csv`: `trial,method,n,sigma2,iterations,converged`; `histories.csv`: `trial,method,n,sigma2,iteration,primal,dual,eps_pri,eps_dual,rho,objective` |
//!
//! Failed trials are left out of the CSV rows and listed in `summary.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind};
use super::*;

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn put(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

fn cells(cfg: &ExperimentConfig) -> Vec<(usize, NoiseLevel, Study)> {
    let mut out = Vec::new();
    for &n in &cfg.ns {
        for &noise in &cfg.noise {
            let study = Study {
                system: cfg.system.with_n(n),
                r: cfg.r,
                noise,
                solver: cfg.solver,
            };
            out.push((n, noise, study));
        }
    }
    out
}

fn failures_json(failures: &[TrialFailure]) -> Value {
    json!(failures)
}

/// Runs `cfg` and writes its artifacts under `out_dir`. `full` selects the
/// full trial count.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, full: bool) -> Result<ExperimentOutcome> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let trials = cfg.trial_count(full);
    let seed = cfg.seed;
    let mut w = Writer {
        dir: out_dir.to_path_buf(),
        files: Vec::new(),
    };
    let mut summary = Vec::new();

    match cfg.kind {
        ExperimentKind::Eigenvalues => {
            let mut scatter = String::from("trial,method,n,sigma2,target_re,target_im,re,im\n");
            let mut metrics = String::from("method,n,sigma2,target_re,target_im,value\n");
            for (n, _, study) in cells(cfg) {
                let sigma2 = TrialData::new(&study)?.sigma2;
                for &m in &cfg.methods {
                    log::info!("eigenvalues: {m} n={n} sigma2={sigma2} ({trials} trials)");
                    for batch in eigen_batches(&study, m, &cfg.track, trials, seed)? {
                        let t = batch.truth;
                        for (trial, est) in batch.estimates.iter().enumerate() {
                            if let Some(z) = est {
                                writeln!(scatter, "{trial},{m},{n},{sigma2:?},{:?},{:?},{:?},{:?}", t.re, t.im, z.re, z.im)
                                    .expect("string write");
                            }
                        }
                        let ellipse = confidence_ellipse(&batch);
                        let metric = error_metric(&batch, cfg.metric_a, true);
                        if let Ok(v) = &metric {
                            writeln!(metrics, "{m},{n},{sigma2:?},{:?},{:?},{v:?}", t.re, t.im).expect("string write");
                        }
                        let avg = batch.lambda_avg().ok().map(|z| [z.re, z.im]);
                        summary.push(json!({
                            "method": m,
                            "n": n,
                            "sigma2": sigma2,
                            "truth": [t.re, t.im],
                            "n_trials": batch.n_trials,
                            "seedbase": batch.seedbase,
                            "unconverged": batch.unconverged,
                            "failures": failures_json(&batch.failures),
                            "lambda_avg": avg,
                            "ellipse": match &ellipse {
                                Ok(e) => json!(e),
                                Err(e) => json!({ "error": e.to_string() }),
                            },
                            "metric_a": cfg.metric_a,
                            "metric": metric.as_ref().ok(),
                        }));
                    }
                }
            }
            w.put("eigenvalues.csv", &scatter)?;
            w.put("metrics.csv", &metrics)?;
        }
        ExperimentKind::Consistency | ExperimentKind::Trajectory => {
            let consistency = cfg.kind == ExperimentKind::Consistency;
            let mut table = String::from("method,n,sigma2,value\n");
            let mut per_trial = String::from("trial,method,n,sigma2,error\n");
            for (n, _, study) in cells(cfg) {
                for &m in &cfg.methods {
                    log::info!("{:?}: {m} n={n} ({trials} trials)", cfg.kind);
                    let (sigma2, runs) = if consistency {
                        consistency_trials(&study, m, trials, seed)?
                    } else {
                        trajectory_trials(&study, m, trials, seed)?
                    };
                    if !consistency {
                        for (trial, r) in runs.iter().enumerate() {
                            if let Ok(v) = r {
                                writeln!(per_trial, "{trial},{m},{n},{sigma2:?},{v:?}").expect("string write");
                            }
                        }
                    }
                    let row = summarize(m, n, sigma2, runs, if consistency { mean } else { median });
                    writeln!(table, "{m},{n},{sigma2:?},{:?}", row.value).expect("string write");
                    summary.push(json!(row));
                }
            }
            if consistency {
                w.put("consistency.csv", &table)?;
            } else {
                w.put("trajectory_trials.csv", &per_trial)?;
                w.put("trajectory.csv", &table)?;
            }
        }
        ExperimentKind::Convergence => {
            let mut stats = String::from("trial,method,n,sigma2,iterations,converged\n");
            let mut hist = String::from("trial,method,n,sigma2,iteration,primal,dual,eps_pri,eps_dual,rho,objective\n");
            for (n, _, study) in cells(cfg) {
                for &m in &cfg.methods {
                    log::info!("convergence: {m} n={n} ({trials} trials)");
                    let (sigma2, runs) = convergence_trials(&study, m, trials, seed)?;
                    let mut iters = Vec::new();
                    let mut converged = 0;
                    let mut failures = Vec::new();
                    for (trial, r) in runs.into_iter().enumerate() {
                        match r {
                            Ok((ok, history)) => {
                                writeln!(stats, "{trial},{m},{n},{sigma2:?},{},{ok}", history.len()).expect("string write");
                                for h in &history {
                                    writeln!(
                                        hist,
                                        "{trial},{m},{n},{sigma2:?},{},{:?},{:?},{:?},{:?},{:?},{:?}",
                                        h.iteration, h.primal, h.dual, h.eps_pri, h.eps_dual, h.rho, h.objective
                                    )
                                    .expect("string write");
                                }
                                iters.push(history.len() as f64);
                                converged += usize::from(ok);
                            }
                            Err(e) => failures.push(TrialFailure {
                                trial,
                                message: e.to_string(),
                            }),
                        }
                    }
                    let med = if iters.is_empty() { None } else { Some(median(&mut iters)) };
                    summary.push(json!({
                        "method": m,
                        "n": n,
                        "sigma2": sigma2,
                        "n_trials": trials,
                        "converged": converged,
                        "median_iterations": med,
                        "failures": failures_json(&failures),
                    }));
                }
            }
            w.put("convergence.csv", &stats)?;
            w.put("histories.csv", &hist)?;
        }
    }

    let summary = Value::Array(summary);
    w.put("summary.json", &serde_json::to_string_pretty(&summary).expect("serializable"))?;
    let names: Vec<String> = w
        .files
        .iter()
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .collect();
    let manifest = json!({
        "tool": "cdmd",
        "version": env!("CARGO_PKG_VERSION"),
        "kind": cfg.kind,
        "full": full,
        "trials": trials,
        "seedbase": seed,
        "seed_rule": "trial t of every cell uses noise seed seedbase + t",
        "config": cfg.entries,
        "resolved": {
            "system": cfg.system,
            "n": cfg.ns,
            "r": cfg.r,
            "noise": cfg.noise,
            "methods": cfg.methods,
            "track": cfg.track.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "metric_a": cfg.metric_a,
            "solver": cfg.solver,
        },
        "files": names,
    });
    w.put("manifest.json", &serde_json::to_string_pretty(&manifest).expect("serializable"))?;
    Ok(ExperimentOutcome {
        files: w.files,
        summary,
    })
}
