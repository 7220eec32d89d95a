use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cdmd::dmd::{Method, SnapshotData};
use cdmd::error::{Error, Result};
use cdmd::harness::{parse_solver_key, run_experiment, ExperimentConfig, SystemSpec};
use cdmd::runner::{run_method, SolverConfig};
use cdmd::snapshot_io::{load_snapshots, save_snapshots, SnapshotFormat};
use cdmd::systems::{
    add_noise, snr_db, LinearPeriodicSpec, NoiseSpec, SineSuperpositionSpec,
};

const EXIT_USAGE: u8 = 2;
const EXIT_UNCONVERGED: u8 = 3;

/// Consistent DMD and baseline estimators on snapshot data.
#[derive(Parser, Debug)]
#[command(name = "cdmd", version)]
struct Cli {
    /// Worker threads for trial-level parallelism (default: all cores).
    /// Results do not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit one estimator to a snapshot file or a generated system.
    Decompose(DecomposeArgs),
    /// Run a Monte Carlo study from a key=value config file.
    Experiment(ExperimentArgs),
    /// Write synthetic snapshot data to a file.
    Gen(GenArgs),
    /// Convert a snapshot file between CSV and binary.
    Convert(ConvertArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SystemName {
    /// Two-state linear system with eigenvalues ±i.
    #[value(alias = "linear", alias = "linear_periodic")]
    Linper,
    /// Superposition of a growing and a decaying travelling sine.
    Sine,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FileFormat {
    Csv,
    #[value(alias = "binary")]
    Bin,
}

impl From<FileFormat> for SnapshotFormat {
    fn from(f: FileFormat) -> Self {
        match f {
            FileFormat::Csv => SnapshotFormat::Csv,
            FileFormat::Bin => SnapshotFormat::Binary,
        }
    }
}

#[derive(Args, Debug)]
struct SystemArgs {
    /// Benchmark system to generate.
    #[arg(long, value_enum)]
    system: Option<SystemName>,
    /// Number of snapshot pairs.
    #[arg(long, default_value_t = 32)]
    n: usize,
    /// Additive Gaussian noise variance.
    #[arg(long, conflicts_with = "snr_db")]
    noise_variance: Option<f64>,
    /// Noise level as SNR in dB (mean squared clean entry over variance).
    #[arg(long)]
    snr_db: Option<f64>,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SystemArgs {
    fn spec(&self, system: SystemName) -> SystemSpec {
        match system {
            SystemName::Linper => SystemSpec::LinearPeriodic(LinearPeriodicSpec {
                n: self.n,
                ..Default::default()
            }),
            SystemName::Sine => SystemSpec::Sine(SineSuperpositionSpec::with_n(self.n)),
        }
    }

    fn noise(&self) -> Option<NoiseSpec> {
        match (self.noise_variance, self.snr_db) {
            (Some(v), _) => Some(NoiseSpec::variance(v, self.seed)),
            (None, Some(db)) => Some(NoiseSpec::snr_db(db, self.seed)),
            (None, None) => None,
        }
    }

    fn generate(&self, system: SystemName) -> Result<SnapshotData> {
        let clean = self.spec(system).generate()?;
        match self.noise() {
            Some(noise) => {
                let noisy = add_noise(&clean, &noise)?;
                let var = noise.resolve_variance(&clean)?;
                if var > 0.0 {
                    log::info!("noise variance {var:e}, SNR {:.2} dB", snr_db(&clean, var));
                }
                Ok(noisy)
            }
            None => Ok(clean),
        }
    }
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    /// Snapshot file to read instead of generating a system.
    #[arg(long, conflicts_with = "system")]
    input: Option<PathBuf>,
    /// Input format (default: from the file extension).
    #[arg(long, value_enum)]
    format: Option<FileFormat>,
    #[command(flatten)]
    system: SystemArgs,
    /// Estimator: exact, fbdmd, tlsdmd, cdmd or cdmd2.
    #[arg(long, default_value = "cdmd")]
    method: Method,
    /// Reduced rank (default: 2 for linper, 4 for sine; required with --input).
    #[arg(long)]
    r: Option<usize>,
    /// Solver override such as `admm.rho0=10` or `cdmd2.nu=5` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "cdmd-out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Experiment config file.
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "cdmd-out")]
    out: PathBuf,
    /// Use the config's full trial count instead of the desk-scale one.
    #[arg(long)]
    full: bool,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
    /// Output format (default: from the file extension).
    #[arg(long, value_enum)]
    format: Option<FileFormat>,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    input: PathBuf,
    output: PathBuf,
    /// Input format (default: from the extension).
    #[arg(long, value_enum)]
    from: Option<FileFormat>,
    /// Output format (default: from the extension).
    #[arg(long, value_enum)]
    to: Option<FileFormat>,
}

fn format_for(path: &Path, given: Option<FileFormat>) -> SnapshotFormat {
    given.map(Into::into).unwrap_or_else(|| SnapshotFormat::from_path(path))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Returns whether the solver converged.
fn decompose(args: &DecomposeArgs) -> Result<bool> {
    let (data, default_r) = match (&args.input, args.system.system) {
        (Some(path), _) => (load_snapshots(path, format_for(path, args.format))?, None),
        (None, Some(sys)) => {
            let spec = args.system.spec(sys);
            (args.system.generate(sys)?, Some(spec.default_rank()))
        }
        (None, None) => return Err(Error::Config("give --input or --system".into())),
    };
    let r = args
        .r
        .or(default_r)
        .ok_or_else(|| Error::Config("--r is required with --input".into()))?;
    let mut solver = SolverConfig::default();
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        if !parse_solver_key(&mut solver, k.trim(), v.trim())? {
            return Err(Error::Config(format!("unknown solver key '{}'", k.trim())));
        }
    }
    solver.admm.validate()?;
    solver.cdmd2.validate()?;

    let out = run_method(&data, args.method, r, &solver)?;
    create_dir(&args.out)?;
    let res = &out.result;
    let pair = |z: &num_complex::Complex64| [z.re, z.im];
    let a_rows: Vec<Vec<f64>> = res.a.row_iter().map(|row| row.iter().copied().collect()).collect();
    let modes: Vec<Vec<[f64; 2]>> = res
        .modes
        .column_iter()
        .map(|col| col.iter().map(pair).collect())
        .collect();
    let doc = json!({
        "method": args.method,
        "rank": out.reduced.rank,
        "dt": out.reduced.dt,
        "a": a_rows,
        "eigs_discrete": res.eigs_discrete.iter().map(pair).collect::<Vec<_>>(),
        "eigs_continuous": res.eigs_continuous.iter().map(pair).collect::<Vec<_>>(),
        "modes": modes,
        "consistency": out.consistency(),
        "converged": out.converged,
        "iterations": out.history.len(),
    });
    write(&args.out.join("result.json"), &serde_json::to_string_pretty(&doc).expect("serializable"))?;

    let mut eig_csv = String::from("index,discrete_re,discrete_im,continuous_re,continuous_im\n");
    for (k, (d, c)) in res.eigs_discrete.iter().zip(&res.eigs_continuous).enumerate() {
        eig_csv.push_str(&format!("{k},{:?},{:?},{:?},{:?}\n", d.re, d.im, c.re, c.im));
    }
    write(&args.out.join("eigenvalues.csv"), &eig_csv)?;

    if args.method.is_admm() {
        let mut h = String::from("iteration,primal,dual,eps_pri,eps_dual,rho,objective\n");
        for r in &out.history {
            h.push_str(&format!(
                "{},{:?},{:?},{:?},{:?},{:?},{:?}\n",
                r.iteration, r.primal, r.dual, r.eps_pri, r.eps_dual, r.rho, r.objective
            ));
        }
        write(&args.out.join("history.csv"), &h)?;
    }
    for (k, c) in res.eigs_continuous.iter().enumerate() {
        println!("lambda[{k}] = {:+.10} {:+.10}i", c.re, c.im);
    }
    Ok(out.converged)
}

fn experiment(args: &ExperimentArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config).map_err(|e| Error::Io {
        path: args.config.clone(),
        source: e,
    })?;
    let cfg: ExperimentConfig = text.parse()?;
    let outcome = run_experiment(&cfg, &args.out, args.full)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn gen(args: &GenArgs) -> Result<()> {
    let sys = args
        .system
        .system
        .ok_or_else(|| Error::Config("--system is required".into()))?;
    let data = args.system.generate(sys)?;
    save_snapshots(&data, &args.out, format_for(&args.out, args.format))
}

fn convert(args: &ConvertArgs) -> Result<()> {
    let data = load_snapshots(&args.input, format_for(&args.input, args.from))?;
    save_snapshots(&data, &args.output, format_for(&args.output, args.to))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Io { .. }
        | Error::Parse { .. }
        | Error::InvalidArgument(_)
        | Error::Dimension(_)
        | Error::NonFinite(_)
        | Error::Precondition(_) => EXIT_USAGE,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match &cli.command {
        Command::Decompose(a) => decompose(a).map(|converged| {
            if converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: solver stopped at the iteration limit without converging; history written");
                ExitCode::from(EXIT_UNCONVERGED)
            }
        }),
        Command::Experiment(a) => experiment(a).map(|_| ExitCode::SUCCESS),
        Command::Gen(a) => gen(a).map(|_| ExitCode::SUCCESS),
        Command::Convert(a) => convert(a).map(|_| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(exit_code(&e))
    })
}
