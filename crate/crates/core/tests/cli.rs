use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cdmd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdmd"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn decompose_generated_system() {
    let dir = tempfile::tempdir().unwrap();
    let out = cdmd(&["decompose", "--system", "linper", "--method", "exact", "--out", "res"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("lambda[0]") && stdout.contains("lambda[1]"), "{stdout}");

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("res/result.json")).unwrap()).unwrap();
    assert_eq!(json["method"], "exact");
    assert_eq!(json["rank"], 2);
    let eigs = json["eigs_continuous"].as_array().unwrap();
    assert!((eigs[0][1].as_f64().unwrap().abs() - 1.0).abs() < 1e-8);
    assert!(dir.path().join("res/eigenvalues.csv").exists());
    assert!(!dir.path().join("res/history.csv").exists());
}

#[test]
fn decompose_from_file_writes_history() {
    let dir = tempfile::tempdir().unwrap();
    let gen = cdmd(&["gen", "--system", "sine", "--n", "16", "--noise-variance", "0.25", "--seed", "4", "--out", "s.bin"], dir.path());
    assert_eq!(code(&gen), 0, "{}", String::from_utf8_lossy(&gen.stderr));
    let out = cdmd(&["decompose", "--input", "s.bin", "--r", "4", "--method", "cdmd", "--out", "res"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let hist = fs::read_to_string(dir.path().join("res/history.csv")).unwrap();
    let mut lines = hist.lines();
    assert_eq!(lines.next().unwrap(), "iteration,primal,dual,eps_pri,eps_dual,rho,objective");
    assert!(lines.count() >= 1);
}

#[test]
fn iteration_cap_exits_three_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = cdmd(
        &["decompose", "--system", "sine", "--n", "16", "--noise-variance", "0.25", "--set", "admm.max_iters=3", "--out", "res"],
        dir.path(),
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("iteration limit"));
    let hist = fs::read_to_string(dir.path().join("res/history.csv")).unwrap();
    assert_eq!(hist.lines().count(), 4);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["decompose"][..],
        &["decompose", "--input", "missing.csv", "--r", "2"],
        &["decompose", "--system", "linper", "--set", "admm.tau=0.5"],
        &["decompose", "--system", "linper", "--set", "nonsense=1"],
        &["decompose", "--system", "linper", "--method", "svd"],
        &["decompose", "--system", "linper", "--r", "3"],
        &["experiment", "no-such.cfg"],
    ] {
        let out = cdmd(args, dir.path());
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn malformed_input_names_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "# dt=0.1\n1,2,3\n4,oops,6\n").unwrap();
    let out = cdmd(&["decompose", "--input", "bad.csv", "--r", "1"], dir.path());
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv") && err.contains("oops"), "{err}");
}

#[test]
fn convert_round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&cdmd(&["gen", "--system", "linper", "--noise-variance", "0.1", "--out", "a.csv"], p)), 0);
    assert_eq!(code(&cdmd(&["convert", "a.csv", "b.bin"], p)), 0);
    assert_eq!(code(&cdmd(&["convert", "b.bin", "c.txt", "--to", "csv"], p)), 0);
    assert_eq!(fs::read(p.join("a.csv")).unwrap(), fs::read(p.join("c.txt")).unwrap());
}

#[test]
fn experiment_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("small.cfg"),
        "experiment.kind = consistency\nexperiment.methods = exact, cdmd\nexperiment.trials = 10\n\
         experiment.seed = 3\nsystem.kind = sine\nsystem.n = 8, 16\nnoise.variance = 0.25\n",
    )
    .unwrap();
    let out = cdmd(&["--threads", "2", "experiment", "small.cfg", "--out", "exp"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("exp/consistency.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("exp/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "consistency");
    assert_eq!(manifest["full"], false);
    assert_eq!(manifest["seedbase"], 3);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("typo.cfg"), "experiment.kind = consistency\nsystem.kind = sine\nsytem.n = 8\n").unwrap();
    let out = cdmd(&["experiment", "typo.cfg"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sytem.n"));
}
