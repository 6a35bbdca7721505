use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use flatpop::{AtomicMeasure, ModelIngredients};

fn flatpop(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatpop"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn flatpop_threads(args: &[&str], cwd: &Path, threads: usize) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatpop"))
        .args(args)
        .current_dir(cwd)
        .env("FLATPOP_THREADS", threads.to_string())
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_inputs(dir: &Path) {
    let lotka = ModelIngredients::lotka(1.0, 0.5);
    fs::write(dir.join("lotka.json"), serde_json::to_string(&lotka).unwrap()).unwrap();
    fs::write(dir.join("a.json"), r#"{"atoms": [[1.0, 1.0], [2.5, -0.5]]}"#).unwrap();
    fs::write(dir.join("mu0.json"), r#"{"atoms": [[0.0, 1.0], [3.0, 1.0]]}"#).unwrap();
    fs::write(
        dir.join("decay.json"),
        r#"{"b": {"breakpoints": [0], "values": [1]}, "c": {"breakpoints": [0], "values": [0.5]}}"#,
    )
    .unwrap();
    fs::write(
        dir.join("tent.json"),
        r#"{"breakpoints": [0, 2, 3, 4], "values": [0, 0, 0.5, 0]}"#,
    )
    .unwrap();
}

#[test]
fn validate_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let o = flatpop(&["validate", "--model", "lotka.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["issues"], serde_json::json!([]));
    assert_eq!(report["irreducible"], serde_json::json!(true));
}

#[test]
fn validation_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("neg.json"),
        r#"{"b": {"breakpoints": [0], "values": [-1]}, "c": {"breakpoints": [0], "values": [0.5]}}"#,
    )
    .unwrap();
    let o = flatpop(&["validate", "--model", "neg.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    fs::write(
        dir.path().join("typo.json"),
        r#"{"b": {"breakpoints": [0], "values": [1]}, "c": {"breakpoints": [0, 1], "values": [1, "x"]}}"#,
    )
    .unwrap();
    let o = flatpop(&["validate", "--model", "typo.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/c/values/1"), "{}", stderr(&o));

    let o = flatpop(&["validate", "--model", "typo.json", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = flatpop(&["nonsense"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn distance_of_identical_inputs_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let o = flatpop(&["distance", "--a", "a.json", "--b", "a.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "0.0");
    let o = flatpop(
        &["distance", "--a", "a.json", "--b", "mu0.json", "--variant", "classic", "--oracle-h", "0.05", "--out", "d"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines: Vec<f64> = stdout(&o)
        .lines()
        .map(|l| l.rsplit(' ').next().unwrap().parse().unwrap())
        .collect();
    assert!((lines[0] - lines[1]).abs() < 1e-9, "{lines:?}");
    assert!(dir.path().join("d/manifest.json").exists());
}

#[test]
fn numerical_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let o = flatpop(
        &["simulate", "--model", "lotka.json", "--mu0", "mu0.json", "--dt", "0.1", "--t-end", "5", "--max-particles", "10", "--out", "t"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn simulate_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let args = |out: &'static str| {
        vec!["simulate", "--model", "lotka.json", "--mu0", "mu0.json", "--dt", "0.01", "--t-end", "5", "--checkpoint-every", "10", "--out", out]
    };
    let o1 = flatpop_threads(&args("t1"), dir.path(), 1);
    let o8 = flatpop_threads(&args("t8"), dir.path(), 8);
    assert_eq!(o1.status.code(), Some(0), "{}", stderr(&o1));
    assert_eq!(o8.status.code(), Some(0), "{}", stderr(&o8));
    let s1 = fs::read(dir.path().join("t1/series.csv")).unwrap();
    let s8 = fs::read(dir.path().join("t8/series.csv")).unwrap();
    assert_eq!(s1, s8);
    let m1 = fs::read(dir.path().join("t1/mu_000500.json")).unwrap();
    let m8 = fs::read(dir.path().join("t8/mu_000500.json")).unwrap();
    assert_eq!(m1, m8);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t8/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], serde_json::json!(8));
    assert!(manifest["artifacts"]["series.csv"].is_string());

    // Emitted JSON goes back in as input.
    let o = flatpop(
        &["simulate", "--model", "t1/model.json", "--mu0", "t1/mu0.json", "--config", "t1/config.json", "--out", "t2"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read(dir.path().join("t2/series.csv")).unwrap(), s1);
    let last: AtomicMeasure =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t1/mu_000500.json")).unwrap()).unwrap();
    assert!(last.is_positive());
}

#[test]
fn dualcheck_passes_for_tent() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let o = flatpop(
        &["dualcheck", "--model", "decay.json", "--phi", "tent.json", "--t", "2", "--grid", "0:20:0.01", "--out", "dc"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("PASS") && out.contains("norm_t") && out.contains("bound"));
    assert!(dir.path().join("dc/psi.csv").exists());
    let o = flatpop(&["dualcheck", "--model", "lotka.json", "--phi", "tent.json", "--t", "2", "--grid", "0:20"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn demo_asymptotics_spectrum_weakcheck_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let o = flatpop(&["demo", "lotka", "--out", "demo", "--t-end", "20"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lambda: f64 = out
        .lines()
        .find(|l| l.starts_with("lambda*"))
        .and_then(|l| l.split_whitespace().nth(2))
        .unwrap()
        .parse()
        .unwrap();
    assert!((lambda - 0.5).abs() < 0.01, "{out}");
    assert!(out.contains("GrowthAttractor"));

    let o = flatpop(&["asymptotics", "--traj", "demo", "--window", "8:20", "--tail", "8"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["spectral.json", "profile.json", "convergence.csv", "manifest.json"] {
        assert!(dir.path().join("demo/asymptotics").join(f).exists(), "{f}");
    }
    let profile: AtomicMeasure =
        serde_json::from_str(&fs::read_to_string(dir.path().join("demo/asymptotics/profile.json")).unwrap()).unwrap();
    assert!((profile.tv_norm() - 1.0).abs() < 1e-9);

    let o = flatpop(&["spectrum", "--model", "lotka.json", "--xmax", "20", "--cells", "400", "--out", "sp"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lh: f64 = stdout(&o).trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((lh - 0.5).abs() < 0.05);

    let o = flatpop(
        &["weakcheck", "--traj", "demo", "--model", "demo/model.json", "--tent", "3:1.5:1", "--phi", "tent.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 2);

    let o = flatpop(&["plot", "--csv", "demo/series.csv", "--y", "mass", "--logy", "--out", "mass.svg"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("mass.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

#[test]
fn extinction_demo() {
    let dir = tempfile::tempdir().unwrap();
    let o = flatpop(&["demo", "extinction", "--out", "ex", "--t-end", "20"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("Extinction"), "{}", stdout(&o));
}
