use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_checkmark"))
}

fn shipped_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/linear_running_example.conf")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .arg("--config")
        .arg(shipped_config())
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn solve_writes_mechanism_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["solve"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("optimal.csv"));
    assert_eq!(
        header,
        ["theta", "phi", "lambda", "v_good", "v_bad", "price", "attention", "engagement_density"]
    );
    assert!(rows.len() >= 2001);
    let text = std::fs::read_to_string(dir.path().join("optimal.csv")).unwrap();
    let line = text.lines().nth(1).unwrap();
    assert!(line.split(',').all(|c| c.split('.').nth(1).is_some_and(|d| d.len() == 12)), "{line}");
}

#[test]
fn identical_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for args in [&["solve"][..], &["sweep", "gamma"], &["compare-perfect"], &["benchmark", "two-cert"]] {
        assert!(run_in(a.path(), args).status.success());
        assert!(run_in(b.path(), args).status.success());
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert!(x == y, "{name:?} differs between runs");
    }
}

#[test]
fn figure_two_matches_linear_quality() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["figures"]).status.success());
    for f in ["fig1.csv", "fig2a.csv", "fig2b.csv", "fig3.csv"] {
        assert_eq!(read_csv(&dir.path().join(f)).1.len(), 401, "{f}");
    }
    let (header, rows) = read_csv(&dir.path().join("fig2a.csv"));
    assert_eq!(header, ["phi", "lambda"]);
    for r in rows {
        let expect = (0.5 / (1.0 - r[0]).sqrt()).min(1.0);
        assert!((r[1] - expect).abs() <= 1e-4, "phi {}: {} vs {expect}", r[0], r[1]);
    }
    let (_, rows) = read_csv(&dir.path().join("fig1.csv"));
    for r in rows {
        assert!((r[1] - (r[0] - 0.25).max(0.0)).abs() <= 1e-10);
        assert!((r[2] - ((r[0] + 1.0) / 2.0 - 0.5).max(0.0)).abs() <= 1e-10);
    }
}

#[test]
fn planner_rows_are_constant() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["benchmark", "planner"]).status.success());
    let (_, rows) = read_csv(&dir.path().join("planner.csv"));
    assert!(rows.iter().all(|r| r[2] == 1.0 && r[3] == 0.75));
}

#[test]
fn config_errors_exit_two_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(shipped_config()).unwrap();
    let cases = [
        (text.replace("model.gamma = 0.25", "model.gamma = 0.8").replace("theta_max = 1", "theta_max = 0.7"), "gamma must be < min(theta_max, 1)"),
        (text.replace("cost.sigma = 2\n", ""), "cost.sigma"),
        (format!("{text}extra.key = 1\n"), "extra.key"),
    ];
    for (k, (body, needle)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{k}.conf"));
        std::fs::write(&path, body).unwrap();
        let out = bin().arg("--config").arg(&path).arg("solve").output().unwrap();
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{err}");
    }
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn verify_passes_and_bad_sweep_values_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    // Gamma values that are not increasing are rejected before any solve.
    let out = run_in(dir.path(), &["sweep", "gamma", "--values", "0.3,0.2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(dir.path(), &["verify", "--probes", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
