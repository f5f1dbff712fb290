//! Runs the `plaqr` binary end to end on small generated files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plaqr_cli::report::{FitReport, MultiReport, PathPoint, QqReport, GRID_POINTS};
use tempfile::TempDir;

fn toy_csv(dir: &Path, n: usize) -> PathBuf {
    let mut s = String::from("y,x1,x2,x3,z,id\n");
    for i in 0..n {
        let f = i as f64;
        let x1 = (1.3 * f).sin();
        let x2 = (1.7 * f).cos();
        let x3 = ((i * 37) % 11) as f64 / 5.0 - 1.0;
        let z = 10.0 * ((0.618_034 * f) % 1.0) - 3.0;
        let noise = ((i * 7919) % 13) as f64 / 13.0 - 0.5;
        let y = 2.0 * x1 + (2.0 * std::f64::consts::PI * (z + 3.0) / 10.0).sin() + noise;
        s.push_str(&format!("{y},{x1},{x2},{x3},{z},{i}\n"));
    }
    let path = dir.join("toy.csv");
    std::fs::write(&path, s).unwrap();
    path
}

fn plaqr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plaqr")).args(args).output().unwrap()
}

fn data_args(path: &Path) -> Vec<String> {
    [
        "--input",
        path.to_str().unwrap(),
        "--response",
        "y",
        "--linear",
        "x1,x2,x3",
        "--nonlinear",
        "z",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn run(cmd: &str, path: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd.to_string()];
    args.extend(data_args(path));
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    plaqr(&refs)
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn fit_reports_coefficients_and_component_grid() {
    let dir = TempDir::new().unwrap();
    let path = toy_csv(dir.path(), 120);
    let out = stdout(&run("fit", &path, &["--lambda", "0.05"]));
    let r: FitReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.coefficients.len(), 3);
    assert_eq!(r.coefficients[0].name, "x1");
    assert!(r.active.contains(&"x1".to_string()));
    assert!((r.coefficients[0].estimate - 2.0).abs() < 0.5);
    let c = &r.components[0];
    assert_eq!(c.values.len(), GRID_POINTS);
    assert_eq!(c.grid.len(), GRID_POINTS);
    assert_eq!(c.grid[0], -3.0);
    assert!(c.grid[100] > 6.9 && c.grid[100] < 7.0);
    assert!(r.path.is_none());
    assert!(r.fit.kkt_report.is_some());
}

#[test]
fn fit_output_is_deterministic_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let path = toy_csv(dir.path(), 100);
    let a = stdout(&run("fit", &path, &["--auto-grid", "8"]));
    let b = stdout(&run("fit", &path, &["--auto-grid", "8"]));
    assert_eq!(a, b);
    let r: FitReport = serde_json::from_str(&a).unwrap();
    assert_eq!(r.path.as_ref().unwrap().points.len(), 8);
    let again: FitReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(again.fit.beta, r.fit.beta);
    assert_eq!(again.fit.xi, r.fit.xi);
    assert_eq!(again, r);
}

#[test]
fn fit_writes_csv_to_file() {
    let dir = TempDir::new().unwrap();
    let path = toy_csv(dir.path(), 80);
    let target = dir.path().join("coef.csv");
    let o = run(
        "fit",
        &path,
        &["--lambda", "0.1", "--format", "csv", "--out", target.to_str().unwrap()],
    );
    assert!(o.status.success());
    let text = std::fs::read_to_string(target).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "term,tau_0.5");
    assert!(lines[1].starts_with("(intercept),"));
    assert_eq!(lines.len(), 5);
}

#[test]
fn path_lists_every_lambda() {
    let dir = TempDir::new().unwrap();
    let path = toy_csv(dir.path(), 100);
    let out = stdout(&run("path", &path, &["--auto-grid", "10", "--penalty", "mcp"]));
    let pts: Vec<PathPoint> = serde_json::from_str(&out).unwrap();
    assert_eq!(pts.len(), 10);
    assert!(pts.windows(2).all(|w| w[1].lambda < w[0].lambda));
    assert_eq!(pts[0].active_size, 0);
}

#[test]
fn multifit_returns_one_block_per_level() {
    let dir = TempDir::new().unwrap();
    let path = toy_csv(dir.path(), 100);
    let out = stdout(&run("multifit", &path, &["--taus", "0.25,0.5,0.75", "--lambda", "0.05"]));
    let r: MultiReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.levels.len(), 3);
    assert_eq!(r.group_norms.len(), 3);
    let sum: f64 = r.levels.iter().map(|l| l.coefficients[0].estimate.abs()).sum();
    assert!((sum - r.group_norms[0].estimate).abs() < 1e-12);
}

#[test]
fn qqdiag_pairs_quantiles() {
    let dir = TempDir::new().unwrap();
    let path = toy_csv(dir.path(), 90);
    let out = stdout(&run(
        "qqdiag",
        &path,
        &["--draws", "500", "--auto-grid", "6", "--taus", "0.25,0.5,0.75"],
    ));
    let r: QqReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.probs.len(), 90);
    assert_eq!(r.simulated.len(), 90);
    assert!(r.max_deviation_over_iqr.is_finite());
}

#[test]
fn simulate_prints_metric_row() {
    let o = plaqr(&[
        "simulate", "--n", "60", "--p", "27", "--reps", "2", "--auto-grid", "6", "--seed", "3",
    ]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "FV,TV,True,P,AADE,MSE");
    assert_eq!(lines[1].split(',').count(), 6);
    assert_eq!(lines.len(), 2);
}

#[test]
fn ratecheck_table_as_csv() {
    let o = plaqr(&["ratecheck", "--ns", "100,200", "--reps", "3", "--format", "csv"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("n,beta_mse,g_mse"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn missing_cells_drop_rows_with_warning() {
    let dir = TempDir::new().unwrap();
    let path = toy_csv(dir.path(), 60);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<&str> = lines[5].split(',').collect();
    cells[2] = "";
    lines[5] = cells.join(",");
    std::fs::write(&path, lines.join("\n")).unwrap();
    let o = run("fit", &path, &["--lambda", "0.1"]);
    let r: FitReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((r.n, r.dropped_rows), (59, 1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dropped 1 rows"));
}

#[test]
fn non_numeric_cell_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "y,x1,x2,x3,z\n1,2,3,4,5\n1,2,oops,4,6\n").unwrap();
    let o = run("fit", &path, &["--lambda", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("'x2'"), "{err}");
}

#[test]
fn constant_nonlinear_column_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("flat.csv");
    std::fs::write(&path, "y,x1,x2,x3,z\n1,2,3,4,5\n2,3,4,5,5\n").unwrap();
    let o = run("fit", &path, &["--lambda", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("'z'"));
}

#[test]
fn too_few_rows_is_a_rank_error() {
    let dir = TempDir::new().unwrap();
    let path = toy_csv(dir.path(), 2);
    let o = run("fit", &path, &["--lambda", "0.1", "--knots", "0"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn iteration_cap_is_a_convergence_error() {
    let dir = TempDir::new().unwrap();
    let path = toy_csv(dir.path(), 120);
    let o = run("fit", &path, &["--lambda", "0.1", "--max-lla-iters", "1"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    let r: FitReport = serde_json::from_str(&String::from_utf8_lossy(&o.stdout)).unwrap();
    assert_eq!(r.fit.lla_iterations, 1);
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_plaqr"))
        .args(["ratecheck", "--ns", "100,200", "--reps", "1"])
        .env("PLAQR_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
