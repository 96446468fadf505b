use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvesolve")).args(args).output().expect("binary runs")
}

fn json_stdout(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn json_stderr(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn divergence_is_certified_with_n0_one() {
    let o = run(&["fc", "--op", "divergence", "--dim", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json_stdout(&o);
    assert_eq!(r["status"], "certified");
    assert_eq!(r["n0"], 1);
    assert_eq!(r["certificate_verified"], true);
}

#[test]
fn tracefree_symmetric_divergence_needs_three_dimensions() {
    let o = run(&["fc", "--op", "tracefree_symmetric_divergence", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let e = json_stderr(&o);
    assert_eq!(e["status"], "error");
    assert!(e["reason"].as_str().unwrap().contains("requires d >= 3"));
}

#[test]
fn single_partial_derivative_is_falsified() {
    let dir = tempfile::tempdir().unwrap();
    let op = write(dir.path(), "d1only.op", "name d1\ndim 2\nrows 1\ncols 1\nterm 1 1 1 0 1\n");
    let o = run(&["fc", "--op-file", &op, "--dim", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let r = json_stdout(&o);
    assert_eq!(r["status"], "falsified");
    let xi: Vec<[f64; 2]> = serde_json::from_value(r["witness"]["xi"].clone()).unwrap();
    assert_eq!(xi, vec![[0.0, 0.0], [1.0, 0.0]]);
    assert_eq!(r["witness"]["exact"], true);
}

#[test]
fn operator_file_errors_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let op = write(dir.path(), "bad.op", "dim 2\nrows 1\ncols 1\nterm 1 1 1 x 1\n");
    let o = run(&["fc", "--op-file", &op]);
    assert_eq!(o.status.code(), Some(1));
    let e = json_stderr(&o);
    assert_eq!(e["line"], 4);
}

#[test]
fn killing_special_system_is_integrable() {
    let o = run(&["augment", "--special", "symmetric_divergence", "--dim", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json_stdout(&o);
    assert_eq!(r["num_vars"], 6);
    assert_eq!(r["integrable"], true);
    assert_eq!(r["max_curvature"], 0.0);
    assert_eq!(r["cokernel_dim"], 6);
}

#[test]
fn maximal_killing_system_has_twelve_variables() {
    let o = run(&["augment", "--maximal", "--op", "killing", "--dim", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json_stdout(&o);
    assert_eq!(r["num_vars"], 12);
    assert_eq!(r["n0"], 2);
}

#[test]
fn spatial_lower_order_term_breaks_integrability() {
    let o = run(&["augment", "--special", "divergence", "--lower-order", "B=(0,x1)", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json_stdout(&o);
    assert_eq!(r["integrable"], false);
    assert!((r["max_curvature"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!(r["note"].as_str().unwrap().contains("cokernel trivial"));
}

#[test]
fn inconclusive_certificate_search_refuses_with_exit_three() {
    let o = run(&["augment", "--maximal", "--op", "killing", "--dim", "3", "--n0-max", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json_stderr(&o)["exit_code"], 3);
}

#[test]
fn cokernel_basis_of_double_divergence() {
    let o = run(&["cokernel", "--op", "ddiv", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json_stdout(&o);
    assert_eq!(r["dimension"], 3);
    assert_eq!(r["rank"], 3);
    assert_eq!(r["annihilated"], true);
}

#[test]
fn kernel_table_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let o = run(&["kernel", "--op", "divergence", "--dim", "2", "--oracle", "--grid", "-1,1,7", "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json_stdout(&o);
    assert!(r["max_relative_discrepancy"].as_f64().unwrap() <= 1e-8);
    let csv = std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap();
    assert!(csv.starts_with("x1,x2,y1,y2,K_1_1,K_2_1,O_1_1,O_2_1\n"));
    assert_eq!(csv.lines().count(), 1 + r["samples"].as_u64().unwrap() as usize);
}

#[test]
fn conic_kernel_vanishes_outside_cap() {
    let o = run(&[
        "kernel", "--op", "divergence", "--dim", "2", "--weight", "conic", "--aperture", "0.3", "--y", "0,0", "--grid",
        "-2,-1,4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = String::from_utf8(o.stdout).unwrap();
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert!(v[4..].iter().all(|k| *k == 0.0), "{line}");
    }
}

#[test]
fn kernel_decay_slopes() {
    let o = run(&["kernel", "--op", "double_divergence", "--dim", "3", "--decay", "--grid", "0,1,2"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json_stderr(&o);
    let rows = r["decay"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    for row in rows {
        assert_eq!(row["pass"], true, "{row}");
    }
}

#[test]
fn green_identity_verifies() {
    let o = run(&["verify", "--op", "divergence", "--dim", "2", "--samples", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(json_stdout(&o)["report"]["passed"], true);
}

const CONIC: &str = "\
# divergence, conic weight
op = divergence
dim = 2
weight = conic
axis = 1, 0
aperture = 0.8
grid = -1.5, 1.5, 9
residual_tol = 1e-5
green_samples = 1

[bump]
center = 0.1, -0.2
radius = 0.6
";

const BOGOVSKII: &str = "\
op = double_divergence
dim = 2
weight = bogovskii
grid = -1.2, 1.2, 7
correction_center = -0.2, -0.1
correction_radius = 0.7
green_samples = 1

[bump]
center = 0.2, 0.1
radius = 0.5
";

fn solve(cfg: &str, extra: &[&str]) -> (Output, Value, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "run.cfg", cfg);
    let out = dir.path().join("out").to_string_lossy().into_owned();
    let mut args = vec!["solve", "--config", &path, "--out", &out];
    args.extend_from_slice(extra);
    let o = run(&args);
    let report = std::fs::read_to_string(dir.path().join("out/solve.json")).unwrap_or_default();
    let csv = std::fs::read_to_string(dir.path().join("out/solve.csv")).unwrap_or_default();
    let v = serde_json::from_str(&report).unwrap_or(Value::Null);
    (o, v, csv + &report)
}

#[test]
fn conic_divergence_solve_passes() {
    let (o, r, _) = solve(CONIC, &[]);
    assert_eq!(o.status.code(), Some(0), "{r:#}");
    assert!(r["residual"]["max_residual"].as_f64().unwrap() <= 1e-5);
    assert_eq!(r["support"]["passed"], true);
}

#[test]
fn bogovskii_solve_with_projection() {
    let (o, r, _) = solve(BOGOVSKII, &["--project-cokernel"]);
    assert_eq!(o.status.code(), Some(0), "{r:#}");
    assert!(r["cokernel"]["max_moment_after"].as_f64().unwrap() <= 1e-11);
    assert!(r["cokernel"]["moments_before"][0].as_f64().unwrap().abs() > 1e-3);
    assert!(r["residual"]["max_residual"].as_f64().unwrap() <= 1e-4);
}

#[test]
fn solve_is_deterministic() {
    let (_, _, a) = solve(CONIC, &["--seed", "7"]);
    let (_, _, b) = solve(CONIC, &["--seed", "7", "--threads", "1"]);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn zero_data_gives_zero_grid() {
    let cfg = "op = divergence\ndim = 2\ngrid = -1, 1, 5\ngreen_samples = 0\n";
    let (o, r, out) = solve(cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{r:#}");
    let csv = out.split('{').next().unwrap();
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!(&v[2..], &[0.0, 0.0]);
    }
}

#[test]
fn config_errors_report_line_and_column() {
    let (o, _, _) = solve("op = divergence\ndim = 2\nradius = wide\n", &[]);
    assert_eq!(o.status.code(), Some(1));
    let e = json_stderr(&o);
    assert_eq!(e["line"], 3);
    assert_eq!(e["column"], 10);
}

#[test]
fn shipped_configs_pass() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["ddiv_bogovskii.cfg", "div_conic.cfg"] {
        let cfg = dir.join(name);
        let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--project-cokernel"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(json_stderr(&o)["status"], "pass");
    }
}
