use std::path::Path;
use std::process::Command;

fn run(dir: &Path, config: &str) -> (i32, String) {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_finsler-lab"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/summary.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

const TORUS: &str = r#""base": {"kind": "torus", "N": 8},
    "bundle": {"kind": "trivial-over-torus"},
    "fiber": {"m_theta": 8, "m_phi": 8},"#;

fn flow_config(max_steps: usize) -> String {
    format!(
        r#"{{ {TORUS}
        "metrics": [{{"name": "g", "reference": "flat",
                     "potential": {{"kind": "custom-expr", "epsilon": 0.1, "expr": "sin(2*pi*x)"}}}}],
        "command": {{"kind": "flow", "metric": "g", "max_steps": {max_steps}, "l_every": 50}} }}"#
    )
}

#[test]
fn validate_small_torus_identities_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"command": {"kind": "validate", "checks": [1, 2, 3, 9],
                 "scale": {"torus_n": 8, "p1_n": 8, "fiber": 8, "steps": 16}}}"#;
    let (code, stdout) = run(dir.path(), cfg);
    assert_eq!(code, 0, "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("criterion")).count(), 4);
    let s = summary(dir.path());
    assert_eq!(s["passed"], true);
    assert_eq!(s["result"]["checks"].as_array().unwrap().len(), 4);
    assert!(!csv_rows(&dir.path().join("out/trace_checks.csv")).is_empty());
}

#[test]
fn functional_hermitian_pair_has_l_equal_m() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "base": {"kind": "projective-line", "N": 12},
        "bundle": {"kind": "split-over-p1", "a": 1, "b": 1},
        "fiber": {"m_theta": 8, "m_phi": 8},
        "metrics": [{"name": "g", "corpus": "fs-twisted"}, {"name": "h", "reference": "fs"}],
        "command": {"kind": "functional", "g": "g", "h": "h", "steps": 16}
    }"#;
    let (code, _) = run(dir.path(), cfg);
    assert_eq!(code, 0);
    let s = summary(dir.path());
    let l = s["result"]["l"][0]["value"].as_f64().unwrap();
    let m = s["result"]["m"].as_f64().unwrap();
    assert!((l - m).abs() < 1e-4, "L = {l}, M = {m}");
    let rows = csv_rows(&dir.path().join("out/trace_functional.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows[0][1].contains('e'), "scientific notation: {}", rows[0][1]);
}

#[test]
fn flow_trace_deviation_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(dir.path(), &flow_config(10_000));
    assert_eq!(code, 0);
    let rows = csv_rows(&dir.path().join("out/trace_flow.csv"));
    let dev: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(dev.windows(2).all(|w| w[1] <= w[0]));
    assert!(*dev.last().unwrap() < 1e-6);
}

#[test]
fn unconverged_flow_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(dir.path(), &flow_config(10));
    assert_eq!(code, 1);
    assert_eq!(summary(dir.path())["passed"], false);
}

#[test]
fn summaries_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(a.path(), &flow_config(200));
    run(b.path(), &flow_config(200));
    let read = |d: &Path| std::fs::read(d.join("out/summary.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn geodesic_and_variation_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{ {TORUS}
        "metrics": [{{"name": "a", "corpus": "bump-mixed"}}, {{"name": "b", "corpus": "odd-mixed"}},
                    {{"name": "h", "corpus": "reference"}}],
        "command": {{"kind": "geodesic", "from": "a", "to": "b", "epsilons": [0.1, 0.05], "steps": 16}} }}"#
    );
    let (code, stdout) = run(dir.path(), &cfg);
    assert_eq!(code, 0, "{stdout}");
    assert!(!csv_rows(&dir.path().join("out/trace_geodesic.csv")).is_empty());
    let cfg = format!(
        r#"{{ {TORUS}
        "metrics": [{{"name": "g", "corpus": "bump-mixed"}}, {{"name": "h", "corpus": "reference"}}],
        "command": {{"kind": "variation-check", "g": "g", "h": "h", "steps": 16, "directions": 3}} }}"#
    );
    let (code, stdout) = run(dir.path(), &cfg);
    assert_eq!(code, 0, "{stdout}");
    assert_eq!(csv_rows(&dir.path().join("out/trace_variation.csv")).len(), 9);
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [
        "not json",
        r#"{"command": {"kind": "flow", "metric": "g"}}"#,
        &flow_config(10).replace("sin(2*pi*x)", "sin(2*pi*q)"),
        &flow_config(10).replace(r#""N": 8"#, r#""N": 1"#),
    ] {
        assert_eq!(run(dir.path(), cfg).0, 2, "{cfg}");
    }
    let missing = Command::new(env!("CARGO_BIN_EXE_finsler-lab")).args(["--config", "/nonexistent.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn schema_and_check_listing() {
    let out = Command::new(env!("CARGO_BIN_EXE_finsler-lab")).arg("--print-schema").output().unwrap();
    assert!(out.status.success());
    let schema: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(schema["title"], "RunConfig");
    let out = Command::new(env!("CARGO_BIN_EXE_finsler-lab")).arg("--list-checks").output().unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 9);
}
