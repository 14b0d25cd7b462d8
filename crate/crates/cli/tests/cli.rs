use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kypc_cli::{emit_system_file, parse_system_file, parse_system_str};
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn kypc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kypc"))
        .args(args)
        .env_remove("KYPC_LOG")
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = kypc(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_system(dir: &tempfile::TempDir, text: &str) -> PathBuf {
    let p = dir.path().join("system.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn analyze_det_scalar_regulator() {
    let v = json_ok(&["analyze-det", path(&data("scalar_det.json"))]);
    let p = v["riccati"]["p"][0][0].as_f64().unwrap();
    assert!((p - (2f64.sqrt() - 1.0)).abs() <= 1e-10);
    let margin = v["frequency"]["strict_margin"].as_f64().unwrap();
    assert!((margin - 2f64.sqrt()).abs() <= 1e-6);
    assert_eq!(v["coercivity"]["verdict"], "coercive");
    assert_eq!(v["cross_check"]["verdict"], "consistent");
    assert_eq!(v["settings"]["coercivity"]["tol"], 1e-6);
    assert!(v["coercivity"]["settings"]["dt"].as_f64().is_some());
}

#[test]
fn not_coercive_verdict_exits_zero() {
    let v = json_ok(&["analyze-det", path(&data("oscillator.json")), "--grid-points", "512"]);
    assert_eq!(v["frequency"]["nonstrict_ok"], false);
    assert_eq!(v["coercivity"]["verdict"], "not_coercive");
    assert_eq!(v["riccati"]["classification"], "no_solution");
    assert_eq!(v["cross_check"]["verdict"], "consistent");
    assert_eq!(v["settings"]["grid"]["points"], 512);
}

#[test]
fn scan_frequency_csv() {
    let out = kypc(&["scan-frequency", path(&data("scalar_det.json")), "--grid-points", "64", "--grid-max", "100"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("omega,min_eig"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert!(rows.len() >= 64);
    assert!(rows.iter().all(|&(w, _)| w.abs() <= 100.0));
    // Φ(ω) = 1 + 1/(1 + ω²) for the scalar regulator
    for &(w, e) in &rows {
        assert!((e - (1.0 + 1.0 / (1.0 + w * w))).abs() <= 1e-12, "{w} {e}");
    }

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    let v = json_ok(&["scan-frequency", path(&data("scalar_det.json")), "--csv", path(&csv)]);
    assert_eq!(v["summary"]["nonstrict_ok"], true);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("omega,min_eig\n"));
}

#[test]
fn witness_has_negative_cost() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("witness.csv");
    let v = json_ok(&["witness", path(&data("oscillator.json")), "--omega", "2", "--eta", "[1]", "--csv", path(&csv)]);
    assert!(v["total_cost"].as_f64().unwrap() < 0.0);
    assert!(v["rate_rel_error"].as_f64().unwrap() <= 0.05);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,re_u1,im_u1\n"));

    let v = json_ok(&["witness", path(&data("oscillator.json")), "--omega", "-2"]);
    assert!(v["total_cost"].as_f64().unwrap() < 0.0);
}

#[test]
fn witness_rejects_non_violating_direction() {
    let out = kypc(&["witness", path(&data("scalar_det.json")), "--omega", "1", "--eta", "[1]"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not violating"));
}

#[test]
fn analyze_stoch_scalar() {
    let v = json_ok(&["analyze-stoch", path(&data("scalar_stoch.json"))]);
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let p = v["analysis"]["stabilizing_p"][0][0].as_f64().unwrap();
    assert!((p - golden).abs() <= 1e-10);
    assert_eq!(v["analysis"]["verdict"], "coercive");
    assert!(v["analysis"]["composition_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["mean_square"]["ms_abscissa"], -1.0);
    assert_eq!(v["settings"]["gain_tol"], 1e-6);
}

#[test]
fn analyze_stoch_not_coercive_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_system(&dir, r#"{"kind":"stochastic","A":[[-1]],"B":[[1]],"N":[[1]],"cost":{"W":[[-5]]}}"#);
    let v = json_ok(&["analyze-stoch", path(&f)]);
    assert_eq!(v["analysis"]["verdict"], "not_coercive");
}

#[test]
fn simulate_matches_exact_cost() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("moments.csv");
    let system = data("scalar_stoch.json");
    let args = [
        "simulate",
        path(&system),
        "--feedback",
        "riccati",
        "--paths",
        "4000",
        "--horizon",
        "6",
        "--seed",
        "11",
        "--csv",
        path(&csv),
    ];
    let v = json_ok(&args);
    let exact = v["exact_cost"].as_f64().unwrap();
    let est = &v["estimate"];
    let total = est["mean"].as_f64().unwrap() + est["truncation_tail"].as_f64().unwrap();
    assert!((total - exact).abs() <= 3.0 * est["half_width"].as_f64().unwrap(), "{v}");
    assert_eq!(est["config"]["seed"], 11);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,second_moment\n"));
    assert_eq!(text.lines().count(), 6001 + 1);

    let again = kypc(&args);
    assert_eq!(serde_json::from_slice::<Value>(&again.stdout).unwrap(), v);
}

#[test]
fn simulate_defaults_and_x0() {
    let v = json_ok(&["simulate", path(&data("scalar_stoch.json")), "--paths", "200", "--horizon", "1"]);
    assert_eq!(v["feedback_kind"], "zero");
    assert_eq!(v["x0"], serde_json::json!([1.0]));
    let v = json_ok(&["simulate", path(&data("scalar_stoch.json")), "--paths", "200", "--horizon", "1", "--x0", "[0]"]);
    assert_eq!(v["estimate"]["mean"], 0.0);
    assert_eq!(v["estimate"]["half_width"], 0.0);
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"kind":"deterministic","A":[[-1]],"cost":{"W":[[1]]}}"#, 4, "`B`"),
        (r#"{"kind":"deterministic","A":[[-1,0],[0,-1]],"B":[[1]],"cost":{"W":[[1,0],[0,1]]}}"#, 5, "B rows"),
        (r#"{"kind":"deterministic","A":[[-1]],"B":[[1]],"cost":{"W":[[[1,1]]]}}"#, 6, "W not Hermitian"),
        (r#"{"kind":"deterministic","A":[[-1]],"B":[[1]],"cost":{"W":[[1]],"R":[[0]]}}"#, 7, "R not positive definite"),
    ];
    for (text, code, msg) in cases {
        let f = write_system(&dir, text);
        let out = kypc(&["analyze-det", path(&f)]);
        assert_eq!(out.status.code(), Some(code), "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(msg), "{text}");
        assert!(out.stdout.is_empty());
    }
    let out = kypc(&["analyze-det", path(&dir.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(3));
    let out = kypc(&["analyze-det", path(&data("scalar_det.json")), "--grid-points", "1"]);
    assert_eq!(out.status.code(), Some(2));
    // no mean-square stabilizing feedback exists
    let out = kypc(&["analyze-stoch", path(&data("ms_unstable.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn diagnostics_go_to_stderr() {
    let out = Command::new(env!("CARGO_BIN_EXE_kypc"))
        .args(["analyze-det", path(&data("scalar_det.json"))])
        .env("KYPC_LOG", "info")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("riccati"));
    serde_json::from_slice::<Value>(&out.stdout).unwrap();
}

#[test]
fn system_files_round_trip() {
    for name in ["scalar_det.json", "oscillator.json", "scalar_stoch.json", "ms_unstable.json"] {
        let b = parse_system_file(&data(name)).unwrap();
        let again = parse_system_str(&emit_system_file(&b)).unwrap();
        assert_eq!(again, b, "{name}");
    }
    let text = r#"{"kind":"stochastic","A":[[[0.1,-0.3],0.7],[1e-300,[-2.5e10,1e-17]]],"B":[[1,0],[[0,1],2]],
        "N":[[0.3,0],[0,[0,0.2]]],"cost":{"W":[[0.1,[1,2]],[[1,-2],-3]],"V":[[1,2],[[3,4],5]],"R":[[2,[0,1]],[[0,-1],3]]}}"#;
    let b = parse_system_str(text).unwrap();
    let again = parse_system_str(&emit_system_file(&b)).unwrap();
    let close = |x: &kypc::MatrixData, y: &kypc::MatrixData| x.iter().zip(y.iter()).all(|(a, b)| (a - b).norm() <= 1e-15 * (1.0 + a.norm()));
    assert!(close(&b.a, &again.a) && close(&b.b, &again.b) && close(&b.cost.w, &again.cost.w));
    assert_eq!(again, b);
}
