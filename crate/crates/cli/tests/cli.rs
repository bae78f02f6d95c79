use std::path::PathBuf;
use std::process::Command;

use invlp::io::ProblemFile;
use invlp_cli::{run, EXIT_FILE, EXIT_INVALID, EXIT_OK, EXIT_SOLVER};
use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).to_string_lossy().into_owned()
}

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("invlp").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = invoke(args);
    assert_eq!(code, EXIT_OK, "stderr: {err}");
    serde_json::from_str(&out).unwrap()
}

fn temp_problem(text: &str) -> tempfile::NamedTempFile {
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), text).unwrap();
    f
}

#[test]
fn fit_square() {
    let v = json(&["fit", "--variant", "adg", "--norm", "l1", &fixture("square.json")]);
    assert_eq!(v["c_star"], serde_json::json!([0.0, 1.0]));
    assert_eq!(v["z_star"], 3.25);
    assert_eq!(v["path"], "feasible_centroid");
    assert!(v.get("rho").is_none());
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(keys, ["variant", "c_star", "y_star", "eps", "z_star", "path", "diagnostics"]);
}

#[test]
fn gof_square() {
    let v = json(&["gof", "--variant", "adg", &fixture("square.json")]);
    assert!((v["rho"].as_f64().unwrap() - 0.638889).abs() < 1e-6);
    assert_eq!(v["baselines"], serde_json::json!([9.0, 14.75, 9.0, 3.25]));
    assert_eq!(v["excluded_rows"], serde_json::json!([]));
}

#[test]
fn each_variant_fits() {
    for variant in ["adg", "rdg", "dsp"] {
        for norm in ["l1", "linf"] {
            let v = json(&["fit", "--variant", variant, "--norm", norm, &fixture("square.json")]);
            assert_eq!(v["variant"], variant);
        }
    }
    for p in ["1", "2", "inf"] {
        let v = json(&["fit", "--variant", "dsp", "--p", p, &fixture("square.json")]);
        assert!((v["z_star"].as_f64().unwrap() - 3.25).abs() < 1e-9);
    }
}

#[test]
fn support_mask_flag() {
    let v = json(&["fit", "--variant", "adg", "--support-mask", "1,0", &fixture("square.json")]);
    assert_eq!(v["c_star"][1], 0.0);
    let (code, _, _) = invoke(&["fit", "--variant", "adg", "--support-mask", "1", &fixture("square.json")]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn file_errors() {
    let (code, _, err) = invoke(&["fit", "--variant", "rdg", "missing.json"]);
    assert_eq!(code, EXIT_FILE);
    assert_eq!(err.lines().count(), 1);
    let bad = temp_problem("{\"A\": [[1, 0]], \"b\": ");
    assert_eq!(invoke(&["fit", "--variant", "adg", bad.path().to_str().unwrap()]).0, EXIT_FILE);
    let unknown = temp_problem("{\"A\": [[1, 0]], \"b\": [1], \"cost\": [1]}");
    assert_eq!(invoke(&["fit", "--variant", "adg", unknown.path().to_str().unwrap()]).0, EXIT_FILE);
}

#[test]
fn validation_errors() {
    let ragged = temp_problem(r#"{"A": [[1, 0], [1]], "b": [1, 1], "points": [[1, 1]]}"#);
    assert_eq!(invoke(&["fit", "--variant", "adg", ragged.path().to_str().unwrap()]).0, EXIT_INVALID);
    let zero_row = temp_problem(r#"{"A": [[1, 0], [0, 0]], "b": [1, 1], "points": [[1, 1]]}"#);
    let (code, _, err) = invoke(&["fit", "--variant", "adg", zero_row.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("zero row 1"));
    assert_eq!(invoke(&["fit", "--variant", "adg", "--norm", "l2", &fixture("square.json")]).0, EXIT_INVALID);
    assert_eq!(invoke(&["fit", &fixture("square.json")]).0, EXIT_INVALID);
    let cone = temp_problem(r#"{"A": [[1, -1], [-1, -1]], "b": [0, 0], "points": [[3, 0]]}"#);
    assert_eq!(invoke(&["fit", "--variant", "rdg", cone.path().to_str().unwrap()]).0, EXIT_INVALID);
    assert_eq!(invoke(&["gof", "--variant", "rdg", cone.path().to_str().unwrap()]).0, EXIT_INVALID);
}

#[test]
fn solver_errors() {
    let empty = temp_problem(r#"{"A": [[1], [-1]], "b": [1, 0], "points": [[0.5]]}"#);
    assert_eq!(invoke(&["fit", "--variant", "dsp", empty.path().to_str().unwrap()]).0, EXIT_SOLVER);
    let unbounded = temp_problem(r#"{"A": [[1, 0]], "b": [0], "points": [[1, 1]]}"#);
    assert_eq!(invoke(&["forward", "--cost", "0,1", unbounded.path().to_str().unwrap()]).0, EXIT_SOLVER);
}

#[test]
fn structured_fits() {
    let v = json(&["fit", "--variant", "adg", "--structured", &fixture("weights.json")]);
    let alpha: Vec<f64> = serde_json::from_value(v["alpha"].clone()).unwrap();
    assert!((alpha[0] - 0.5).abs() < 1e-9 && (alpha[1] - 0.5).abs() < 1e-9);
    assert_eq!(v["path"], "structured");
    let v = json(&["fit", "--variant", "rdg", "--structured", &fixture("weights.json")]);
    assert!(v["z_star"].as_f64().unwrap() < 1e-9);
    assert_eq!(invoke(&["fit", "--variant", "dsp", "--structured", &fixture("weights.json")]).0, EXIT_INVALID);
    assert_eq!(invoke(&["fit", "--variant", "adg", "--structured", &fixture("square.json")]).0, EXIT_INVALID);
}

#[test]
fn forward_solves() {
    let v = json(&["forward", "--cost", "0,1", &fixture("square.json")]);
    assert_eq!(v["objective"], 1.0);
    let v = json(&["forward", "--alpha", "1,0", &fixture("weights.json")]);
    assert_eq!(v["objectives"][0], 0.0);
    assert_eq!(invoke(&["forward", "--cost", "1", &fixture("square.json")]).0, EXIT_INVALID);
    assert_eq!(invoke(&["forward", &fixture("square.json")]).0, EXIT_INVALID);
}

#[test]
fn gen_then_fit() {
    let args = ["gen", "--true-alpha", "0.3,0.7", "--q", "5", "--noise", "0", "--seed", "9"];
    let (code, out, _) = invoke(&[&args[..], &[fixture("weights.json").as_str()]].concat());
    assert_eq!(code, EXIT_OK);
    let file = ProblemFile::parse(&out).unwrap();
    assert_eq!(file.points.len(), 5);
    let generated = temp_problem(&out);
    let v = json(&["fit", "--variant", "adg", "--structured", generated.path().to_str().unwrap()]);
    assert_eq!(v["z_star"], 0.0);
    let noisy = ["gen", "--true-alpha", "0.5,0.5", "--q", "8", "--noise", "0.3", "--seed", "3", &fixture("weights.json")];
    assert_eq!(invoke(&noisy).1, invoke(&noisy).1);
}

#[test]
fn sweep_csv() {
    let (code, out, _) = invoke(&["sweep", "--variant", "adg", "--g1", "0:1:3", "--g2", "2:3:2", &fixture("corridor.json")]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "gamma1,gamma2,rho");
    assert_eq!(lines.len(), 7);
    let cells: Vec<(f64, f64)> = lines[1..]
        .iter()
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            (f[0], f[1])
        })
        .collect();
    assert_eq!(cells, [(0.0, 2.0), (0.0, 3.0), (0.5, 2.0), (0.5, 3.0), (1.0, 2.0), (1.0, 3.0)]);
    assert_eq!(invoke(&["sweep", "--variant", "adg", "--g1", "0:1", &fixture("corridor.json")]).0, EXIT_INVALID);
}

#[test]
fn check_and_oracle() {
    let v = json(&["check", &fixture("square.json")]);
    assert_eq!(v["dsp_dominates"], true);
    let v = json(&["oracle", "--variant", "adg", &fixture("square.json")]);
    assert!((v["value"].as_f64().unwrap() - 3.25).abs() < 1e-9);
    let v = json(&["oracle", "--variant", "dsp", "--p", "inf", &fixture("square.json")]);
    assert!((v["value"].as_f64().unwrap() - 3.25).abs() < 1e-9);
}

#[test]
fn writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let (code, out, _) = invoke(&["fit", "--variant", "adg", "--out", path.to_str().unwrap(), &fixture("square.json")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["z_star"], 3.25);
    let bad = dir.path().join("no/such/dir/report.json");
    assert_eq!(invoke(&["fit", "--variant", "adg", "--out", bad.to_str().unwrap(), &fixture("square.json")]).0, EXIT_FILE);
}

#[test]
fn fixtures_round_trip() {
    for name in ["square.json", "corridor.json", "weights.json"] {
        let f = ProblemFile::read(std::path::Path::new(&fixture(name))).unwrap();
        assert_eq!(ProblemFile::parse(&f.to_json()).unwrap(), f);
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_invlp");
    let ok = Command::new(bin).args(["fit", "--variant", "adg", &fixture("square.json")]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    let missing = Command::new(bin).args(["fit", "--variant", "rdg", "missing.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(EXIT_FILE));
    assert_eq!(String::from_utf8_lossy(&missing.stderr).lines().count(), 1);
}
