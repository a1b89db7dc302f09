use std::path::Path;
use std::process::{Command, Output};

fn polyak(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyak"))
        .args(args)
        .env("POLYAK_OUT", out)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn run_quad_with_audits() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyak(
        &["run", "--problem", "quad", "--stepper", "polyak", "--x1", "8", "--steps", "50", "--audit", "one_step,rate:self_bounded:L=1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(dir.path());
    let verdicts = m["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 2);
    assert!(verdicts.iter().all(|v| v["passed"] == true));
    for f in m["files"].as_array().unwrap() {
        assert!(Path::new(f.as_str().unwrap()).exists());
    }
}

#[test]
fn run_sps_fail_over_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyak(
        &[
            "run",
            "--problem",
            "sps_fail",
            "--stepper",
            "alg1:gamma=inf",
            "--transform",
            "shift_per_component_inf",
            "--x1",
            "1",
            "--steps",
            "100",
            "--seeds",
            "0..99",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let m = manifest(dir.path());
    assert_eq!(m["files"].as_array().unwrap().len(), 100);
    assert!(m["mean_final_gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn failing_audit_exits_one_and_still_writes_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyak(
        &["run", "--problem", "quad", "--x1", "8", "--steps", "3", "--audit", "rate:self_bounded:L=0.001"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(manifest(dir.path())["verdicts"][0]["passed"], false);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyak(&["run", "--problem", "quad", "--x1", "8", "--steps", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("steps"));
    let o = polyak(&["reproduce", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cycle"));
    assert_eq!(polyak(&["frobnicate"], dir.path()).status.code(), Some(2));
}

#[test]
fn certify_examples() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| polyak(args, dir.path()).status.code();
    assert_eq!(code(&["certify", "--problem", "fig1", "--property", "lsuc", "--lambda", "2"]), Some(0));
    assert_eq!(code(&["certify", "--problem", "fig1", "--property", "self_bounded", "--L", "9"]), Some(0));
    assert_eq!(code(&["certify", "--problem", "quad", "--property", "sharp", "--s", "1"]), Some(1));
    assert_eq!(code(&["certify", "--problem", "sps_fail", "--property", "lsuc", "--lambda", "1"]), Some(2));
}

#[test]
fn reproduce_writes_csv_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["cycle", "sps_fail"] {
        let o = polyak(&["reproduce", name], dir.path());
        assert_eq!(o.status.code(), Some(0), "{name}");
        let base = dir.path().join("reproduce");
        assert!(base.join(format!("{name}.csv")).exists());
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(base.join(format!("{name}.json"))).unwrap()).unwrap();
        assert_eq!(v["passed"], true);
    }
}

#[test]
fn list_names_everything() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyak(&["list"], dir.path());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["fig1", "alg1:gamma", "hinge_at_opt", "alg1_linear", "equivalence", "measure_zero"] {
        assert!(text.contains(name), "{name}");
    }
}
