use std::process::Command;

use mendel_ode::cli::{run, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["mendel-ode"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn help_and_version_succeed() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("reformulate-check"));
    assert_eq!(call(&["--version"]).0, EXIT_OK);
    assert_eq!(call(&["simulate", "--help"]).0, EXIT_OK);
}

#[test]
fn eigen_at_family_point() {
    let (code, out, _) = call(&["eigen", "orig3", "--at", "0.25,0.5,0.25"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("[1, 0, -1]"), "{out}");
    assert!(out.contains("unstable"));

    let (code, out, _) = call(&["eigen", "mod3", "--at", "0.25,0.5,0.25", "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["classification"], "stable_nonhyperbolic");
}

#[test]
fn eigen_away_from_steady_state_still_reports() {
    let (code, out, _) = call(&["eigen", "orig3", "--at", "0.3,0.3,0.3"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("not a steady state"));
}

#[test]
fn usage_errors_exit_one() {
    let cases: [&[&str]; 8] = [
        &["simulate", "--system", "orig3", "--q0", "0.5,0.5"],
        &["reproduce", "fig9"],
        &["simulate", "--system", "orig4"],
        &["simulate", "--system", "orig2", "--abstol", "tiny"],
        &["eigen", "orig2", "--at", "0.5"],
        &["field", "orig3"],
        &["frobnicate"],
        &["simulate", "--system", "mod2", "--abstol", "0", "--reltol", "0"],
    ];
    for args in cases {
        let (code, _, err) = call(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
    let (_, _, err) = call(&["reproduce", "fig9"]);
    assert!(err.contains("fig8-3c"), "{err}");
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("x.csv");
    let (code, _, err) = call(&["reproduce", "fig8-2c", "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_RUNTIME);
    assert!(err.contains("x.csv"));
}

#[test]
fn reproduce_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig1.csv");
    let (code, out, err) = call(&["reproduce", "fig1", "--out", csv.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("fig1"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig1.json")).unwrap()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,q1,q2,q3,sum,u"));
    assert_eq!(lines.count() as u64, summary["n_accepted"].as_u64().unwrap() + 1);
    for key in [
        "preset",
        "termination",
        "event",
        "n_accepted",
        "n_rejected",
        "wall_time",
    ] {
        assert!(summary.get(key).is_some(), "{key}");
    }
    assert_eq!(summary["preset"], "fig1");
    assert!(matches!(
        summary["event"]["kind"].as_str(),
        Some("blowup_onset" | "extinction_onset")
    ));
}

#[test]
fn simulate_streams_csv_or_json() {
    let (code, out, _) = call(&["simulate", "--system", "mod2", "--q0", "0.2,0.6", "--t-end", "5"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("t,q1,q2,sum,u\n"));
    let (code, out, _) = call(&[
        "simulate",
        "--system",
        "deviation",
        "--q0",
        "-0.5",
        "--t-end",
        "2",
        "--method",
        "vern6",
        "--format",
        "json",
    ]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["method"], "vern6");
    assert_eq!(doc["termination"]["kind"], "reached_t_end");
}

#[test]
fn blow_up_is_success() {
    let (code, out, _) = call(&[
        "simulate",
        "--system",
        "deviation",
        "--q0",
        "0.1",
        "--format",
        "json",
    ]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["termination"]["kind"], "blow_up");
    assert_eq!(doc["event"]["kind"], "blowup_onset");
}

#[test]
fn big_precision_summary_uses_strings() {
    let (code, out, _) = call(&["reproduce", "fig8-2c", "--precision", "big", "--format", "json"]);
    if !mendel_ode::Precision::Big.is_available() {
        assert_eq!(code, EXIT_USAGE);
        return;
    }
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(doc["final_state"][0].is_string());
}

#[test]
fn field_and_steady_states() {
    let (code, out, _) = call(&["field", "orig2", "--min", "0", "--max", "1", "--step", "0.5"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines[0], "x,y,dx,dy,len");
    assert_eq!(lines.len(), 10);
    assert!(lines.contains(&"0.5,0.5,0.0,0.0,0.0"));

    let (code, out, _) = call(&["reproduce", "fig3-field", "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(!doc.as_array().unwrap().is_empty());

    let (code, out, _) = call(&["steady-states", "mod2", "--samples", "3", "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(doc
        .as_array()
        .unwrap()
        .iter()
        .any(|r| r["classification"] == "stable_nonhyperbolic"));
}

#[test]
fn reformulate_check_reports_small_residuals() {
    let (code, out, _) = call(&["reformulate-check", "orig3", "--samples", "2000"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.trim_end().ends_with("ok"), "{out}");
    let (code, out, _) = call(&["reformulate-check", "orig2", "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(doc["projection_first_integral"].as_f64().unwrap() <= 1e-12);
    assert!(doc["state_scaled_first_integral"].as_f64().unwrap() <= 1e-12);
    assert_eq!(call(&["reformulate-check", "mod3"]).0, EXIT_USAGE);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_mendel-ode");
    let ok = Command::new(bin)
        .args(["eigen", "orig3", "--at", "0.25,0.5,0.25"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("-1"));
    let bad = Command::new(bin).args(["reproduce", "nope"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
