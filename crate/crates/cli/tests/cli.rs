//! Functional tests for the `coja` binary: flag surface, exit codes,
//! export formats, and environment handling. Experiment invocations stay
//! tiny; statistical behavior is covered by the library suites and the
//! acceptance checklist.

use std::process::{Command, Output};

/// The binary under test, isolated from the caller's environment.
fn coja() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_coja"));
    cmd.env_remove("COJA_OUT_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    coja().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

// ─────────────────────────── flag surface ───────────────────────────────

#[test]
fn help_lists_every_flag() {
    let out = run(&["converge", "--help"]);
    assert!(out.status.success());
    let help = String::from_utf8(out.stdout).expect("help is text");
    for flag in [
        "--d",
        "--lambda1",
        "--lambda2",
        "--algo",
        "--schedule",
        "--eta-hat",
        "--scale",
        "--iters",
        "--trials",
        "--seed",
        "--stride",
        "--out",
    ] {
        assert!(help.contains(flag), "converge help is missing {flag}");
    }

    let out = run(&["track", "--help"]);
    let help = String::from_utf8(out.stdout).expect("help is text");
    assert!(help.contains("--velocity") && help.contains("--eta-hat"));

    let out = run(&["diagnose", "--help"]);
    let help = String::from_utf8(out.stdout).expect("help is text");
    assert!(help.contains("--c2") && help.contains("--eta") && help.contains("--samples"));
}

#[test]
fn unknown_flags_are_usage_errors() {
    let out = run(&["bound", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn an_inverted_spectrum_is_a_configuration_error() {
    let out = run(&["bound", "--lambda1", "1", "--lambda2", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).expect("stderr is text");
    assert!(
        err.contains("error"),
        "stderr should explain the failure: {err}"
    );
}

#[test]
fn misplaced_step_flags_are_rejected() {
    let out = run(&["converge", "--schedule", "theorem", "--eta-hat", "0.001"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["converge", "--schedule", "constant", "--scale", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_velocity_tracking_is_rejected() {
    let out = run(&[
        "track",
        "--velocity",
        "0",
        "--iters",
        "100",
        "--trials",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).expect("stderr is text");
    assert!(
        err.contains("converge"),
        "the error should point at `converge`: {err}"
    );
}

#[test]
fn out_of_range_diagnostics_are_rejected() {
    let out = run(&["diagnose", "--c2", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["diagnose", "--samples", "100"]);
    assert_eq!(out.status.code(), Some(2));
}

// ──────────────────────── output paths and formats ──────────────────────

#[test]
fn missing_output_directory_is_an_io_error() {
    let dir = tempfile::tempdir().expect("tempdir is available");
    let path = dir.path().join("no-such-subdir").join("x.csv");
    let out = coja()
        .args(["converge", "--d", "4", "--iters", "200", "--trials", "2"])
        .arg("--out")
        .arg(&path)
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn relative_outputs_join_the_environment_directory() {
    let dir = tempfile::tempdir().expect("tempdir is available");
    let out = coja()
        .env("COJA_OUT_DIR", dir.path())
        .args([
            "converge",
            "--d",
            "4",
            "--iters",
            "200",
            "--trials",
            "2",
            "--out",
            "nested.csv",
        ])
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    assert!(dir.path().join("nested.csv").is_file());
    let summary = stdout_json(&out);
    assert_eq!(
        summary["out"].as_str(),
        dir.path().join("nested.csv").to_str(),
        "the summary should report the resolved path"
    );
}

#[test]
fn absolute_outputs_ignore_the_environment_directory() {
    let env_dir = tempfile::tempdir().expect("tempdir is available");
    let out_dir = tempfile::tempdir().expect("tempdir is available");
    let path = out_dir.path().join("direct.csv");
    let out = coja()
        .env("COJA_OUT_DIR", env_dir.path())
        .args(["converge", "--d", "4", "--iters", "200", "--trials", "2"])
        .arg("--out")
        .arg(&path)
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    assert!(path.is_file());
    assert!(!env_dir.path().join("direct.csv").exists());
}

#[test]
fn json_extension_switches_the_export_format() {
    let dir = tempfile::tempdir().expect("tempdir is available");
    let csv_path = dir.path().join("series.csv");
    let json_path = dir.path().join("series.json");

    let out = coja()
        .args(["converge", "--d", "4", "--iters", "200", "--trials", "2"])
        .arg("--out")
        .arg(&csv_path)
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&csv_path).expect("CSV exists");
    assert!(csv.starts_with("t,mean_sin2,p20,p80,bound_sin2\n"));

    let out = coja()
        .args(["converge", "--d", "4", "--iters", "200", "--trials", "2"])
        .arg("--out")
        .arg(&json_path)
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    let series: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).expect("JSON exists"))
            .expect("file is JSON");
    assert!(series["config"].is_string() && series["rows"].is_array());
}

// ─────────────────────────── summary contents ───────────────────────────

#[test]
fn the_constants_report_carries_the_tracking_plan_on_request() {
    let plain = stdout_json(&run(&["bound"]));
    assert!(plain.get("eta_hat_star").is_none());
    assert!(plain["S"].is_number() && plain["t0"].is_number());

    let planned = stdout_json(&run(&["bound", "--velocity", "1e-4"]));
    for key in ["velocity", "eta_hat_star", "s_tilde", "x_star"] {
        assert!(planned[key].is_number(), "missing {key}");
    }
}

#[test]
fn summaries_expose_the_bound_coverage_only_when_it_exists() {
    let dir = tempfile::tempdir().expect("tempdir is available");

    let with_bound = coja()
        .args(["converge", "--d", "4", "--iters", "200", "--trials", "2"])
        .arg("--out")
        .arg(dir.path().join("a.csv"))
        .output()
        .expect("binary runs");
    let summary = stdout_json(&with_bound);
    assert!(summary["bound_cover"].is_number());
    assert!(summary["final_mean_sin2"].is_number());

    let without = coja()
        .args([
            "converge",
            "--d",
            "4",
            "--iters",
            "200",
            "--trials",
            "2",
            "--schedule",
            "warmup-const",
        ])
        .arg("--out")
        .arg(dir.path().join("b.csv"))
        .output()
        .expect("binary runs");
    let summary = stdout_json(&without);
    assert!(summary["bound_cover"].is_null());
}

#[test]
fn tracking_summaries_compare_measurement_and_plan() {
    let dir = tempfile::tempdir().expect("tempdir is available");
    let out = coja()
        .args([
            "track",
            "--velocity",
            "1e-3",
            "--iters",
            "500",
            "--trials",
            "2",
            "--seed",
            "11",
        ])
        .arg("--out")
        .arg(dir.path().join("t.csv"))
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    let summary = stdout_json(&out);
    for key in ["steady_state_sin2", "x_star", "eta_hat", "eta_hat_star"] {
        assert!(summary[key].is_number(), "missing {key}");
    }
    // Without --eta-hat the run uses the planned step.
    assert_eq!(summary["eta_hat"], summary["eta_hat_star"]);
}

#[test]
fn diagnostics_report_estimates_and_verdicts() {
    let out = run(&["diagnose", "--samples", "10000", "--seed", "3"]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    for key in ["g2", "h2", "gh", "czgh", "x_mean", "y2_mean"] {
        assert!(
            report["estimates"][key]["value"].is_number()
                && report["estimates"][key]["std_error"].is_number(),
            "missing estimate {key}"
        );
    }
    assert!(report["envelopes"]["a2"].is_number());
    assert!(report["probe"]["threshold"].is_number());
    assert!(report["all_pass"].is_boolean());
}
