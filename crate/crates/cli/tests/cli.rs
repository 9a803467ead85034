use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use wspd_cli::config::ProjectConfig;

fn wspd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wspd")).args(args).env("WSPD_OUTPUT_DIR", dir).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write_config(dir: &Path, edit: impl FnOnce(&mut Value)) -> std::path::PathBuf {
    let mut v: Value = serde_json::from_str(wspd_cli::config::DEFAULT_CONFIG).unwrap();
    edit(&mut v);
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    p
}

fn checks(manifest: &Value) -> Vec<(String, String)> {
    manifest["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["id"].as_str().unwrap().to_string(), c["status"].as_str().unwrap().to_string()))
        .collect()
}

fn status_of(checks: &[(String, String)], id: &str) -> String {
    checks.iter().find(|c| c.0 == id).map(|c| c.1.clone()).unwrap_or_else(|| panic!("no check {id}"))
}

#[test]
fn jitter_and_fringe_commands_report_reference_values() {
    let tmp = tempfile::tempdir().unwrap();
    let j = wspd(tmp.path(), &["--json", "jitter", "--total-ps", "73", "--source-ps", "40"]);
    assert!(j.status.success());
    assert!((json(&j)["intrinsic_ps"].as_f64().unwrap() - 61.07).abs() < 0.01);

    let f = wspd(tmp.path(), &["--json", "fp-extract", "--tmax", "0.061", "--tmin", "0.018"]);
    assert!(f.status.success());
    assert!((json(&f)["coupling_efficiency"].as_f64().unwrap() - 0.1739).abs() < 1e-4);

    let e =
        wspd(tmp.path(), &["--json", "efficiency", "--coupling", "0.174", "--absorptance", "0.9", "--dqe", "0.197"]);
    assert!(e.status.success());
    assert!((json(&e)["sqe"].as_f64().unwrap() - 0.0343).abs() < 1e-4);

    let a = wspd(tmp.path(), &["--json", "absorptance", "--alpha-per-cm", "451", "--length-um", "51", "102"]);
    let rows = json(&a)["results"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 2);
    assert!((rows[0]["absorptance"].as_f64().unwrap() - 0.8998).abs() < 1e-4);
}

#[test]
fn exit_codes_follow_error_classes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(wspd(tmp.path(), &["jitter", "--bogus"]).status.code(), Some(2));
    assert_eq!(wspd(tmp.path(), &["jitter", "--total-ps", "40", "--source-ps", "73"]).status.code(), Some(4));
    let fp = wspd(tmp.path(), &["fp-extract", "--tmax", "0.5", "--tmin", "0.01", "--single-pass", "0.5"]);
    assert_eq!(fp.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&fp.stderr).starts_with("error: "));
    let missing =
        wspd(tmp.path(), &["--config", "/nonexistent/config.json", "jitter", "--total-ps", "73", "--source-ps", "40"]);
    assert_eq!(missing.status.code(), Some(7));
    let cfg = write_config(tmp.path(), |v| v["seed"] = Value::from("x"));
    let bad = wspd(tmp.path(), &["--config", cfg.to_str().unwrap(), "jitter", "--total-ps", "73", "--source-ps", "40"]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn invalid_config_is_rejected_before_any_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    for edit in [
        (|v: &mut Value| v["unexpected"] = Value::from(1)) as fn(&mut Value),
        |v| v["cross_section"]["layers"][1]["thickness_nm"] = Value::from(-300.0),
        |v| v["detector"]["bias_current_ua"] = Value::from(20.0),
    ] {
        let cfg = write_config(tmp.path(), edit);
        let o = wspd(&out_dir, &["--config", cfg.to_str().unwrap(), "reproduce-paper"]);
        assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(!out_dir.exists());
    }
}

#[test]
fn json_output_round_trips_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wspd(tmp.path(), &["--json", "fp-extract", "--tmax", "0.061", "--tmin", "0.018"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&v).unwrap() + "\n", text);
}

#[test]
fn default_config_matches_shipped_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wspd(tmp.path(), &["default-config"]);
    assert!(o.status.success());
    let printed = ProjectConfig::parse(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(printed.digest(), ProjectConfig::shipped().digest());
}

#[test]
fn counting_outputs_carry_digest_and_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["counts", "--power-pw", "1", "3", "--duration-s", "0.01"];
    assert!(wspd(a.path(), &args).status.success());
    assert!(wspd(b.path(), &args).status.success());
    let digest = ProjectConfig::shipped().digest();
    for name in ["count_rate_vs_power.csv", "counts-0.csv", "counts-1.csv", "counts-0.json"] {
        let x = std::fs::read_to_string(a.path().join(name)).unwrap();
        let y = std::fs::read_to_string(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
        assert!(x.contains(&format!("sha256:{digest}")), "{name} lacks the config digest");
    }
    let changed = tempfile::tempdir().unwrap();
    assert!(wspd(changed.path(), &["counts", "--power-pw", "1", "3", "--duration-s", "0.01", "--seed", "7"])
        .status
        .success());
    assert_ne!(
        std::fs::read(a.path().join("counts-0.csv")).unwrap(),
        std::fs::read(changed.path().join("counts-0.csv")).unwrap()
    );
}

#[test]
fn output_dir_flag_overrides_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let o = wspd(
        env_dir.path(),
        &["--output-dir", flag_dir.path().to_str().unwrap(), "counts", "--power-pw", "1", "--duration-s", "0.01"],
    );
    assert!(o.status.success());
    assert!(flag_dir.path().join("count_rate_vs_power.csv").exists());
    assert!(!env_dir.path().join("count_rate_vs_power.csv").exists());
}

#[test]
fn skipped_stages_mark_their_checks_not_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wspd(tmp.path(), &["--json", "reproduce-paper", "--skip", "mode-solver", "--skip", "tm-design"]);
    let m = json(&o);
    let c = checks(&m);
    for id in ["mode_alpha_per_cm", "absorptance_51um", "sqe", "counting_sqe_ratio", "tm_alpha_per_cm"] {
        assert_eq!(status_of(&c, id), "not-run", "{id}");
    }
    for id in ["coupling_efficiency", "intrinsic_jitter_ps", "kinetic_inductance_nh", "max_count_rate_mhz"] {
        assert_eq!(status_of(&c, id), "pass", "{id}");
    }
    assert_eq!(o.status.code(), Some(0));
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["data"]["config_digest"], Value::from(ProjectConfig::shipped().digest()));
    let summary = std::fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("# wspd "));
    assert!(summary.contains("coupling_efficiency"));
}

#[test]
fn design_without_wires_fails_absorption_checks_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), |v| v["cross_section"]["wires"] = Value::Null);
    let out = tmp.path().join("out");
    let o = wspd(&out, &["--json", "--config", cfg.to_str().unwrap(), "reproduce-paper", "--skip", "tm-design"]);
    assert_eq!(o.status.code(), Some(8));
    let c = checks(&json(&o));
    assert_eq!(status_of(&c, "mode_alpha_per_cm"), "fail");
    assert_eq!(status_of(&c, "absorptance_51um"), "fail");
    assert_ne!(status_of(&c, "sqe"), "pass");
    assert_eq!(status_of(&c, "coupling_efficiency"), "pass");
    assert_eq!(status_of(&c, "intrinsic_jitter_ps"), "pass");
}
