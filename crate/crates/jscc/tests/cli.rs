//! Exit-code and output contract of the command-line binary.

use std::process::Command;

fn jscc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jscc"))
}

fn write_cfg(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const MINIMAL: &str = r#"{
    "q": 2, "n": 4, "l": 4, "m": 4,
    "source": {"kind": "iid", "p": [0.9, 0.1]},
    "channel": {"kind": "bsc", "param": 0.05},
    "code": {"kind": "uniform"},
    "quant": {"preset": "channel-coding"},
    "gamma": 0.1
}"#;

#[test]
fn simulate_happy_path_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "c.json", MINIMAL);
    let out = dir.path().join("r.csv");
    let st = jscc()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--seed", "7", "--trials", "5000", "--quiet", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("n,l,m,q,rate,gamma,channel,param,trials,seed,"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn missing_config_file_exits_2_with_path() {
    let o = jscc()
        .args(["simulate", "--config", "/nonexistent/conf.json"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("/nonexistent/conf.json"), "{err}");
}

#[test]
fn over_budget_spectrum_exits_3_with_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "big.json",
        &MINIMAL.replace("\"n\": 4, \"l\": 4", "\"n\": 30, \"l\": 4"),
    );
    let o = jscc()
        .args(["spectrum", "--config"])
        .arg(&cfg)
        .args(["--budget", "65536"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("65536"), "{err}");
}

#[test]
fn invalid_config_exits_2_listing_all_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "bad.json",
        &MINIMAL
            .replace("\"gamma\": 0.1", "\"gamma\": -1, \"mystery\": true")
            .replace("[0.9, 0.1]", "[0.9, 0.2]"),
    );
    let o = jscc().args(["bound", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("gamma"), "{err}");
    assert!(err.contains("mystery"), "{err}");
}

#[test]
fn bad_flags_exit_1() {
    assert_eq!(jscc().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(
        jscc().args(["simulate", "--no-such-flag"]).output().unwrap().status.code(),
        Some(1)
    );
    // no --config/--preset on a command that needs one
    assert_eq!(jscc().arg("simulate").output().unwrap().status.code(), Some(1));
}

#[test]
fn preset_list_names_all_presets() {
    let o = jscc().arg("preset-list").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["channel-coding", "source-coding", "jscc-default"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn alpha_and_goodness_emit_exact_rationals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "c.json", MINIMAL);
    let o = jscc().args(["goodness", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    // uniform ensemble: max alpha exactly 1, log rate exactly 0
    assert!(text.contains("1,1,0"), "{text}");

    let o = jscc()
        .args(["alpha", "--config"])
        .arg(&cfg)
        .args(["--format", "json"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let parsed: serde_json::Value =
        serde_json::from_slice(&o.stdout).expect("alpha --format json emits valid JSON");
    assert!(parsed.as_array().map(|a| !a.is_empty()).unwrap_or(false));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "c.json", MINIMAL);
    let run = |seed: &str| {
        let o = jscc()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .args(["--trials", "4000", "--quiet", "--seed", seed])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        o.stdout
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}
