use std::path::Path;
use std::process::{Command, Output};

fn revcover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revcover"))
        .args(args)
        .env("REVCOVER_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn error_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(text.lines().last().unwrap_or_default()).expect("stderr holds JSON")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_assign_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let out = dir.path().join("a.json");
    assert_eq!(
        code(&revcover(&[
            "generate",
            "--preset",
            "tiny-oracle",
            "--out",
            s(&inst)
        ])),
        0
    );
    let o = revcover(&[
        "--format",
        "json",
        "assign",
        s(&inst),
        "--tries",
        "2",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let body: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(body["report"]["dep_pct"], 0.0);

    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("a.json.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "assign");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    let o = revcover(&["evaluate", s(&inst), s(&out)]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("feasible: yes"));
}

#[test]
fn evaluate_reports_violations_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    revcover(&["generate", "--preset", "tiny-oracle", "--out", s(&inst)]);
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"assignment": {"sub-000": ["pc-000", "pc-000", "pc-001"]},
            "meta": {"method": "hand", "mode": "default", "lambda": 3, "seed": 0,
                     "theta": 0.0, "kappa": 0, "tries": 0}}"#,
    )
    .unwrap();
    let o = revcover(&["--format", "json", "evaluate", s(&inst), s(&bad)]);
    assert_eq!(code(&o), 2);
    let body: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(body["feasible"], false);
    assert!(!body["violations"].as_array().unwrap().is_empty());
}

#[test]
fn malformed_instance_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    std::fs::write(&inst, r#"{"lambda": 3, "submissions": 7}"#).unwrap();
    let o = revcover(&["assign", s(&inst)]);
    assert_eq!(code(&o), 3);
    assert_eq!(error_json(&o)["error"], "schema");
}

#[test]
fn bad_settings_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    revcover(&["generate", "--preset", "tiny-oracle", "--out", s(&inst)]);

    let o = revcover(&["assign", s(&inst), "--drop-pct", "1.5"]);
    assert_eq!(code(&o), 4);
    assert_eq!(error_json(&o)["error"], "config");

    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[divers]\nkapa = 3\n").unwrap();
    assert_eq!(
        code(&revcover(&["--config", s(&cfg), "assign", s(&inst)])),
        4
    );

    assert_eq!(
        code(&revcover(&[
            "generate", "--preset", "nope", "--out", "x.json"
        ])),
        4
    );
    assert_eq!(code(&revcover(&["assign"])), 4);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let out = dir.path().join("a.json");
    revcover(&["generate", "--preset", "tiny-oracle", "--out", s(&inst)]);
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[divers]\ntries = 2\nseed = 4\n").unwrap();
    let o = revcover(&[
        "--config",
        s(&cfg),
        "assign",
        s(&inst),
        "--seed",
        "9",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("a.json.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["config"]["settings"]["divers"]["tries"], 2);
    assert_eq!(manifest["seed"], 9);
}

#[test]
fn help_exits_cleanly() {
    let o = revcover(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["generate", "assign", "suggest", "evaluate", "compare"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}
