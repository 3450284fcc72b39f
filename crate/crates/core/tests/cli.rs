use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_selfconf"))
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

/// The 7.1 config shrunk to test size.
fn small_config(dir: &Path, samples: u64) -> std::path::PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(configs().join("7.1.json")).unwrap()).unwrap();
    v["experiment"]["N"] = json!(3000);
    v["experiment"]["samples"] = json!(samples);
    v["report"]["mc"]["samples"] = json!(500);
    let p = dir.join(format!("small_{samples}.json"));
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

#[test]
fn list_is_sorted_and_maps_to_files() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(names, ["7.1", "7.2", "ABB", "B.2"]);
    for n in names {
        assert!(configs().join(format!("{n}.json")).exists());
    }
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\"system\": ").unwrap();
    let out_dir = dir.path().join("out");
    let out = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["exit"], 2);
    assert!(!out_dir.exists());
}

#[test]
fn schema_violation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(configs().join("7.1.json")).unwrap()).unwrap();
    v["potential"]["p"] = json!([0.5, 0.6]);
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, v.to_string()).unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_samples_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 0);
    let o = dir.path().join("o");
    let out = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&o).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(o.join("results.csv")).unwrap(), "sample_id,N,count,psi_sum,ball_sum,residual\n");
    assert!(o.join("summary.json").exists() && o.join("config_echo.json").exists());
}

#[test]
fn reruns_and_echo_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 4);
    let run = |cfg: &Path, out: &str, extra: &[&str]| {
        let o = dir.path().join(out);
        let st = bin().args(["run", "--config"]).arg(cfg).arg("--out").arg(&o).args(extra).output().unwrap();
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
        o
    };
    let a = run(&cfg, "a", &[]);
    let b = run(&cfg, "b", &["--threads", "2"]);
    let csv = std::fs::read(a.join("results.csv")).unwrap();
    assert_eq!(csv, std::fs::read(b.join("results.csv")).unwrap());
    let c = run(&a.join("config_echo.json"), "c", &[]);
    assert_eq!(csv, std::fs::read(c.join("results.csv")).unwrap());
    assert_eq!(std::fs::read(a.join("summary.json")).unwrap(), std::fs::read(c.join("summary.json")).unwrap());

    let d = run(&cfg, "d", &["--seed", "99"]);
    assert_ne!(csv, std::fs::read(d.join("results.csv")).unwrap());
    let echo: Value = serde_json::from_slice(&std::fs::read(d.join("config_echo.json")).unwrap()).unwrap();
    assert_eq!(echo["experiment"]["seed"], 99);
    let rows = String::from_utf8(csv).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4 * 2);
    assert!(rows.lines().nth(1).unwrap().starts_with("0,1000,"));
}

#[test]
fn flag_budget_overrun_exits_3_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    // Both maps fix 0, so every orbit point lies exactly on the sphere of
    // radius 1/2 around the target 1/2.
    let cfg = json!({
        "system": {"dim": 1, "maps": [{"type": "affine1d", "a": 0.5, "b": 0.0}, {"type": "affine1d", "a": 0.5, "b": 0.0}]},
        "potential": {"type": "bernoulli", "p": [0.5, 0.5]},
        "experiment": {"kind": "shrinking_target", "psi": {"type": "constant", "c": 0.5}, "targets": [[0.5]], "N": 50, "samples": 2, "seed": 1, "flag_budget": 0.0}
    });
    let p = dir.path().join("edge.json");
    std::fs::write(&p, cfg.to_string()).unwrap();
    let o = dir.path().join("o");
    let out = bin().args(["run", "--config"]).arg(&p).arg("--out").arg(&o).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&std::fs::read(o.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["flags"]["flagged_hits"], 100);
}

#[test]
fn example_subcommand_prints_summary() {
    let out = bin().args(["example", "B.2"]).output().unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["doubling_monotone"], true);
    let out = bin().args(["example", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn schema_matches_config_types() {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(configs().join("schema.json")).unwrap()).unwrap();
    let kinds = schema["$defs"]["experiment"]["properties"]["kind"]["enum"].as_array().unwrap();
    assert_eq!(kinds.len(), 4);
    for k in kinds {
        serde_json::from_value::<selfconf::config::ExperimentKind>(k.clone()).unwrap();
    }
    let top: Vec<&String> = schema["properties"].as_object().unwrap().keys().collect();
    assert_eq!(top, ["backend", "description", "experiment", "name", "potential", "report", "system"]);
}
