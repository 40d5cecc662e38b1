//! End-to-end CLI checks: exit codes, flag handling, output overrides.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rdx() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rdx"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn rdx")
}

/// Small fast config for CLI-level tests.
fn tiny_config(dir: &Path) -> std::path::PathBuf {
    let text = r#"
out_dir = "OUT"
master_seed = 11

[environment]
kind = "highway"

[environment.highway]
num_lanes = 4
num_vehicles = 4
road_length = 30
episode_length = 15
speed_levels = 5
crash_penalty_total = -3.0

[learner]
gamma = 0.9
alpha = 0.2
epsilon_start = 1.0
epsilon_end = 0.1
epsilon_decay_episodes = 40
tau = 100
episodes = 60

[record]
episodes = 12

[summary]
k = 3
context_window = 4
interval = 4
metric = "max_minus_min"
selection = "highlights"
fs_replicates = 3

[[agents]]
id = "tiny"
weights = { CL = 3.0, SU = 1.0, RML = 8.0 }
"#;
    let out = dir.join("out");
    let config = dir.join("tiny.toml");
    fs::write(&config, text.replace("OUT", out.to_str().unwrap())).unwrap();
    config
}

#[test]
fn missing_config_exits_one_with_path() {
    let out = run(rdx().args(["train", "-c", "/nonexistent/nope.toml"]));
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("/nonexistent/nope.toml"),
        "stderr: {stderr}"
    );
}

#[test]
fn unknown_subcommand_exits_one_with_usage() {
    let out = run(rdx().arg("frobnicate"));
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("Usage") || stderr.contains("usage"),
        "stderr: {stderr}"
    );
}

#[test]
fn unknown_flag_exits_one() {
    let out = run(rdx().args(["demo", "--definitely-not-a-flag"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn record_before_train_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let out = run(rdx().args(["record", "-c", config.to_str().unwrap()]));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("train"), "stderr: {stderr}");
}

#[test]
fn pipeline_via_cli_with_replicates() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let cfg = config.to_str().unwrap();

    let out = run(rdx().args(["train", "-c", cfg]));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("out/agents/tiny/qtable.tsv").exists());
    assert!(dir
        .path()
        .join("out/agents/tiny/learning_curve.csv")
        .exists());

    let out = run(rdx().args(["record", "-c", cfg]));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // Ten frequency replicates with distinct derived seeds.
    let out = run(rdx().args([
        "summarize",
        "-c",
        cfg,
        "--method",
        "frequency",
        "--replicates",
        "10",
        "--k",
        "2",
    ]));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summaries_dir = dir.path().join("out/agents/tiny/summaries");
    let mut seeds = Vec::new();
    for r in 0..10 {
        let path = summaries_dir.join(format!("frequency_r{r}.json"));
        assert!(path.exists(), "missing {}", path.display());
        let doc: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        seeds.push(doc["spec"]["seed"].as_u64().unwrap());
    }
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), 10, "replicate seeds must be distinct");

    // The importance-based summary for render/judge.
    let out = run(rdx().args(["summarize", "-c", cfg]));
    assert_eq!(out.status.code(), Some(0));

    let out = run(rdx().args(["render", "-c", cfg, "--mode", "h+rd"]));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = dir.path().join("out/agents/tiny/reports/h_rd/report.html");
    assert!(report.exists());

    let out = run(rdx().args(["render", "-c", cfg, "--mode", "nonsense"]));
    assert_eq!(out.status.code(), Some(1));

    let out = run(rdx().args(["judge", "-c", cfg]));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("out/judge_report.json").exists());

    // Idempotency: rerunning a stage leaves byte-identical artifacts.
    let before = fs::read(&report).unwrap();
    let out = run(rdx().args(["render", "-c", cfg, "--mode", "h+rd"]));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(before, fs::read(&report).unwrap());
}

#[test]
fn out_dir_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let override_dir = dir.path().join("elsewhere");
    let out = run(rdx()
        .args(["train", "-c", config.to_str().unwrap()])
        .env("RDX_OUT", &override_dir));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(override_dir.join("agents/tiny/qtable.tsv").exists());
    assert!(!dir.path().join("out").exists());
}
