use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bayes-tomop"))
        .args(args)
        .env("BAYES_TOMOP_OUT", out_dir)
        .output()
        .unwrap()
}

fn error_line(o: &Output) -> String {
    let err = String::from_utf8_lossy(&o.stderr);
    let lines: Vec<&str> = err.lines().filter(|l| l.starts_with("error ")).collect();
    assert_eq!(lines.len(), 1, "stderr: {err}");
    lines[0].to_string()
}

const RPS_CONFIG: &str = r#"
game = "rps"
agent = "tomop1"
episodes = 200
runs = 2
seed = 3

[opponent]
kind = "non-stationary"
period = 50
"#;

#[test]
fn train_run_sweep_summarize() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let o = cli(out, &["train", "--game", "rps", "--seed", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("store/rps.json").is_file());

    let cfg = out.join("ns.toml");
    fs::write(&cfg, RPS_CONFIG).unwrap();
    let o = cli(out, &["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("ns/run-000.csv").is_file());
    assert!(out.join("ns/run-001.csv").is_file());
    assert!(out.join("ns/summary.csv").is_file());

    let o = cli(out, &["sweep", "--config", cfg.to_str().unwrap(), "--param", "l", "--values", "5,35"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sweep = fs::read_to_string(out.join("ns/sweep-l.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 3);

    let o = cli(out, &["summarize", out.join("ns").to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("tomop1") && text.contains("runs=2"), "{text}");
}

#[test]
fn run_twice_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    assert!(cli(out, &["train", "--game", "rps", "--seed", "1"]).status.success());
    let cfg = out.join("ns.toml");
    fs::write(&cfg, RPS_CONFIG).unwrap();
    assert!(cli(out, &["run", "--config", cfg.to_str().unwrap()]).status.success());
    let first = fs::read(out.join("ns/run-001.csv")).unwrap();
    assert!(cli(out, &["run", "--config", cfg.to_str().unwrap()]).status.success());
    assert_eq!(first, fs::read(out.join("ns/run-001.csv")).unwrap());
}

#[test]
fn missing_store_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, RPS_CONFIG).unwrap();
    let o = cli(tmp.path(), &["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(error_line(&o).starts_with("error code=missing-store msg="));
}

#[test]
fn bad_config_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "game = \"rps\"\nagent = \"tomop1\"\nepisodez = 3\n").unwrap();
    let o = cli(tmp.path(), &["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(error_line(&o).starts_with("error code=config msg="));
}

#[test]
fn unknown_sweep_parameter_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    assert!(cli(out, &["train", "--game", "rps"]).status.success());
    let cfg = out.join("c.toml");
    fs::write(&cfg, RPS_CONFIG).unwrap();
    let o = cli(out, &["sweep", "--config", cfg.to_str().unwrap(), "--param", "gamma", "--values", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(error_line(&o).starts_with("error code=config msg="));
}

#[test]
fn malformed_run_file_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run-000.csv"), "run,episode\n0,zero\n").unwrap();
    let o = cli(tmp.path(), &["summarize", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(error_line(&o).starts_with("error code=csv msg="));
}

#[test]
fn usage_errors_are_one_line() {
    let tmp = tempfile::tempdir().unwrap();
    let o = cli(tmp.path(), &["train", "--game", "chess"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(error_line(&o).starts_with("error code=usage msg="));
}
