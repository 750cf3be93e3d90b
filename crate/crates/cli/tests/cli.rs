//! CLI integration tests: each subcommand end to end, including
//! cross-process steering through the task's steering file.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

fn orchid() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orchid"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[test]
fn run_writes_artifacts_and_status_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = orchid()
        .args(["--out", dir.path().to_str().unwrap(), "run"])
        .args(["--prompt", "Build a REST API for user management"])
        .args(["--budget", "1.00"])
        .args(["--mode", "power"])
        .args(["--task-id", "t1"])
        .args([
            "--scenario",
            fixtures()
                .join("scenarios/approve_first_round.json")
                .to_str()
                .unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("status:     completed"), "{stdout}");
    assert!(dir.path().join("t1/final.txt").exists());
    assert!(dir.path().join("t1/result.json").exists());
    assert!(dir.path().join("t1/events.jsonl").exists());

    let out = orchid()
        .args(["--out", dir.path().to_str().unwrap(), "status", "t1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("completed"));
    assert!(stdout.contains("step:       12"));
}

#[test]
fn run_respects_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("cfg.toml");
    std::fs::write(
        &config_path,
        format!(
            "mode = \"companion\"\nout_dir = \"{}\"\n[security]\nblocked_patterns = [\"rm -rf\"]\n",
            dir.path().join("runs").display()
        ),
    )
    .unwrap();
    // A blocked prompt fails at the security step.
    let out = orchid()
        .args(["--config", config_path.to_str().unwrap(), "run"])
        .args(["--prompt", "please rm -rf the archive"])
        .args(["--task-id", "blocked"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("status:     failed"), "{stdout}");
}

#[test]
fn discover_prints_catalog_and_caches() {
    let dir = tempfile::tempdir().unwrap();
    let out = orchid()
        .args(["--out", dir.path().to_str().unwrap(), "discover"])
        .args(["--fixtures", fixtures().join("providers").to_str().unwrap()])
        .args([
            "--static",
            fixtures().join("static_models.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("discovered 7 models"), "{stdout}");
    assert!(stdout.contains("northwind-xl"));
    // Static entry shadows the discovered local-7b.
    assert!(stdout.contains("static"));
    assert!(dir.path().join("catalog.json").exists());

    // Second invocation hits the cache.
    let out = orchid()
        .args(["--out", dir.path().to_str().unwrap(), "discover"])
        .args(["--fixtures", fixtures().join("providers").to_str().unwrap()])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("catalog cache hit"), "{stdout}");

    // Force refreshes regardless.
    let out = orchid()
        .args(["--out", dir.path().to_str().unwrap(), "discover", "--force"])
        .args(["--fixtures", fixtures().join("providers").to_str().unwrap()])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("discovered"), "{stdout}");
}

#[test]
fn bench_loop_reports_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = orchid()
        .args(["--out", dir.path().to_str().unwrap(), "bench", "loop"])
        .args(["--tasks", "10", "--iterations", "3"])
        .args([
            "--scenario",
            fixtures()
                .join("scenarios/bench_rising.json")
                .to_str()
                .unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("tasks improved (delta > 0)        10/10"),
        "{stdout}"
    );
    assert!(
        stdout.contains("tasks converged (>= 0.8)          10/10"),
        "{stdout}"
    );
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("bench_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["improved_count"], 10);
    assert_eq!(report["tasks"], 10);
}

#[test]
fn steer_pauses_and_resumes_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let out_arg = dir.path().to_str().unwrap().to_string();
    // Queue a pause before the task starts; the engine reads the steering
    // file at the first step boundary.
    let pause = orchid()
        .args(["--out", &out_arg, "steer", "t1", "pause"])
        .output()
        .unwrap();
    assert!(pause.status.success());

    let child = orchid()
        .args(["--out", &out_arg, "run"])
        .args(["--prompt", "long running work"])
        .args(["--task-id", "t1"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();

    // Wait for the paused state to land in state.json, then resume from
    // this (separate) process.
    let state_path = dir.path().join("t1/state.json");
    let mut paused = false;
    for _ in 0..200 {
        if let Ok(text) = std::fs::read_to_string(&state_path) {
            if text.contains("\"paused\"") {
                paused = true;
                break;
            }
        }
        std::thread::sleep(std::time::Duration::from_millis(10));
    }
    assert!(paused, "task never reached the paused state");
    let resume = orchid()
        .args(["--out", &out_arg, "steer", "t1", "resume"])
        .output()
        .unwrap();
    assert!(resume.status.success());

    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("status:     completed"), "{stdout}");
}

#[test]
fn steer_redirect_requires_prompt() {
    let dir = tempfile::tempdir().unwrap();
    let out = orchid()
        .args([
            "--out",
            dir.path().to_str().unwrap(),
            "steer",
            "t1",
            "redirect",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = orchid()
        .args([
            "--out",
            dir.path().to_str().unwrap(),
            "steer",
            "t1",
            "redirect",
        ])
        .args(["--prompt", "new direction"])
        .output()
        .unwrap();
    assert!(out.status.success());
}
