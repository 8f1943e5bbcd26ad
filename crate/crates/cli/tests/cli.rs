//! End-to-end tests of the `gridbroker` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gridbroker"))
}

fn scenario_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/reference.toml")
}

fn short_scenario(dir: &Path) -> PathBuf {
    // A trimmed copy of the reference scenario keeps the tests fast.
    let text = std::fs::read_to_string(scenario_path()).unwrap();
    let text = text.replace("sim_length = 86400", "sim_length = 7200");
    let path = dir.join("short.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn tempdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gridbroker-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn simulate_writes_reports() {
    let dir = tempdir("simulate");
    let scenario = short_scenario(&dir);
    let out = dir.join("run");
    let output = run(bin()
        .args(["simulate", "--policy", "optimistic", "--seed", "3"])
        .arg("--scenario")
        .arg(&scenario)
        .arg("--out")
        .arg(&out));
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    for file in ["ledger.csv", "events.csv", "metrics.csv", "metrics.json", "manifest.txt"] {
        assert!(out.join(file).exists(), "missing {file}");
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("profit"));
    let ledger = std::fs::read_to_string(out.join("ledger.csv")).unwrap();
    assert!(ledger.starts_with("t,P_re,P_grid,committed,"));
    assert_eq!(ledger.lines().count(), 7201); // header + one row per second
}

#[test]
fn simulate_is_idempotent() {
    let dir = tempdir("idempotent");
    let scenario = short_scenario(&dir);
    let out = dir.join("run");
    for _ in 0..2 {
        let output = run(bin()
            .args(["simulate", "--policy", "pessimistic", "--seed", "9"])
            .arg("--scenario")
            .arg(&scenario)
            .arg("--out")
            .arg(&out));
        assert!(output.status.success());
    }
    let first = std::fs::read(out.join("ledger.csv")).unwrap();
    let output = run(bin()
        .args(["simulate", "--policy", "pessimistic", "--seed", "9"])
        .arg("--scenario")
        .arg(&scenario)
        .arg("--out")
        .arg(&out));
    assert!(output.status.success());
    assert_eq!(first, std::fs::read(out.join("ledger.csv")).unwrap());
}

#[test]
fn missing_scenario_exits_2_and_names_path() {
    let output = run(bin().args([
        "simulate",
        "--policy",
        "optimistic",
        "--scenario",
        "/nonexistent/template.toml",
    ]));
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("/nonexistent/template.toml"), "{stderr}");
}

#[test]
fn usage_error_exits_1() {
    let output = run(bin().args(["simulate", "--policy"]));
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn unknown_policy_exits_2() {
    let dir = tempdir("badpolicy");
    let scenario = short_scenario(&dir);
    let output =
        run(bin().args(["simulate", "--policy", "bogus"]).arg("--scenario").arg(&scenario));
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn train_then_simulate_with_champion() {
    let dir = tempdir("train");
    let scenario = short_scenario(&dir);
    let out = dir.join("training");
    let output = run(bin()
        .args([
            "train",
            "--generations",
            "3",
            "--population",
            "6",
            "--seed",
            "5",
            "--dilation",
            "20",
        ])
        .arg("--scenario")
        .arg(&scenario)
        .arg("--out")
        .arg(&out));
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let log = std::fs::read_to_string(out.join("training_log.csv")).unwrap();
    assert!(log.starts_with("generation,best,median,worst,best_reimbursement"));
    assert_eq!(log.lines().count(), 4); // header + 3 generations

    // Best column is non-decreasing.
    let best: Vec<f64> = log
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(best.windows(2).all(|w| w[1] >= w[0]), "{best:?}");

    // Re-training with the same seed reproduces the champion byte-for-byte.
    let out2 = dir.join("training2");
    let output = run(bin()
        .args([
            "train",
            "--generations",
            "3",
            "--population",
            "6",
            "--seed",
            "5",
            "--dilation",
            "20",
        ])
        .arg("--scenario")
        .arg(&scenario)
        .arg("--out")
        .arg(&out2));
    assert!(output.status.success());
    assert_eq!(
        std::fs::read(out.join("champion.genome")).unwrap(),
        std::fs::read(out2.join("champion.genome")).unwrap()
    );

    // The champion checkpoint drives a neural simulation.
    let sim_out = dir.join("neural-run");
    let ckpt = out.join("champion.genome");
    let output = run(bin()
        .args(["simulate", "--policy", &format!("neural:{}", ckpt.display()), "--seed", "1"])
        .arg("--scenario")
        .arg(&scenario)
        .arg("--out")
        .arg(&sim_out));
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
}

#[test]
fn mismatched_checkpoint_topology_is_rejected() {
    let dir = tempdir("mismatch");
    let scenario = short_scenario(&dir);
    // Five outputs against a seven-duration catalog.
    let ckpt = dir.join("bad.genome");
    let mut text = String::from(
        "gridbroker-genome v1\ntopology layered\ninputs 6\nhidden 2\noutputs 5\ngenes 29\n",
    );
    for _ in 0..29 {
        text.push_str("0.1\n");
    }
    std::fs::write(&ckpt, text).unwrap();
    let output = run(bin()
        .args(["simulate", "--policy", &format!("neural:{}", ckpt.display())])
        .arg("--scenario")
        .arg(&scenario));
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("outputs"), "{stderr}");
}

#[test]
fn evaluate_and_report_aggregate_runs() {
    let dir = tempdir("evaluate");
    let scenario = short_scenario(&dir);
    let runs = dir.join("runs");

    for (policy, sub) in [("optimistic", "opt"), ("pessimistic", "pess")] {
        let output = run(bin()
            .args(["evaluate", "--policy", policy, "--runs", "4", "--seed", "10", "--dilation", "5"])
            .arg("--scenario")
            .arg(&scenario)
            .arg("--out")
            .arg(runs.join(sub)));
        assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
        let csv = std::fs::read_to_string(runs.join(sub).join("metrics.csv")).unwrap();
        assert_eq!(csv.lines().count(), 5); // header + 4 runs
        // Distinct seeds recorded per run.
        let seeds: Vec<&str> =
            csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
        assert_eq!(seeds, vec!["10", "11", "12", "13"]);
    }

    // Aggregate both policies into one grouped summary.
    let output = run(bin().arg("report").arg("--in").arg(&runs));
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let summary = std::fs::read_to_string(runs.join("summary.csv")).unwrap();
    assert!(summary.starts_with("policy,metric,count,min,median,max"));
    assert!(summary.lines().any(|l| l.starts_with("optimistic,profit,4,")));
    assert!(summary.lines().any(|l| l.starts_with("pessimistic,profit,4,")));
}

#[test]
fn report_empty_directory_fails() {
    let dir = tempdir("report-empty");
    let output = run(bin().arg("report").arg("--in").arg(&dir));
    assert_eq!(output.status.code(), Some(2));
}
