//! End-to-end tests of the `envsamp` binary: exit codes, stdout shape,
//! artifact schemas, and byte-level reproducibility of seeded runs.

use std::path::Path;
use std::process::{Command, Output};

fn envsamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_envsamp")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process not signalled")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn envelope_monotone_passes() {
    let out = envsamp(&["envelope", "--class", "monotone", "--N", "1024", "--seed", "3"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("verdict      PASS"), "stdout: {text}");
    assert!(text.contains("dominance    ok"), "stdout: {text}");
}

#[test]
fn envelope_tree_uses_exact_query_count() {
    let out = envsamp(&["envelope", "--class", "tree", "--depth", "6"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    // Depth 6 prunes one level: 2^6 − 1 = 63 queries, met exactly.
    assert!(stdout(&out).contains("63 / 63 exact"), "stdout: {}", stdout(&out));
}

#[test]
fn envelope_report_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = envsamp(&[
        "envelope",
        "--class",
        "logconcave",
        "--N",
        "4096",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("report.json"))).unwrap();
    assert_eq!(report["class"], "logconcave");
    assert_eq!(report["domain_size"], 4096);
    assert_eq!(report["pass"], true);
    assert_eq!(report["first_violation"], serde_json::Value::Null);
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "envelope");
    assert_eq!(manifest["library_version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn envelope_flat_class_requires_domain_size() {
    let out = envsamp(&["envelope", "--class", "monotone"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("envsamp:"), "stderr: {}", stderr(&out));
}

#[test]
fn envelope_tree_rejects_flat_domain_flag() {
    let out = envsamp(&["envelope", "--class", "tree", "--N", "127"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let out = envsamp(&[]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn bandit_artifacts_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let base = [
        "bandit",
        "--algo",
        "fast",
        "--K",
        "16",
        "--T",
        "300",
        "--seeds",
        "3",
        "--env",
        "fixed_partition:0.25",
        "--schedule",
        "exp",
    ];
    let mut with_trace: Vec<&str> = base.to_vec();
    with_trace.extend(["--trace", "--out", first.to_str().unwrap()]);
    let out = envsamp(&with_trace);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));

    let regret = read(&first.join("regret.csv"));
    let mut lines = regret.lines();
    assert_eq!(lines.next(), Some("t,mean_regret,std_regret,n_seeds"));
    assert_eq!(lines.count(), 300);

    let trace = read(&first.join("trace.csv"));
    assert_eq!(trace.lines().next(), Some("seed,t,arm,loss,cum_loss,kth_calls,wall_ns"));
    assert_eq!(trace.lines().count(), 1 + 3 * 300);

    let manifest: serde_json::Value =
        serde_json::from_str(&read(&first.join("manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "bandit");
    assert_eq!(manifest["parameters"]["arms"], 16);
    assert_eq!(manifest["parameters"]["env"], "fixed_partition:0.25");
    assert_eq!(manifest["library_version"], env!("CARGO_PKG_VERSION"));
    let artifacts: Vec<&str> =
        manifest["artifacts"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(artifacts.contains(&"regret.csv"), "artifacts: {artifacts:?}");
    assert!(artifacts.contains(&"trace.csv"), "artifacts: {artifacts:?}");

    // Same flags, no trace: the seeded regret table must be byte-identical.
    let mut without_trace: Vec<&str> = base.to_vec();
    without_trace.extend(["--out", second.to_str().unwrap()]);
    let out = envsamp(&without_trace);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(regret, read(&second.join("regret.csv")));
    assert!(!second.join("trace.csv").exists());
}

#[test]
fn bandit_regret_as_json_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = envsamp(&[
        "bandit",
        "--algo",
        "exp3",
        "--K",
        "8",
        "--T",
        "50",
        "--seeds",
        "2",
        "--format",
        "json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let rows: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("regret.json"))).unwrap();
    let rows = rows.as_array().expect("array of row objects");
    assert_eq!(rows.len(), 50);
    let first = rows[0].as_object().unwrap();
    for key in ["t", "mean_regret", "std_regret", "n_seeds"] {
        assert!(first.contains_key(key), "missing {key}: {first:?}");
    }
    assert_eq!(rows[0]["t"], 1);
    assert_eq!(rows[0]["n_seeds"], 2);
}

#[test]
fn bandit_rejects_bad_configuration() {
    for args in [
        &["bandit", "--algo", "fast", "--K", "1"][..],
        &["bandit", "--algo", "fast", "--schedule", "const:-1"][..],
        &["bandit", "--algo", "fast", "--env", "bogus"][..],
        &["bandit", "--algo", "exp3", "--audit"][..],
    ] {
        let out = envsamp(args);
        assert_eq!(exit_code(&out), 2, "args {args:?}, stderr: {}", stderr(&out));
    }
}

#[test]
fn sweep_monotone_table_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = envsamp(&[
        "sweep",
        "--class",
        "monotone",
        "--seeds",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("R^2"), "stdout: {}", stdout(&out));
    let table = read(&dir.path().join("sweep.csv"));
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("N,mean_queries,mean_ratio"));
    // Domain sizes 2^4 through 2^20.
    assert_eq!(lines.count(), 17);
}

#[test]
fn bench_writes_timing_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = envsamp(&["bench", "--K", "2048", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let table = read(&dir.path().join("bench.csv"));
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("K,algo,ns_per_iter"));
    // Two arm counts (2^10, 2^11) by two players.
    assert_eq!(lines.count(), 4);
}

#[test]
fn verify_passes_clean() {
    let out = envsamp(&["verify", "--seed", "1"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("verify: PASS"), "stdout: {}", stdout(&out));
}

#[test]
fn verify_detects_planted_spike() {
    let out = envsamp(&["verify", "--inject", "non-monotone"]);
    assert_eq!(exit_code(&out), 3, "stdout: {}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("FAIL"), "stdout: {text}");
    assert!(text.contains("planted"), "stdout: {text}");
}

#[test]
fn verify_detects_planted_bad_tail() {
    let out = envsamp(&["verify", "--inject", "bad-lambda"]);
    assert_eq!(exit_code(&out), 3, "stdout: {}", stdout(&out));
    assert!(stdout(&out).contains("planted fast-decay tail"), "stdout: {}", stdout(&out));
}
