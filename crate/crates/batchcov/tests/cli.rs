//! End-to-end checks of the `batchcov` binary: exit codes, artifact schema,
//! and byte-identical reruns across worker counts.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_batchcov"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const COVERAGE_CONFIG: &str = r#"{
    "version": 1,
    "command": "coverage",
    "model": {"f": {"terms": [{"exps": [1], "coef": 1.0}, {"exps": [2], "coef": 1.0}]}},
    "distribution": {"kind": "normal", "params": {"d": 1}},
    "k": 5, "n": 10, "alphas": [0.1], "reps": 5000, "seed": 42,
    "timing": false
}"#;

#[test]
fn csv_schema_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cov.json", COVERAGE_CONFIG);
    let out = dir.path().join("out.csv");
    let status = bin()
        .args(["coverage", "--config", &cfg, "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,K,n,alpha,q,c_hat,c_halfwidth,theoretical_coverage,empirical_coverage,empirical_halfwidth,rejected_reps,wall_seconds"
    );
    assert_eq!(lines.clone().count(), 4);
    for line in lines {
        assert_eq!(line.split(',').count(), 12, "row: {line}");
        assert!(!line.contains(';'));
    }
}

#[test]
fn bad_config_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"version": 1, "command": "coverage", "repz": 3}"#,
    );
    let out = bin().args(["coverage", "--config", &cfg]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("repz"), "stderr: {err}");
}

#[test]
fn command_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cov.json", COVERAGE_CONFIG);
    let out = bin()
        .args(["coefficient", "--config", &cfg])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("command"), "stderr: {err}");
}

#[test]
fn numeric_guard_exits_3() {
    // f(x) = x^2 has a zero gradient at the mean: the conditioning step
    // rejects it
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "degenerate.json",
        r#"{
            "version": 1,
            "command": "coefficient",
            "model": {"f": {"terms": [{"exps": [2], "coef": 1.0}]}},
            "distribution": {"kind": "normal", "params": {"d": 1}},
            "k": 5, "alphas": [0.1], "reps": 1000, "seed": 1
        }"#,
    );
    let out = bin()
        .args(["coefficient", "--config", &cfg])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reruns_across_worker_counts_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cov.json", COVERAGE_CONFIG);
    let mut artifacts = Vec::new();
    for workers in ["1", "2"] {
        let out = dir.path().join(format!("out_{workers}.csv"));
        let status = bin()
            .args([
                "coverage",
                "--config",
                &cfg,
                "--workers",
                workers,
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        artifacts.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(artifacts[0], artifacts[1]);

    // and a plain rerun with the same worker count
    let out = dir.path().join("out_again.csv");
    bin()
        .args([
            "coverage",
            "--config",
            &cfg,
            "--workers",
            "2",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(artifacts[1], std::fs::read(&out).unwrap());
}

#[test]
fn json_format_is_supported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cov.json", COVERAGE_CONFIG);
    let out = bin()
        .args(["coverage", "--config", &cfg, "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 4);
    assert!(rows[0]["empirical_coverage"].is_number());
}

#[test]
fn oracle_k2_prints_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "oracle.json",
        r#"{"version": 1, "command": "oracle-k2", "lambda": 1.0, "q": 1.0}"#,
    );
    let out = bin()
        .args(["oracle-k2", "--config", &cfg])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    // four rows, SJ most negative
    assert_eq!(text.lines().count(), 5);
    assert!(text.contains("sj,2,"));
}

#[test]
fn shipped_configs_parse_and_smoke_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        batchcov::config::ExperimentConfig::from_json(&text)
            .unwrap_or_else(|e| panic!("config {path:?} failed to parse: {e}"));
    }
    // one cheap end-to-end run of a shipped fixture
    let cfg = root.join("k2_oracle.json");
    let out = bin()
        .args(["oracle-k2", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn dependent_trajectory_export() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    let cfg = write(
        dir.path(),
        "dep.json",
        &format!(
            r#"{{
                "version": 1,
                "command": "dependent",
                "chain": {{"kind": "finite_markov",
                           "transition": [[0.5, 0.5], [0.5, 0.5]],
                           "values": [0.0, 1.0], "atom": 0}},
                "k": 4, "n": 25, "alphas": [0.1], "reps": 200, "seed": 7,
                "approach": "regenerative", "methods": ["sj"],
                "export_trajectory": "{}", "trajectory_len": 500,
                "timing": false
            }}"#,
            traj.to_str().unwrap().replace('\\', "\\\\")
        ),
    );
    let status = bin()
        .args(["dependent", "--config", &cfg])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&traj).unwrap();
    assert!(text.starts_with("t,value\n"));
    assert_eq!(text.lines().count(), 501);
}
