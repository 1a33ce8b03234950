//! Black-box CLI checks: exit codes, artifact layout, config handling.

use std::path::Path;
use std::process::{Command, Output};

fn eventcast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eventcast"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn synth_preprocess_train_forecast_chain() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&eventcast(
        dir.path(),
        &["synth", "--rows", "800", "--classes", "3", "--out", "data.csv", "--seed", "5"],
    ));
    assert_ok(&eventcast(
        dir.path(),
        &["preprocess", "--dataset-path", "data.csv", "--seed", "5"],
    ));
    assert_ok(&eventcast(
        dir.path(),
        &[
            "train",
            "--seed",
            "5",
            "--learner-n-rounds",
            "15",
            "--learner-n-trees",
            "15",
        ],
    ));
    assert_ok(&eventcast(dir.path(), &["forecast", "--seed", "5"]));
    assert_ok(&eventcast(dir.path(), &["report"]));
    for artifact in [
        "out/dataset.evc",
        "out/dataset.evc.json",
        "out/model.json",
        "out/metrics.json",
        "out/metrics.csv",
        "out/scores.csv",
        "out/confusion.csv",
        "out/confusion.json",
        "out/timings.csv",
        "out/forecast.json",
        "out/forecast.csv",
        "out/report.md",
    ] {
        assert!(dir.path().join(artifact).exists(), "{artifact} missing");
    }

    // all four learners produce a metric row and a timing row
    let metrics: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/metrics.json")).unwrap())
            .unwrap();
    assert_eq!(metrics["learners"].as_array().unwrap().len(), 4);
    let timings = std::fs::read_to_string(dir.path().join("out/timings.csv")).unwrap();
    assert_eq!(timings.lines().count(), 5, "header + one row per learner");
    assert!(timings.starts_with("learner,seconds\n"));
    // per-class metrics CSV: one row per class plus the macro summary
    let per_class = std::fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap();
    assert!(per_class.starts_with("class,precision,recall,f1,support\n"));
    assert_eq!(per_class.lines().count(), 1 + 3 + 1);
}

#[test]
fn sweep_writes_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&eventcast(
        dir.path(),
        &["synth", "--rows", "600", "--classes", "3", "--out", "data.csv"],
    ));
    assert_ok(&eventcast(dir.path(), &["preprocess", "--dataset-path", "data.csv"]));
    assert_ok(&eventcast(
        dir.path(),
        &[
            "sweep",
            "--learner-n-rounds",
            "8",
            "--selection-k-min",
            "2",
            "--selection-k-max",
            "3",
        ],
    ));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep_kbest.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,accuracy,precision,recall,f1"));
    assert_eq!(lines.count(), 2);

    assert_ok(&eventcast(
        dir.path(),
        &[
            "sweep",
            "--learner-n-rounds",
            "8",
            "--selection-method",
            "rfe",
            "--selection-step",
            "2",
        ],
    ));
    assert!(dir.path().join("out/sweep_rfe.csv").exists());
    assert!(dir.path().join("out/rfe_order.csv").exists());
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&eventcast(
        dir.path(),
        &["synth", "--rows", "400", "--classes", "2", "--out", "data.csv"],
    ));
    std::fs::write(
        dir.path().join("run.toml"),
        "seed = 11\noutput_dir = \"artifacts\"\n\n[dataset]\npath = \"data.csv\"\n",
    )
    .unwrap();
    assert_ok(&eventcast(dir.path(), &["-c", "run.toml", "preprocess"]));
    assert!(dir.path().join("artifacts/dataset.evc").exists());
    // flag overrides the config's output_dir
    assert_ok(&eventcast(
        dir.path(),
        &["-c", "run.toml", "preprocess", "--output-dir", "elsewhere"],
    ));
    assert!(dir.path().join("elsewhere/dataset.evc").exists());
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let dir = tempfile::tempdir().unwrap();
    // config error: unknown schema name
    let out = eventcast(
        dir.path(),
        &["preprocess", "--dataset-path", "x.csv", "--dataset-schema", "nope"],
    );
    assert_eq!(out.status.code(), Some(2), "unknown schema is a config error");
    // data error: missing file
    let out = eventcast(dir.path(), &["preprocess", "--dataset-path", "missing.csv"]);
    assert_eq!(out.status.code(), Some(3), "missing file is a data error");
    // data error: training without a preprocessed artifact
    let out = eventcast(dir.path(), &["train"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("preprocess"), "should hint at the fix: {err}");
    // config error: malformed TOML
    std::fs::write(dir.path().join("bad.toml"), "not toml at all [").unwrap();
    let out = eventcast(dir.path(), &["-c", "bad.toml", "preprocess"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&eventcast(
        dir.path(),
        &["synth", "--rows", "200", "--classes", "2", "--out", "a.csv", "--seed", "3"],
    ));
    assert_ok(&eventcast(
        dir.path(),
        &["synth", "--rows", "200", "--classes", "2", "--out", "b.csv", "--seed", "3"],
    ));
    assert_ok(&eventcast(
        dir.path(),
        &["synth", "--rows", "200", "--classes", "2", "--out", "c.csv", "--seed", "4"],
    ));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    let c = std::fs::read(dir.path().join("c.csv")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("proto,service,state,dur,sbytes,rate,ct_srv,attack_cat\n"));
}

#[test]
fn hybrid_resampling_flows_through_train() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&eventcast(
        dir.path(),
        &["synth", "--rows", "900", "--classes", "3", "--out", "data.csv"],
    ));
    assert_ok(&eventcast(dir.path(), &["preprocess", "--dataset-path", "data.csv"]));
    let out = eventcast(
        dir.path(),
        &[
            "train",
            "--train-learners",
            "gbt",
            "--learner-n-rounds",
            "10",
            "--resample-mode",
            "hybrid",
            "--resample-majority-cap-ratio",
            "1.5",
            "--resample-minority-target-ratio",
            "1.0",
        ],
    );
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("resampled training split"), "{stdout}");
}

#[test]
fn grid_reiterates_twelve_cells_and_picks_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&eventcast(
        dir.path(),
        &["synth", "--rows", "400", "--classes", "2", "--out", "data.csv"],
    ));
    assert_ok(&eventcast(dir.path(), &["preprocess", "--dataset-path", "data.csv"]));
    let out = eventcast(
        dir.path(),
        &["train", "--train-learners", "gbt", "--train-grid", "true"],
    );
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches("grid depth=").count(), 12, "{stdout}");
    assert!(stdout.contains("grid winner:"), "{stdout}");
    assert!(dir.path().join("out/model.json").exists());
}
