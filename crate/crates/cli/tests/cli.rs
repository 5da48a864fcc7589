use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn driftsense(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftsense"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) {
    fs::write(
        dir.join("small.toml"),
        "n_windows = 4\nsynth_posts_per_window = 400\nsynth_drift_windows = [3]\n",
    )
    .unwrap();
}

#[test]
fn bench_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    for out in ["a", "b"] {
        let o = driftsense(
            dir.path(),
            &["bench", "--config", "small.toml", "--seed", "11", "--out", out],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(dir.path().join("a/bench.csv")).unwrap();
    let b = fs::read(dir.path().join("b/bench.csv")).unwrap();
    assert_eq!(a, b);
    assert!(String::from_utf8(a)
        .unwrap()
        .starts_with("window,f1_static,f1_adaptive,"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 11);
}

#[test]
fn seed_flag_changes_the_stream() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    for (seed, out) in [("1", "s1"), ("2", "s2")] {
        assert!(driftsense(
            dir.path(),
            &["generate", "--config", "small.toml", "--seed", seed, "--out", out]
        )
        .status
        .success());
    }
    let a = fs::read(dir.path().join("s1/posts.jsonl")).unwrap();
    let b = fs::read(dir.path().join("s2/posts.jsonl")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn label_train_detect_from_files() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    let ok = |args: &[&str]| {
        let o = driftsense(dir.path(), args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    ok(&["generate", "--config", "small.toml", "--out", "gen"]);
    fs::write(
        dir.path().join("files.toml"),
        "n_windows = 4\nsynth_drift_windows = []\nposts_path = \"gen/posts.jsonl\"\nevents_path = \"gen/events.jsonl\"\n",
    )
    .unwrap();
    ok(&["label", "--config", "files.toml", "--window", "0", "--out", "lab"]);
    let labels = fs::read_to_string(dir.path().join("lab/labels-w000.jsonl")).unwrap();
    assert!(labels.lines().last().unwrap().starts_with("{\"stats\""));

    ok(&[
        "train",
        "--config",
        "files.toml",
        "--labels",
        "lab/labels-w000.jsonl",
        "--store",
        "st",
    ]);
    ok(&[
        "train",
        "--config",
        "files.toml",
        "--labels",
        "lab/labels-w000.jsonl",
        "--store",
        "st",
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("st/manifest.json")).unwrap()).unwrap();
    // Two kinds, then two fresh models plus a copy of each stored one.
    assert_eq!(manifest["records"].as_array().unwrap().len(), 6);

    ok(&[
        "detect",
        "--config",
        "files.toml",
        "--store",
        "st",
        "--posts",
        "gen/posts.jsonl",
        "--out",
        "det",
    ]);
    let preds = fs::read_to_string(dir.path().join("det/predictions.jsonl")).unwrap();
    assert_eq!(preds.lines().count(), 1600);
}

#[test]
fn run_writes_csv_geojson_and_store() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    let o = driftsense(dir.path(), &["run", "--config", "small.toml", "--out", "r"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("r/run.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let geo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r/events.geojson")).unwrap()).unwrap();
    assert_eq!(geo["type"], "FeatureCollection");
    assert!(dir.path().join("r/store/checksums.sha256").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(driftsense(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(driftsense(dir.path(), &["bench", "--bogus"]).status.code(), Some(1));
    assert_eq!(driftsense(dir.path(), &["frobnicate"]).status.code(), Some(1));

    fs::write(dir.path().join("unknown.toml"), "nope = 1\n").unwrap();
    assert_eq!(
        driftsense(dir.path(), &["run", "--config", "unknown.toml"])
            .status
            .code(),
        Some(1)
    );
    fs::write(dir.path().join("range.toml"), "synth_swap_ratio = 2.0\n").unwrap();
    assert_eq!(
        driftsense(dir.path(), &["run", "--config", "range.toml"]).status.code(),
        Some(1)
    );
    assert_eq!(
        driftsense(dir.path(), &["run", "--config", "absent.toml"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        driftsense(dir.path(), &["label", "--window", "99"]).status.code(),
        Some(1)
    );

    let o = driftsense(dir.path(), &["detect", "--store", "missing", "--posts", "none.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.matches("No such file").count(), 1, "{err}");
}
