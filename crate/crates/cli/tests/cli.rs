use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scenebm::checkpoint::save_checkpoint;
use scenebm::scene::EncodedScene;
use scenebm::{ModelParams, NetworkConfig, TrainHistory};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_scenebm"));
    c.env_remove("SCENEBM_THREADS");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = bin().current_dir(dir).args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "scenebm {args:?} failed:\n{}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// synth + split into `dir/data` and `dir/split`.
fn dataset(dir: &Path) {
    run(dir, &["synth", "--out", "data", "--seed", "7"]);
    run(dir, &["split", "--scenes", "data/scenes.json", "--vocab", "data/vocabulary.json", "--out", "split", "--seed", "7"]);
}

fn small_config(dir: &Path, epochs: usize) -> PathBuf {
    let path = dir.join(format!("small{epochs}.json"));
    let cfg = format!(
        r#"{{"data_dir": "split", "model": {{"kind": "Triway", "hidden1": 8, "hidden2": 4, "use_biases": true}},
            "hyper": {{"max_epochs": {epochs}, "patience": 10}}, "sampler": {{"settle_sweeps": 6}}}}"#
    );
    fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), &["synth", "--out", "a", "--seed", "7"]);
    run(dir.path(), &["synth", "--out", "b", "--seed", "7"]);
    for f in ["scenes.json", "vocabulary.json", "motifs.json"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn split_writes_stratified_manifests() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    let load = |name: &str| -> Vec<EncodedScene> {
        serde_json::from_str(&fs::read_to_string(dir.path().join("split").join(name)).unwrap()).unwrap()
    };
    let (train, test, val) = (load("train.json"), load("test.json"), load("validation.json"));
    assert_eq!((train.len(), test.len(), val.len()), (300, 150, 50));
    for cat in ["office", "living_room", "bedroom", "kitchen", "bathroom"] {
        let count = |s: &[EncodedScene]| s.iter().filter(|x| x.category == cat).count();
        assert_eq!((count(&train), count(&test), count(&val)), (60, 30, 10), "{cat}");
    }
}

#[test]
fn encode_echoes_dimension() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), &["synth", "--out", "data"]);
    let o = run(dir.path(), &["encode", "--scenes", "data/scenes.json", "--vocab", "data/vocabulary.json", "--out", "enc"]);
    assert!(stdout(&o).contains("dimension=3630"), "{}", stdout(&o));
    assert!(dir.path().join("enc/encoded.json").exists());
}

#[test]
fn derive_adds_relations_from_boxes() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = r#"[{"scene_id": "s", "category": "office", "objects": [
        {"id": 1, "label": "monitor", "box": {"center": [0, 0, 1.1], "size": [0.5, 0.2, 0.4], "yaw": 0}},
        {"id": 2, "label": "desk", "box": {"center": [0, 0, 0.45], "size": [1.2, 0.6, 0.9], "yaw": 0}}],
        "relations": []}]"#;
    fs::write(dir.path().join("in.json"), scenes).unwrap();
    run(dir.path(), &["derive", "--scenes", "in.json", "--out", "."]);
    let text = fs::read_to_string(dir.path().join("derived.json")).unwrap();
    assert!(text.contains("on_top") && text.contains("under"), "{text}");
}

#[test]
fn train_writes_checkpoint_log_and_plot_then_resumes() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    let two = small_config(dir.path(), 2);
    let three = small_config(dir.path(), 3);
    let one = small_config(dir.path(), 1);
    run(dir.path(), &["train", "--config", three.to_str().unwrap(), "--out", "straight", "--seed", "3"]);
    run(dir.path(), &["train", "--config", two.to_str().unwrap(), "--out", "resumed", "--seed", "3"]);

    let log = fs::read_to_string(dir.path().join("resumed/train_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2);
    for key in ["\"epoch\"", "\"obj_err\"", "\"rel_err\"", "\"val_err\""] {
        assert!(log.lines().all(|l| l.contains(key)), "{key}");
    }
    let svg = fs::read_to_string(dir.path().join("resumed/loss.svg")).unwrap();
    assert!(svg.contains(r#"data-label="objects""#) && svg.contains(r#"data-label="relations""#));

    run(
        dir.path(),
        &["train", "--config", one.to_str().unwrap(), "--out", "resumed", "--seed", "3", "--resume", "resumed/checkpoint.json"],
    );
    let log = fs::read_to_string(dir.path().join("resumed/train_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3);
    let straight_log = fs::read_to_string(dir.path().join("straight/train_log.jsonl")).unwrap();
    assert_eq!(log, straight_log, "resumed history diverged from the uninterrupted run");
    assert_eq!(
        fs::read(dir.path().join("resumed/checkpoint.json")).unwrap(),
        fs::read(dir.path().join("straight/checkpoint.json")).unwrap()
    );
}

fn zero_checkpoint(dir: &Path, num_objects: usize) -> PathBuf {
    let c = NetworkConfig::triway(num_objects, 4, 6, 3);
    let params = ModelParams::<f64>::zeros(c).unwrap();
    let path = dir.join(format!("zero{num_objects}.json"));
    save_checkpoint(&params, &TrainHistory::default(), &path).unwrap();
    path
}

#[test]
fn eval_null_model_out_of_context_near_half() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    let ck = zero_checkpoint(dir.path(), 30);
    let o = run(
        dir.path(),
        &["eval", "--checkpoint", ck.to_str().unwrap(), "--task", "3", "--data", "split/test.json", "--out", "rep"],
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("rep/task3.json")).unwrap()).unwrap();
    let metric = report["metric"].as_f64().unwrap();
    assert!((metric - 0.5).abs() < 0.03, "{metric}");
    assert!(dir.path().join("rep/task3.csv").exists() && dir.path().join("rep/task3.txt").exists());
    assert!(stdout(&o).contains("chance"));
}

#[test]
fn eval_task1_reports_chance_row() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    let ck = zero_checkpoint(dir.path(), 30);
    run(dir.path(), &["eval", "--checkpoint", ck.to_str().unwrap(), "--task", "1", "--data", "split/test.json", "--out", "rep"]);
    let text = fs::read_to_string(dir.path().join("rep/task1.txt")).unwrap();
    let chance_line = text.lines().find(|l| l.starts_with("chance")).expect("chance row");
    let value: f64 = chance_line.split_whitespace().last().unwrap().parse().unwrap();
    assert!((value - 1.0 / (4.0 * 900.0)).abs() < 1e-9, "{value}");
}

#[test]
fn eval_rejects_mismatched_vocabulary_without_output() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    let ck = zero_checkpoint(dir.path(), 12);
    let o = bin()
        .current_dir(dir.path())
        .args(["eval", "--checkpoint", ck.to_str().unwrap(), "--task", "2", "--data", "split/test.json", "--out", "rep"])
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("V=12"));
    assert!(!dir.path().join("rep").exists());
}

#[test]
fn generate_from_objects_writes_scenes() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    let ck = zero_checkpoint(dir.path(), 30);
    run(
        dir.path(),
        &[
            "generate", "--checkpoint", ck.to_str().unwrap(), "--vocab", "split/vocabulary.json", "--objects", "desk,monitor",
            "--motifs", "split/motifs.json", "--count", "4", "--out", "gen",
        ],
    );
    let scenes: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("gen/generated_scenes.json")).unwrap()).unwrap();
    let scenes = scenes.as_array().unwrap();
    assert_eq!(scenes.len(), 4);
    for s in scenes {
        let labels: Vec<&str> = s["objects"].as_array().unwrap().iter().map(|o| o["label"].as_str().unwrap()).collect();
        assert!(labels.contains(&"desk") && labels.contains(&"monitor"));
    }
    assert!(dir.path().join("gen/generate.json").exists());
}

#[test]
fn oracle_check_passes_and_catches_mutations() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(dir.path(), &["oracle-check", "--quick"]);
    assert!(stdout(&ok).contains("0 failed"), "{}", stdout(&ok));

    for (mutation, invariant) in [("flip-update-sign", "update"), ("wrong-triway-aggregation", "tri-way")] {
        let o = bin().current_dir(dir.path()).args(["oracle-check", "--quick", "--mutation", mutation]).output().unwrap();
        assert!(!o.status.success(), "{mutation} went unnoticed");
        let text = stdout(&o);
        let failing: Vec<&str> = text.lines().filter(|l| l.starts_with("[FAIL]")).collect();
        assert!(!failing.is_empty(), "{text}");
        assert!(failing.iter().any(|l| l.to_lowercase().contains(invariant)), "{text}");
    }
}

#[test]
fn inspect_summarizes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path());
    let ck = zero_checkpoint(dir.path(), 30);
    assert!(stdout(&run(dir.path(), &["inspect", ck.to_str().unwrap()])).contains("V=30"));
    assert!(stdout(&run(dir.path(), &["inspect", "split/train.json"])).contains("encoded scenes: 300"));
    assert!(stdout(&run(dir.path(), &["inspect", "split/vocabulary.json"])).contains("30 labels"));
    assert!(stdout(&run(dir.path(), &["inspect", "data/scenes.json"])).contains("scenes: 500"));
}

#[test]
fn thread_count_from_flag_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), &["--threads", "2", "synth", "--out", "a"]);
    let o = bin().current_dir(dir.path()).env("SCENEBM_THREADS", "two").args(["synth", "--out", "b"]).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("SCENEBM_THREADS"));
}

#[test]
fn missing_config_is_reported_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().current_dir(dir.path()).args(["train", "--config", "nope.json"]).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.json"));
}
