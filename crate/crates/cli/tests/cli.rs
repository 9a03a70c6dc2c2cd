use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use glovenet_core::dataset::{apply_sensor_mask, generate_synthetic, save_dataset, SensorMask, Vocabulary};
use serde_json::Value;
use sha2::{Digest, Sha256};

fn glovenet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glovenet"))
        .args(args)
        .env_remove("GLOVENET_SEED")
        .output()
        .expect("spawn glovenet")
}

fn ok(args: &[&str]) -> String {
    let out = glovenet(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("run_manifest.json")).unwrap()).unwrap()
}

fn sha256_hex(dir: &Path) -> String {
    let mut h = Sha256::new();
    h.update(fs::read(dir.join("manifest.json")).unwrap());
    h.update(fs::read(dir.join("data.f32")).unwrap());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn small_dataset(root: &Path, vocab: &str) -> std::path::PathBuf {
    let data = root.join(format!("data-{vocab}"));
    ok(&[
        "generate",
        "--vocab",
        vocab,
        "--n",
        "200",
        "--len",
        "16",
        "--seed",
        "1",
        "--out",
        p(&data),
    ]);
    data
}

#[test]
fn generate_train_eval_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = small_dataset(tmp.path(), "single");
    let before = snapshot(&data);
    for model in ["tree", "transformer"] {
        let ckpt = tmp.path().join(format!("ckpt-{model}"));
        let ev = tmp.path().join(format!("eval-{model}"));
        ok(&[
            "train",
            "--data",
            p(&data),
            "--model",
            model,
            "--epochs",
            "2",
            "--out",
            p(&ckpt),
        ]);
        let stdout = ok(&["eval", "--data", p(&data), "--ckpt", p(&ckpt), "--out", p(&ev)]);
        assert!(stdout.contains("accuracy"), "{stdout}");
        let metrics = fs::read_to_string(ev.join("metrics.csv")).unwrap();
        assert!(metrics.starts_with("metric,value\nsplit,test\n"));
        for dir in [&ckpt, &ev] {
            let m = manifest(dir);
            assert_eq!(m["dataset_hash"], sha256_hex(&data).as_str());
            for a in m["artifacts"].as_array().unwrap() {
                assert!(dir.join(a.as_str().unwrap()).is_file(), "{a} missing");
            }
        }
        let report = ok(&["report", "--run", p(&ev)]);
        assert!(report.contains("command    eval") && report.contains("accuracy,"));
    }
    assert_eq!(snapshot(&data), before, "inputs must not change");
}

#[test]
fn identical_flags_give_identical_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let data = small_dataset(tmp.path(), "multi");
    let mut logs = Vec::new();
    for run in 0..2 {
        let ckpt = tmp.path().join(format!("ckpt{run}"));
        let ev = tmp.path().join(format!("ev{run}"));
        ok(&[
            "train",
            "--data",
            p(&data),
            "--epochs",
            "2",
            "--seed",
            "4",
            "--out",
            p(&ckpt),
        ]);
        ok(&["eval", "--data", p(&data), "--ckpt", p(&ckpt), "--out", p(&ev)]);
        logs.push((
            fs::read(ckpt.join("train_log.csv")).unwrap(),
            fs::read(ckpt.join("params.f32")).unwrap(),
            fs::read(ev.join("metrics.csv")).unwrap(),
        ));
    }
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn eval_rejects_checkpoint_with_other_channel_count() {
    let tmp = tempfile::tempdir().unwrap();
    let data = small_dataset(tmp.path(), "single");
    let ckpt = tmp.path().join("ckpt");
    ok(&["train", "--data", p(&data), "--model", "tree", "--out", p(&ckpt)]);

    let ds = generate_synthetic(Vocabulary::Single, 200, 16, 1).unwrap();
    let index_only = apply_sensor_mask(&ds, &SensorMask::new([1]).unwrap()).unwrap();
    let narrow = tmp.path().join("narrow");
    save_dataset(&index_only, &narrow).unwrap();

    let ev = tmp.path().join("ev");
    let out = glovenet(&["eval", "--data", p(&narrow), "--ckpt", p(&ckpt), "--out", p(&ev)]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("S=30") && err.contains("S=6"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);
    assert!(!ev.join("run_manifest.json").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let data = small_dataset(tmp.path(), "single");
    let out = tmp.path().join("out");
    let missing = tmp.path().join("missing");
    let cases: [(&[&str], i32); 7] = [
        (&["train", "--data", p(&data), "--out", p(&out), "--unknown"], 1),
        (&["generate", "--vocab", "both", "--out", p(&out)], 1),
        (
            &["train", "--data", p(&data), "--test-fraction", "1.5", "--out", p(&out)],
            1,
        ),
        (&["train", "--data", p(&data), "--heads", "3", "--out", p(&out)], 1),
        (&["train", "--data", p(&data), "--out", p(&data)], 1),
        (&["train", "--data", p(&missing), "--out", p(&out)], 2),
        (&["report", "--run", p(tmp.path())], 2),
    ];
    for (args, expected) in cases {
        assert_eq!(code(&glovenet(args)), expected, "{args:?}");
    }

    fs::write(data.join("data.f32"), [0u8; 12]).unwrap();
    let truncated = glovenet(&["inspect", "--data", p(&data)]);
    assert_eq!(code(&truncated), 2);
    assert!(!out.join("run_manifest.json").exists());
}

#[test]
fn seed_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&[
        "generate",
        "--vocab",
        "single",
        "--n",
        "90",
        "--len",
        "8",
        "--seed",
        "9",
        "--out",
        p(&a),
    ]);
    let out = Command::new(env!("CARGO_BIN_EXE_glovenet"))
        .args([
            "generate",
            "--vocab",
            "single",
            "--n",
            "90",
            "--len",
            "8",
            "--out",
            p(&b),
        ])
        .env("GLOVENET_SEED", "9")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(sha256_hex(&a), sha256_hex(&b));
    assert_eq!(manifest(&b)["seeds"], serde_json::json!([9]));
    assert_eq!(manifest(&b)["flags"]["seed"], 9);
}

#[test]
fn crossval_ablate_and_attribute() {
    let tmp = tempfile::tempdir().unwrap();
    let data = small_dataset(tmp.path(), "multi");
    let cv = tmp.path().join("cv");
    ok(&["crossval", "--data", p(&data), "--model", "tree", "--out", p(&cv)]);
    // 200 samples in sessions of 20
    assert_eq!(fs::read_to_string(cv.join("folds.csv")).unwrap().lines().count(), 11);

    let ab = tmp.path().join("ab");
    ok(&[
        "--jobs",
        "2",
        "ablate",
        "--data",
        p(&data),
        "--model",
        "tree",
        "--k",
        "1,5",
        "--fractions",
        "0.5,1.0",
        "--seeds",
        "2",
        "--out",
        p(&ab),
    ]);
    assert_eq!(
        fs::read_to_string(ab.join("ablation_rows.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + (5 + 1) * 2 * 2
    );
    assert!(fs::read_to_string(ab.join("ablation.svg")).unwrap().starts_with("<svg"));
    assert_eq!(manifest(&ab)["seeds"], serde_json::json!([0, 1]));

    let at = tmp.path().join("at");
    let text = ok(&["attribute", "--data", p(&data), "--model", "tree", "--out", p(&at)]);
    for finger in ["thumb", "index", "middle", "ring", "pinky"] {
        assert!(text.contains(finger));
    }
}
