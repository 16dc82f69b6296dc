//! End-to-end tests of the `balltrack` binary: exit codes, stream
//! formats, determinism, and the train → detect → track pipeline.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use balltrack::streams::{DetectionRecord, TrackRecord};
use balltrack::synth;
use balltrack_core::geometry::{synthetic_rig, Aabb, Point3};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_balltrack"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn small_workspace() -> Aabb {
    Aabb::new(Point3::new(-0.2, -0.2, 0.8), Point3::new(0.2, 0.2, 1.2))
}

/// Trains a model on a small synthetic corpus; returns the model path.
fn train_model(dir: &Path, images: usize, seed: u64) -> PathBuf {
    let corpus_dir = dir.join("corpus");
    let labels = dir.join("labels.jsonl");
    synth::write_corpus(&corpus_dir, &labels, images, 48, 48, seed).unwrap();
    let model = dir.join("model.json");
    run_ok(
        bin()
            .arg("train")
            .arg("--labels")
            .arg(&labels)
            .arg("--out")
            .arg(&model)
            .args(["--epochs", "25", "--learning-rate", "1.0", "--seed", "1"]),
    );
    model
}

#[test]
fn train_writes_a_valid_model_and_prints_loss() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path(), 40, 3);
    let unit = balltrack::model_file::load(&model).unwrap();
    assert!(unit.is_finite());
}

#[test]
fn train_missing_labels_exits_2() {
    let out = bin()
        .args(["train", "--labels", "/nonexistent.jsonl", "--out", "/tmp/x.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent.jsonl"));
}

#[test]
fn train_empty_labels_exits_2_naming_file() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("empty.jsonl");
    std::fs::write(&labels, "").unwrap();
    let out = bin()
        .arg("train")
        .arg("--labels")
        .arg(&labels)
        .arg("--out")
        .arg(dir.path().join("m.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty.jsonl"));
}

#[test]
fn train_divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("corpus");
    let labels = dir.path().join("labels.jsonl");
    synth::write_corpus(&corpus_dir, &labels, 12, 48, 48, 3).unwrap();
    let out = bin()
        .arg("train")
        .arg("--labels")
        .arg(&labels)
        .arg("--out")
        .arg(dir.path().join("m.json"))
        .args(["--learning-rate", "1e308", "--epochs", "20", "--batch-size", "8"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

struct Pipeline {
    _dir: tempfile::TempDir,
    truth: Vec<Point3>,
    corrupted_frames: Vec<u64>,
    detections: Vec<u8>,
    tracks: Vec<TrackRecord>,
    track_bytes: Vec<u8>,
}

fn run_pipeline(frames: usize, corrupt_prob: f64) -> Pipeline {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path(), 60, 3);
    let ws = small_workspace();
    let rig = synthetic_rig(4, &ws, (160, 120)).unwrap();
    let calib = dir.path().join("calib.json");
    balltrack::calib::save(&calib, &rig).unwrap();
    let truth = synth::ball_path(&ws, frames);
    let seq = synth::render_sequence(
        &dir.path().join("seq"),
        &rig,
        &truth,
        0.02,
        Some(0),
        corrupt_prob,
        17,
    )
    .unwrap();

    let det_path = dir.path().join("detections.jsonl");
    run_ok(
        bin()
            .arg("detect")
            .arg("--model")
            .arg(&model)
            .arg("--calib")
            .arg(&calib)
            .arg("--manifest")
            .arg(&seq.manifest_path)
            .arg("--out")
            .arg(&det_path),
    );
    let detections = std::fs::read(&det_path).unwrap();

    let track_path = dir.path().join("tracks.jsonl");
    run_ok(
        bin()
            .arg("track")
            .arg("--calib")
            .arg(&calib)
            .arg("--detections")
            .arg(&det_path)
            .arg("--out")
            .arg(&track_path),
    );
    let track_bytes = std::fs::read(&track_path).unwrap();
    let tracks = String::from_utf8(track_bytes.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    Pipeline {
        _dir: dir,
        truth,
        corrupted_frames: seq.corrupted_frames,
        detections,
        tracks,
        track_bytes,
    }
}

#[test]
fn pipeline_recovers_positions_and_rejects_corrupt_camera() {
    let p = run_pipeline(40, 0.3);
    assert_eq!(p.tracks.len(), 40);
    let mut last_frame = None;
    for (k, tr) in p.tracks.iter().enumerate() {
        assert_eq!(tr.frame, k as u64);
        if let Some(f) = last_frame {
            assert!(tr.frame > f, "frames must be strictly increasing");
        }
        last_frame = Some(tr.frame);
        let pos = tr.point().expect("every frame should fuse");
        let err = (pos - p.truth[k]).norm();
        assert!(err < 5e-3, "frame {k}: error {err} m");
        let inliers = tr.inlier_ids.as_ref().unwrap();
        if p.corrupted_frames.contains(&tr.frame) {
            assert!(
                !inliers.contains(&0),
                "corrupt camera fused on frame {k}: {inliers:?}"
            );
        } else {
            assert_eq!(inliers.len(), 4, "frame {k}: {inliers:?}");
        }
    }
}

#[test]
fn pipeline_is_byte_identical_across_reruns() {
    let a = run_pipeline(10, 0.4);
    let b = run_pipeline(10, 0.4);
    assert_eq!(a.detections, b.detections);
    assert_eq!(a.track_bytes, b.track_bytes);
}

#[test]
fn detect_missing_image_emits_error_record_and_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path(), 20, 3);
    let ws = small_workspace();
    let rig = synthetic_rig(2, &ws, (160, 120)).unwrap();
    let calib = dir.path().join("calib.json");
    balltrack::calib::save(&calib, &rig).unwrap();
    let manifest = dir.path().join("manifest.jsonl");
    std::fs::write(
        &manifest,
        "{\"camera_id\":0,\"frame\":0,\"path\":\"/missing.ppm\"}\n",
    )
    .unwrap();
    let out = run_ok(
        bin()
            .arg("detect")
            .arg("--model")
            .arg(&model)
            .arg("--calib")
            .arg(&calib)
            .arg("--manifest")
            .arg(&manifest),
    );
    let rec: DetectionRecord =
        serde_json::from_str(String::from_utf8(out.stdout).unwrap().lines().next().unwrap())
            .unwrap();
    assert!(rec.error.is_some());
}

#[test]
fn detect_unknown_camera_id_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path(), 20, 3);
    let ws = small_workspace();
    let rig = synthetic_rig(2, &ws, (160, 120)).unwrap();
    let calib = dir.path().join("calib.json");
    balltrack::calib::save(&calib, &rig).unwrap();
    let manifest = dir.path().join("manifest.jsonl");
    std::fs::write(
        &manifest,
        "{\"camera_id\":99,\"frame\":0,\"path\":\"/x.ppm\"}\n",
    )
    .unwrap();
    let out = bin()
        .arg("detect")
        .arg("--model")
        .arg(&model)
        .arg("--calib")
        .arg(&calib)
        .arg("--manifest")
        .arg(&manifest)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("99"));
}

#[test]
fn track_single_detection_frame_reports_too_few() {
    let dir = tempfile::tempdir().unwrap();
    let ws = small_workspace();
    let rig = synthetic_rig(3, &ws, (160, 120)).unwrap();
    let calib = dir.path().join("calib.json");
    balltrack::calib::save(&calib, &rig).unwrap();
    let det = dir.path().join("det.jsonl");
    // Frame 0: one real detection, two misses; frame 1 complete misses.
    std::fs::write(
        &det,
        concat!(
            "{\"camera_id\":0,\"frame\":0,\"u\":80.0,\"v\":60.0}\n",
            "{\"camera_id\":1,\"frame\":0,\"none\":true}\n",
            "{\"camera_id\":2,\"frame\":0,\"none\":true}\n",
            "not json at all\n",
            "{\"camera_id\":0,\"frame\":1,\"none\":true}\n",
            "{\"camera_id\":1,\"frame\":1,\"none\":true}\n",
            "{\"camera_id\":2,\"frame\":1,\"none\":true}\n",
        ),
    )
    .unwrap();
    let out = run_ok(
        bin()
            .arg("track")
            .arg("--calib")
            .arg(&calib)
            .arg("--detections")
            .arg(&det),
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let records: Vec<TrackRecord> = stdout
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 2);
    for r in &records {
        assert!(r.failure.as_deref().unwrap().contains("too-few-observations"));
        assert!(r.latency_ms.is_none(), "latency only with --timing");
    }
    let summary = String::from_utf8(out.stderr).unwrap();
    assert!(
        summary.contains("records_in=7")
            && summary.contains("records_used=6")
            && summary.contains("records_skipped=1")
            && summary.contains("records_late=0"),
        "{summary}"
    );
}

#[test]
fn simulate_same_seed_is_byte_identical() {
    let args = [
        "simulate",
        "--cameras",
        "4,8",
        "--outliers",
        "0.0,0.1",
        "--trials",
        "100",
        "--seed",
        "7",
    ];
    let a = run_ok(bin().args(args));
    let b = run_ok(bin().args(args));
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn simulate_json_has_expected_grid_shape() {
    let out = run_ok(bin().args([
        "simulate",
        "--cameras",
        "4,8",
        "--outliers",
        "0.01,0.1,0.5",
        "--trials",
        "50",
        "--json",
    ]));
    let cells: Vec<serde_json::Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cells.len(), 6);
    assert_eq!(cells[0]["c"], 4);
    assert_eq!(cells[5]["p_o"], 0.5);
}

#[test]
fn simulate_rejects_bad_flags() {
    let out = bin()
        .args(["simulate", "--cameras", "1", "--trials", "10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["simulate", "--outliers", "1.5", "--trials", "10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_emits_one_row_per_camera_count() {
    let out = run_ok(bin().args(["bench", "--cameras", "4,8", "--reps", "100", "--json"]));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
    assert!(doc["loglog_slope"].as_f64().is_some());
}

#[test]
fn traj_json_grid_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("traj.json");
    run_ok(bin().args([
        "traj",
        "--orders",
        "2,4",
        "--obs",
        "12,50",
        "--trials",
        "20",
        "--json",
        "--out",
        out_path.to_str().unwrap(),
    ]));
    let cells: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(cells.len(), 4);
}
