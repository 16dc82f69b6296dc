//! Synthetic data generation: a labeled disk corpus for detector
//! training, and a rendered multi-camera ball sequence for end-to-end
//! pipeline tests. Everything is seeded and deterministic.

use std::path::{Path, PathBuf};

use balltrack_core::detect::{Bbox, ColorImage};
use balltrack_core::geometry::{Aabb, CameraId, CameraModel, Point3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::labels::LabelRecord;
use crate::pnm;

pub const BALL_COLOR: [f64; 3] = [1.0, 0.55, 0.05];
pub const BACKGROUND: [f64; 3] = [0.5, 0.5, 0.5];

/// Paints an anti-aliased disk; the edge ramps linearly over one pixel
/// of signed distance.
pub fn render_disk(img: &mut ColorImage, cx: f64, cy: f64, radius: f64, color: [f64; 3]) {
    let r0 = (cy - radius - 1.0).floor().max(0.0) as usize;
    let r1 = ((cy + radius + 1.0).ceil() as isize).clamp(0, img.height as isize - 1) as usize;
    let c0 = (cx - radius - 1.0).floor().max(0.0) as usize;
    let c1 = ((cx + radius + 1.0).ceil() as isize).clamp(0, img.width as isize - 1) as usize;
    if (cy + radius) < 0.0 || (cx + radius) < 0.0 {
        return;
    }
    for row in r0..=r1 {
        for col in c0..=c1 {
            let d = ((col as f64 - cx).powi(2) + (row as f64 - cy).powi(2)).sqrt();
            let coverage = (radius - d + 0.5).clamp(0.0, 1.0);
            if coverage > 0.0 {
                let bg = img.get(row, col);
                let mut px = [0.0; 3];
                for ch in 0..3 {
                    px[ch] = bg[ch] + coverage * (color[ch] - bg[ch]);
                }
                img.set(row, col, px);
            }
        }
    }
}

/// Ground truth for a rendered disk: its label bbox and exact center
/// (cx, cy).
pub type DiskTruth = (Bbox, (f64, f64));

/// One corpus image: an orange disk on a lightly noisy gray background,
/// or background only.
pub fn corpus_image(
    width: usize,
    height: usize,
    rng: &mut ChaCha8Rng,
    force_empty: bool,
) -> (ColorImage, Option<DiskTruth>) {
    let mut img = ColorImage::filled(width, height, BACKGROUND);
    for row in 0..height {
        for col in 0..width {
            let n: f64 = rng.gen_range(-0.04..0.04);
            let g = (BACKGROUND[0] + n).clamp(0.0, 1.0);
            img.set(row, col, [g, g, g]);
        }
    }
    if force_empty {
        return (img, None);
    }
    let radius = rng.gen_range(3.0..7.0);
    let cx = rng.gen_range(radius..(width as f64 - radius));
    let cy = rng.gen_range(radius..(height as f64 - radius));
    render_disk(&mut img, cx, cy, radius, BALL_COLOR);
    let bbox = Bbox {
        min_row: (cy - radius).floor().max(0.0) as usize,
        min_col: (cx - radius).floor().max(0.0) as usize,
        max_row: ((cy + radius).ceil() as usize).min(height - 1),
        max_col: ((cx + radius).ceil() as usize).min(width - 1),
    };
    (img, Some((bbox, (cx, cy))))
}

/// Ground truth for one corpus image.
#[derive(Debug, Clone, Copy)]
pub struct CorpusTruth {
    pub center: Option<(f64, f64)>,
}

/// Writes `n` corpus images (every fourth one empty) as PPM files plus a
/// label file; returns the per-image ground-truth centers.
pub fn write_corpus(
    dir: &Path,
    labels_path: &Path,
    n: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> anyhow::Result<Vec<CorpusTruth>> {
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut truths = Vec::new();
    for k in 0..n {
        let force_empty = k % 4 == 3;
        let (img, disk) = corpus_image(width, height, &mut rng, force_empty);
        let path = dir.join(format!("img{k:04}.ppm"));
        pnm::write_ppm(&path, &img)?;
        records.push(LabelRecord {
            path,
            bbox: disk
                .as_ref()
                .map(|(b, _)| [b.min_row, b.min_col, b.max_row, b.max_col]),
        });
        truths.push(CorpusTruth {
            center: disk.map(|(_, c)| c),
        });
    }
    crate::labels::save(labels_path, &records)?;
    Ok(truths)
}

/// One line of a detection manifest: which image belongs to which
/// (camera, frame).
#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub camera_id: CameraId,
    pub frame: u64,
    pub path: PathBuf,
}

/// Rendered multi-camera sequence: manifest, per-frame ground truth, and
/// which frames were corrupted for the corrupt camera.
#[derive(Debug)]
pub struct Sequence {
    pub manifest_path: PathBuf,
    pub truth: Vec<Point3>,
    pub corrupted_frames: Vec<u64>,
}

/// Smooth deterministic ball path filling the workspace box.
pub fn ball_path(ws: &Aabb, frames: usize) -> Vec<Point3> {
    let c = ws.center();
    let half = (ws.max - ws.min) * 0.5 * 0.8;
    (0..frames)
        .map(|k| {
            let t = k as f64 * 0.037;
            Point3::new(
                c.x + half.x * (1.3 * t).sin(),
                c.y + half.y * (0.9 * t + 1.0).cos(),
                c.z + half.z * (0.6 * t + 2.0).sin(),
            )
        })
        .collect()
}

/// Projected pixel radius of a ball of physical radius `r` at `x`: the
/// displacement of a world point offset perpendicular to the view ray.
fn projected_radius(cam: &CameraModel, x: &Point3, r: f64) -> Option<f64> {
    let view = (x - cam.center()).normalize();
    let mut up = Vec3::z();
    if view.dot(&up).abs() > 0.99 {
        up = Vec3::y();
    }
    let perp = view.cross(&up).normalize();
    let p0 = cam.project(x).ok()?;
    let p1 = cam.project(&(x + perp * r)).ok()?;
    Some(p0.distance(&p1))
}

/// Renders the sequence: one PPM per (camera, frame). On corrupted
/// frames of the designated camera the ball is drawn at a decoy pixel at
/// least 40 px from its true projection instead of where it really is.
#[allow(clippy::too_many_arguments)]
pub fn render_sequence(
    dir: &Path,
    rig: &[CameraModel],
    truth: &[Point3],
    ball_radius_m: f64,
    corrupt_camera: Option<CameraId>,
    corrupt_prob: f64,
    seed: u64,
) -> anyhow::Result<Sequence> {
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut manifest = Vec::new();
    let mut corrupted_frames = Vec::new();
    for cam in rig {
        std::fs::create_dir_all(dir.join(format!("cam{}", cam.id)))?;
    }
    for (frame, x) in truth.iter().enumerate() {
        let corrupt_this = corrupt_camera.is_some() && rng.gen_bool(corrupt_prob);
        if corrupt_this {
            corrupted_frames.push(frame as u64);
        }
        for cam in rig {
            let (w, h) = (cam.width as usize, cam.height as usize);
            let mut img = ColorImage::filled(w, h, BACKGROUND);
            let px = cam.project(x)?;
            let radius = projected_radius(cam, x, ball_radius_m)
                .ok_or_else(|| anyhow::anyhow!("ball not visible from camera {}", cam.id))?;
            if corrupt_this && Some(cam.id) == corrupt_camera {
                // Decoy position well away from the truth.
                let (du, dv) = loop {
                    let du = rng.gen_range(radius..w as f64 - radius);
                    let dv = rng.gen_range(radius..h as f64 - radius);
                    if (du - px.u).hypot(dv - px.v) >= 40.0 {
                        break (du, dv);
                    }
                };
                render_disk(&mut img, du, dv, radius, BALL_COLOR);
            } else {
                render_disk(&mut img, px.u, px.v, radius, BALL_COLOR);
            }
            let path = dir.join(format!("cam{}/frame{frame:05}.ppm", cam.id));
            pnm::write_ppm(&path, &img)?;
            manifest.push(ManifestEntry {
                camera_id: cam.id,
                frame: frame as u64,
                path,
            });
        }
    }
    let manifest_path = dir.join("manifest.jsonl");
    let mut out = String::new();
    for e in &manifest {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    std::fs::write(&manifest_path, out)?;
    Ok(Sequence {
        manifest_path,
        truth: truth.to_vec(),
        corrupted_frames,
    })
}
