//! Monte-Carlo study harnesses: the outlier-rejection study over a
//! synthetic rig, the fusion runtime benchmark, and the trajectory
//! prediction study. All runs are seeded; per-trial RNG streams are
//! derived from (seed, cell, trial) so results are reproducible
//! bit-for-bit regardless of execution order.

use std::time::Instant;

use balltrack_core::ballistics::{
    fit_initial_state, integrate, prediction_error, BallState, FlightModel, TimedObservation,
};
use balltrack_core::fusion::{fuse, FusionConfig, FusionResult};
use balltrack_core::geometry::{
    synthetic_rig, Aabb, CameraModel, Pixel, PixelObservation, Point3, Vec3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// SplitMix64 finalizer over the packed stream coordinates; decorrelates
/// the per-trial seeds.
pub fn derive_seed(seed: u64, cell: u64, trial: u64) -> u64 {
    let mut z = seed
        .wrapping_add(cell.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(trial.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One standard-normal draw by Box-Muller.
pub fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

#[derive(Debug, Clone)]
pub struct OutlierStudyConfig {
    pub cameras: Vec<usize>,
    pub outlier_probs: Vec<f64>,
    pub pixel_noise_sigma: f64,
    pub trials: usize,
    pub epsilon: f64,
    pub workspace: Aabb,
    pub image_size: (u32, u32),
    pub seed: u64,
}

impl Default for OutlierStudyConfig {
    fn default() -> Self {
        OutlierStudyConfig {
            cameras: vec![4, 8, 15, 30],
            outlier_probs: vec![0.01, 0.05, 0.10, 0.25, 0.50],
            pixel_noise_sigma: 1.3,
            trials: 10_000,
            epsilon: 5.0,
            workspace: Aabb::new(Point3::new(-2.0, -1.5, 0.0), Point3::new(2.0, 1.5, 2.0)),
            image_size: (640, 480),
            seed: 0,
        }
    }
}

/// One (camera count, outlier probability) cell of the study grid.
#[derive(Debug, Clone, Serialize)]
pub struct StudyCell {
    pub c: usize,
    pub p_o: f64,
    /// Mean 3D error in cm over non-failed trials.
    pub mean_error_cm: f64,
    /// Standard error of that mean.
    pub stderr_cm: f64,
    pub failure_rate: f64,
}

/// Projects a point to every camera, adds isotropic Gaussian pixel
/// noise, and with probability `p_o` replaces the pixel by a uniform
/// sample over the image plane.
pub fn simulate_observations<R: Rng + ?Sized>(
    x: &Point3,
    rig: &[CameraModel],
    sigma: f64,
    p_o: f64,
    frame: u64,
    rng: &mut R,
) -> Vec<PixelObservation> {
    rig.iter()
        .map(|cam| {
            let true_px = cam.project(x).expect("rig sees the workspace");
            let pixel = if p_o > 0.0 && rng.gen_bool(p_o) {
                Pixel::new(
                    rng.gen_range(0.0..cam.width as f64),
                    rng.gen_range(0.0..cam.height as f64),
                )
            } else if sigma > 0.0 {
                Pixel::new(
                    true_px.u + sigma * gauss(rng),
                    true_px.v + sigma * gauss(rng),
                )
            } else {
                true_px
            };
            PixelObservation {
                camera_id: cam.id,
                pixel,
                frame,
            }
        })
        .collect()
}

/// Runs the full outlier study grid; rows iterate camera counts, columns
/// outlier probabilities.
pub fn run_outlier_study(cfg: &OutlierStudyConfig) -> Vec<StudyCell> {
    let fusion_cfg = FusionConfig {
        epsilon: cfg.epsilon,
        ..FusionConfig::default()
    };
    let mut cells = Vec::new();
    for (ci, &c) in cfg.cameras.iter().enumerate() {
        let rig = synthetic_rig(c, &cfg.workspace, cfg.image_size).expect("c >= 2");
        for (pi, &p_o) in cfg.outlier_probs.iter().enumerate() {
            let cell_idx = (ci * cfg.outlier_probs.len() + pi) as u64;
            let mut errors_cm: Vec<f64> = Vec::new();
            let mut failures = 0usize;
            for trial in 0..cfg.trials {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, cell_idx, trial as u64));
                let x = cfg.workspace.sample(&mut rng);
                let obs =
                    simulate_observations(&x, &rig, cfg.pixel_noise_sigma, p_o, 0, &mut rng);
                let paired: Vec<_> = obs
                    .iter()
                    .map(|o| (*o, &rig[o.camera_id as usize]))
                    .collect();
                match fuse(&paired, &fusion_cfg) {
                    FusionResult::Success { position, .. } => {
                        errors_cm.push((position - x).norm() * 100.0);
                    }
                    FusionResult::Failure { .. } => failures += 1,
                }
            }
            let n = errors_cm.len();
            let mean = if n > 0 {
                errors_cm.iter().sum::<f64>() / n as f64
            } else {
                f64::NAN
            };
            let stderr = if n > 1 {
                let var = errors_cm.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
                    / (n as f64 - 1.0);
                (var / n as f64).sqrt()
            } else {
                f64::NAN
            };
            cells.push(StudyCell {
                c,
                p_o,
                mean_error_cm: mean,
                stderr_cm: stderr,
                failure_rate: failures as f64 / cfg.trials as f64,
            });
        }
    }
    cells
}

#[derive(Debug, Clone, Serialize)]
pub struct RuntimeRow {
    pub c: usize,
    pub mean_ms: f64,
    pub p99_ms: f64,
}

/// Times the sequential fuse path on all-camera observation sets with no
/// outliers; `reps` timed calls per camera count after warm-up.
pub fn run_runtime_benchmark(cameras: &[usize], reps: usize, seed: u64) -> Vec<RuntimeRow> {
    let ws = OutlierStudyConfig::default().workspace;
    let fusion_cfg = FusionConfig::default();
    let mut rows = Vec::new();
    for (ci, &c) in cameras.iter().enumerate() {
        let rig = synthetic_rig(c, &ws, (640, 480)).expect("c >= 2");
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, ci as u64, 0));
        let instances: Vec<Vec<PixelObservation>> = (0..reps.max(1))
            .map(|_| {
                let x = ws.sample(&mut rng);
                simulate_observations(&x, &rig, 1.3, 0.0, 0, &mut rng)
            })
            .collect();
        let paired: Vec<Vec<_>> = instances
            .iter()
            .map(|obs| {
                obs.iter()
                    .map(|o| (*o, &rig[o.camera_id as usize]))
                    .collect()
            })
            .collect();
        // Warm-up pass.
        for p in paired.iter().take(10) {
            std::hint::black_box(fuse(p, &fusion_cfg));
        }
        let mut samples_ms: Vec<f64> = paired
            .iter()
            .map(|p| {
                let t0 = Instant::now();
                std::hint::black_box(fuse(p, &fusion_cfg));
                t0.elapsed().as_secs_f64() * 1e3
            })
            .collect();
        samples_ms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean = samples_ms.iter().sum::<f64>() / samples_ms.len() as f64;
        let p99 = samples_ms[((samples_ms.len() as f64 * 0.99) as usize).min(samples_ms.len() - 1)];
        rows.push(RuntimeRow {
            c,
            mean_ms: mean,
            p99_ms: p99,
        });
    }
    rows
}

/// Least-squares slope of ln(mean time) against ln(camera count).
pub fn loglog_slope(rows: &[RuntimeRow]) -> f64 {
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| (r.c as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_ms.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajCell {
    pub order: usize,
    pub n_obs: usize,
    pub mean_error_cm: f64,
}

#[derive(Debug, Clone)]
pub struct TrajectoryStudyConfig {
    pub orders: Vec<usize>,
    pub obs_counts: Vec<usize>,
    pub trials: usize,
    /// Isotropic 3D observation noise in meters.
    pub noise_sigma_m: f64,
    pub seed: u64,
    pub model: FlightModel,
}

impl Default for TrajectoryStudyConfig {
    fn default() -> Self {
        TrajectoryStudyConfig {
            orders: vec![2, 3, 4],
            obs_counts: vec![12, 25, 50, 75],
            trials: 200,
            noise_sigma_m: 0.01,
            seed: 0,
            model: FlightModel::default(),
        }
    }
}

const TRAJ_DT: f64 = 0.005; // 200 Hz
const TRAJ_OBS_END: f64 = 1.2;
const TRAJ_TOTAL: f64 = 2.0;

/// Random serve-like launch state: 4-8 m/s with an upward component.
fn random_launch<R: Rng + ?Sized>(rng: &mut R) -> BallState {
    BallState {
        t: 0.0,
        position: Point3::new(
            rng.gen_range(-1.5..-1.0),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(0.8..1.2),
        ),
        velocity: Vec3::new(
            rng.gen_range(3.0..6.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(1.5..3.5),
        ),
    }
}

/// Per cell: simulate trajectories with the flight ODE, observe the last
/// `n_obs` samples before the 1.2 s mark at 200 Hz under Gaussian 3D
/// noise, fit the initial state, integrate the remaining 0.8 s, and
/// average the prediction error.
pub fn run_trajectory_study(cfg: &TrajectoryStudyConfig) -> Vec<TrajCell> {
    let mut cells = Vec::new();
    let obs_end_idx = (TRAJ_OBS_END / TRAJ_DT).round() as usize;
    for (oi, &order) in cfg.orders.iter().enumerate() {
        for (ni, &n_obs) in cfg.obs_counts.iter().enumerate() {
            let cell_idx = (oi * cfg.obs_counts.len() + ni) as u64;
            let mut total = 0.0;
            for trial in 0..cfg.trials {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, cell_idx, trial as u64));
                let s0 = random_launch(&mut rng);
                let truth =
                    integrate(&s0, &cfg.model, TRAJ_DT, TRAJ_TOTAL).expect("finite flight");
                let window = &truth[obs_end_idx + 1 - n_obs..=obs_end_idx];
                let obs: Vec<TimedObservation> = window
                    .iter()
                    .map(|s| TimedObservation {
                        t: s.t,
                        position: Point3::new(
                            s.position.x + cfg.noise_sigma_m * gauss(&mut rng),
                            s.position.y + cfg.noise_sigma_m * gauss(&mut rng),
                            s.position.z + cfg.noise_sigma_m * gauss(&mut rng),
                        ),
                    })
                    .collect();
                let fitted = fit_initial_state(&obs, order).expect("well-posed fit");
                // Integrate from the fitted state on the truth grid.
                let start = BallState {
                    t: truth[obs_end_idx].t,
                    ..fitted
                };
                let horizon = TRAJ_TOTAL - start.t;
                let pred = integrate(&start, &cfg.model, TRAJ_DT, horizon).expect("finite");
                total +=
                    prediction_error(&pred, &truth[obs_end_idx..]).expect("matching grids");
            }
            cells.push(TrajCell {
                order,
                n_obs,
                mean_error_cm: total / cfg.trials as f64,
            });
        }
    }
    cells
}
