//! Robust 3D estimation from unreliable per-camera detections.
//!
//! Every unordered pair of observations triangulates a candidate point
//! (linear stage only); the candidate is scored by counting observations
//! whose reprojection error is below the pixel tolerance. The generating
//! pair gets no free pass: it must also clear the tolerance, which is what
//! makes an outright failure reachable. The best-scoring consistent set is
//! refit with refinement to produce the reported position.

use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{
    reprojection_errors, triangulate, CameraId, CameraModel, Pixel, PixelObservation, Point3,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    /// Pixel error tolerance for consistency.
    pub epsilon: f64,
    /// Minimum consistent-set size to report a position.
    pub min_inliers: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            epsilon: 5.0,
            min_inliers: 2,
        }
    }
}

/// Work counters for the pair loop; the candidate count is exactly
/// c(c-1)/2 and each candidate is scored against all c observations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FusionStats {
    pub candidates: u64,
    pub residual_evals: u64,
}

/// Winner of the pair-candidate search.
#[derive(Debug, Clone)]
pub struct Consensus {
    /// Inlier camera ids, ascending.
    pub inlier_ids: Vec<CameraId>,
    /// Candidate point from the winning generator pair.
    pub candidate: Point3,
    /// Per-inlier reprojection error against `candidate`, aligned with
    /// `inlier_ids`.
    pub residuals: Vec<f64>,
    /// Camera ids of the generating pair.
    pub generator: (CameraId, CameraId),
    pub stats: FusionStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionError {
    TooFewObservations { got: usize },
    DuplicateCamera { id: CameraId },
    /// No pair produced a triangulation candidate at all.
    NoCandidate,
}

impl fmt::Display for FusionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FusionError::TooFewObservations { got } => {
                write!(f, "fusion needs at least 2 observations, got {got}")
            }
            FusionError::DuplicateCamera { id } => {
                write!(f, "more than one observation for camera {id}")
            }
            FusionError::NoCandidate => write!(f, "no pair produced a candidate"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FusionError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    TooFewObservations { got: usize },
    /// No pair candidate reached the minimum consistent-set size.
    NoConsistentSet { best_size: usize },
    DuplicateCamera { id: CameraId },
    DegenerateGeometry,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::TooFewObservations { got } => {
                write!(f, "too-few-observations ({got})")
            }
            FailureReason::NoConsistentSet { best_size } => {
                write!(f, "no-consistent-set (best size {best_size})")
            }
            FailureReason::DuplicateCamera { id } => write!(f, "duplicate-camera ({id})"),
            FailureReason::DegenerateGeometry => write!(f, "degenerate-geometry"),
        }
    }
}

/// Fused 3D position with its inlier set and residuals, or an explicit
/// failure.
#[derive(Debug, Clone)]
pub enum FusionResult {
    Success {
        position: Point3,
        /// Camera ids of the inliers, ascending.
        inlier_ids: Vec<CameraId>,
        /// Per-inlier pixel error against `position`, aligned with
        /// `inlier_ids`.
        residuals: Vec<f64>,
    },
    Failure {
        reason: FailureReason,
    },
}

impl FusionResult {
    pub fn is_success(&self) -> bool {
        matches!(self, FusionResult::Success { .. })
    }
}

/// One per-camera observation paired with its camera.
pub type Observation<'a> = (PixelObservation, &'a CameraModel);

fn sorted_by_camera<'a>(s: &[Observation<'a>]) -> Vec<Observation<'a>> {
    let mut ordered: Vec<Observation<'a>> = s.to_vec();
    ordered.sort_by_key(|(o, _)| o.camera_id);
    ordered
}

fn check_input<'a>(s: &[Observation<'a>]) -> Result<Vec<Observation<'a>>, FusionError> {
    if s.len() < 2 {
        return Err(FusionError::TooFewObservations { got: s.len() });
    }
    let ordered = sorted_by_camera(s);
    for w in ordered.windows(2) {
        if w[0].0.camera_id == w[1].0.camera_id {
            return Err(FusionError::DuplicateCamera {
                id: w[0].0.camera_id,
            });
        }
    }
    Ok(ordered)
}

/// Finds the largest subset of observations consistent with a single 3D
/// point, by exhaustive pair-candidate search.
///
/// Ties on set size break by smallest mean reprojection error over the
/// set, then by lowest generator pair in lexicographic camera-id order.
/// The result does not depend on the input observation order.
pub fn largest_consistent_subset(
    s: &[Observation<'_>],
    cfg: &FusionConfig,
) -> Result<Consensus, FusionError> {
    let ordered = check_input(s)?;
    let n = ordered.len();
    let mut stats = FusionStats::default();
    let mut best: Option<(usize, f64, Consensus)> = None;

    for i in 0..n {
        for j in (i + 1)..n {
            stats.candidates += 1;
            let pair = [
                (ordered[i].0.pixel, ordered[i].1),
                (ordered[j].0.pixel, ordered[j].1),
            ];
            let candidate = match triangulate(&pair, false) {
                Ok(x) => x,
                Err(_) => continue,
            };
            let all: Vec<(Pixel, &CameraModel)> =
                ordered.iter().map(|(o, cam)| (o.pixel, *cam)).collect();
            let errs = reprojection_errors(&candidate, &all);
            stats.residual_evals += n as u64;

            let mut inlier_ids = Vec::new();
            let mut residuals = Vec::new();
            for (k, e) in errs.iter().enumerate() {
                if *e < cfg.epsilon {
                    inlier_ids.push(ordered[k].0.camera_id);
                    residuals.push(*e);
                }
            }
            let count = inlier_ids.len();
            let mean = if count > 0 {
                residuals.iter().sum::<f64>() / count as f64
            } else {
                f64::INFINITY
            };
            let better = match &best {
                None => true,
                Some((c0, m0, _)) => count > *c0 || (count == *c0 && mean < *m0),
            };
            if better {
                best = Some((
                    count,
                    mean,
                    Consensus {
                        inlier_ids,
                        candidate,
                        residuals,
                        generator: (ordered[i].0.camera_id, ordered[j].0.camera_id),
                        stats: FusionStats::default(),
                    },
                ));
            }
        }
    }

    match best {
        Some((_, _, mut consensus)) => {
            consensus.stats = stats;
            Ok(consensus)
        }
        None => Err(FusionError::NoCandidate),
    }
}

/// Full fusion: largest consistent subset, then a refined re-triangulation
/// over all inliers. The inlier set is scored against the pair candidate
/// and never re-shrunk after refinement; residuals are reported as-is
/// against the refined position.
pub fn fuse(s: &[Observation<'_>], cfg: &FusionConfig) -> FusionResult {
    let consensus = match largest_consistent_subset(s, cfg) {
        Ok(c) => c,
        Err(FusionError::TooFewObservations { got }) => {
            return FusionResult::Failure {
                reason: FailureReason::TooFewObservations { got },
            }
        }
        Err(FusionError::DuplicateCamera { id }) => {
            return FusionResult::Failure {
                reason: FailureReason::DuplicateCamera { id },
            }
        }
        Err(FusionError::NoCandidate) => {
            return FusionResult::Failure {
                reason: FailureReason::NoConsistentSet { best_size: 0 },
            }
        }
    };
    if consensus.inlier_ids.len() < cfg.min_inliers {
        return FusionResult::Failure {
            reason: FailureReason::NoConsistentSet {
                best_size: consensus.inlier_ids.len(),
            },
        };
    }

    let inliers: Vec<(Pixel, &CameraModel)> = s
        .iter()
        .filter(|(o, _)| consensus.inlier_ids.contains(&o.camera_id))
        .map(|(o, cam)| (o.pixel, *cam))
        .collect();
    // Order inlier observations by camera id so residuals align with ids.
    let mut inliers = inliers;
    inliers.sort_by_key(|a| a.1.id);

    let position = match triangulate(&inliers, true) {
        Ok(x) => x,
        // The pair candidate is already a valid estimate of the set.
        Err(_) => consensus.candidate,
    };
    let residuals = reprojection_errors(&position, &inliers);
    FusionResult::Success {
        position,
        inlier_ids: consensus.inlier_ids,
        residuals,
    }
}

/// Diagnostic baseline: triangulate with every observation, no consistency
/// check. Quantifies what the consistent-subset search buys in the presence
/// of outliers.
pub fn fuse_all_kway(s: &[Observation<'_>]) -> FusionResult {
    let ordered = match check_input(s) {
        Ok(o) => o,
        Err(FusionError::TooFewObservations { got }) => {
            return FusionResult::Failure {
                reason: FailureReason::TooFewObservations { got },
            }
        }
        Err(FusionError::DuplicateCamera { id }) => {
            return FusionResult::Failure {
                reason: FailureReason::DuplicateCamera { id },
            }
        }
        Err(FusionError::NoCandidate) => unreachable!(),
    };
    let all: Vec<(Pixel, &CameraModel)> = ordered.iter().map(|(o, cam)| (o.pixel, *cam)).collect();
    match triangulate(&all, true) {
        Ok(position) => {
            let residuals = reprojection_errors(&position, &all);
            FusionResult::Success {
                position,
                inlier_ids: ordered.iter().map(|(o, _)| o.camera_id).collect(),
                residuals,
            }
        }
        Err(_) => FusionResult::Failure {
            reason: FailureReason::DegenerateGeometry,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{synthetic_rig, Aabb, CameraModel, Pixel, Point3};
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn workspace() -> Aabb {
        Aabb::new(Point3::new(-2.0, -1.5, 0.0), Point3::new(2.0, 1.5, 2.0))
    }

    fn observe_exact<'a>(
        x: &Point3,
        rig: &'a [CameraModel],
    ) -> Vec<(PixelObservation, &'a CameraModel)> {
        rig.iter()
            .map(|cam| {
                (
                    PixelObservation {
                        camera_id: cam.id,
                        pixel: cam.project(x).unwrap(),
                        frame: 0,
                    },
                    cam,
                )
            })
            .collect()
    }

    #[test]
    fn all_inlier_noiseless() {
        let ws = workspace();
        let rig = synthetic_rig(4, &ws, (640, 480)).unwrap();
        let x = Point3::new(0.4, -0.6, 1.1);
        let s = observe_exact(&x, &rig);
        let cfg = FusionConfig::default();
        let consensus = largest_consistent_subset(&s, &cfg).unwrap();
        assert_eq!(consensus.inlier_ids, vec![0, 1, 2, 3]);
        assert!((consensus.candidate - x).norm() < 1e-6);
        match fuse(&s, &cfg) {
            FusionResult::Success { position, inlier_ids, residuals } => {
                assert_eq!(inlier_ids, vec![0, 1, 2, 3]);
                assert!((position - x).norm() < 1e-6);
                assert!(residuals.iter().all(|r| *r < 1e-6));
            }
            other => panic!("expected success, got {other:?}"),
        }
    }

    #[test]
    fn gross_outlier_is_excluded() {
        let ws = workspace();
        let rig = synthetic_rig(4, &ws, (640, 480)).unwrap();
        let x = Point3::new(-0.3, 0.2, 0.9);
        let mut s = observe_exact(&x, &rig);
        s[2].0.pixel.u += 200.0;
        let cfg = FusionConfig::default();
        let consensus = largest_consistent_subset(&s, &cfg).unwrap();
        assert_eq!(consensus.inlier_ids, vec![0, 1, 3]);
        // Exhaustive check: no subset of size 4 is consistent.
        let oracle = brute_force(&s, cfg.epsilon);
        assert_eq!(oracle.0, consensus.inlier_ids);
    }

    #[test]
    fn two_noiseless_observations_succeed() {
        let ws = workspace();
        let rig = synthetic_rig(2, &ws, (640, 480)).unwrap();
        let x = Point3::new(0.0, 0.1, 1.3);
        let s = observe_exact(&x, &rig);
        match fuse(&s, &FusionConfig::default()) {
            FusionResult::Success { inlier_ids, .. } => assert_eq!(inlier_ids, vec![0, 1]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn skew_ray_pair_fails_its_own_test() {
        let ws = workspace();
        let rig = synthetic_rig(2, &ws, (640, 480)).unwrap();
        // Random pixels from skew rays: the pair candidate cannot reproject
        // through both with tiny epsilon.
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let cfg = FusionConfig {
            epsilon: 0.5,
            min_inliers: 2,
        };
        let mut failures = 0;
        let trials = 50;
        for _ in 0..trials {
            let s: Vec<(PixelObservation, &CameraModel)> = rig
                .iter()
                .map(|cam| {
                    (
                        PixelObservation {
                            camera_id: cam.id,
                            pixel: Pixel::new(
                                rng.gen_range(0.0..cam.width as f64),
                                rng.gen_range(0.0..cam.height as f64),
                            ),
                            frame: 0,
                        },
                        cam,
                    )
                })
                .collect();
            // Verify the construction really is a skew pair before counting.
            let consensus = largest_consistent_subset(&s, &cfg).unwrap();
            if consensus.inlier_ids.len() < 2 {
                assert!(!fuse(&s, &cfg).is_success());
                failures += 1;
            }
        }
        assert!(failures > trials / 2, "only {failures} skew pairs failed");
    }

    #[test]
    fn too_few_observations_is_failure() {
        let ws = workspace();
        let rig = synthetic_rig(2, &ws, (640, 480)).unwrap();
        let x = ws.center();
        let s = observe_exact(&x, &rig);
        match fuse(&s[..1], &FusionConfig::default()) {
            FusionResult::Failure { reason } => {
                assert_eq!(reason, FailureReason::TooFewObservations { got: 1 })
            }
            other => panic!("{other:?}"),
        }
        assert!(!fuse_all_kway(&s[..1]).is_success());
    }

    #[test]
    fn kway_matches_fuse_on_clean_input_and_loses_with_outliers() {
        let ws = workspace();
        let rig = synthetic_rig(4, &ws, (640, 480)).unwrap();
        let x = Point3::new(0.7, 0.3, 1.4);
        let s = observe_exact(&x, &rig);
        let (a, b) = match (fuse(&s, &FusionConfig::default()), fuse_all_kway(&s)) {
            (
                FusionResult::Success { position: a, .. },
                FusionResult::Success { position: b, .. },
            ) => (a, b),
            other => panic!("{other:?}"),
        };
        assert!((a - b).norm() < 1e-6);

        let mut corrupted = observe_exact(&x, &rig);
        corrupted[1].0.pixel = Pixel::new(10.0, 10.0);
        let robust = match fuse(&corrupted, &FusionConfig::default()) {
            FusionResult::Success { position, .. } => position,
            other => panic!("{other:?}"),
        };
        let naive = match fuse_all_kway(&corrupted) {
            FusionResult::Success { position, .. } => position,
            other => panic!("{other:?}"),
        };
        assert!((robust - x).norm() < (naive - x).norm());
    }

    #[test]
    fn pair_loop_runs_exactly_c_choose_2_candidates() {
        let ws = workspace();
        for c in [2usize, 4, 7] {
            let rig = synthetic_rig(c, &ws, (640, 480)).unwrap();
            let s = observe_exact(&ws.center(), &rig);
            let consensus = largest_consistent_subset(&s, &FusionConfig::default()).unwrap();
            let expect = (c * (c - 1) / 2) as u64;
            assert_eq!(consensus.stats.candidates, expect);
            assert_eq!(consensus.stats.residual_evals, expect * c as u64);
        }
    }

    /// Frozen seeded Monte-Carlo: 6 cameras with 1.3 px noise, 2 replaced
    /// by uniform-random pixels, epsilon 5 px. Success = inlier set equals
    /// exactly the 4 uncorrupted cameras. Rate pinned from the oracle run.
    #[test]
    fn corrupted_cameras_are_rejected_at_frozen_rate() {
        const TRIALS: usize = 10_000;
        const FROZEN_SUCCESSES: usize = 9_960;
        let ws = workspace();
        let rig = synthetic_rig(6, &ws, (640, 480)).unwrap();
        let cfg = FusionConfig {
            epsilon: 5.0,
            min_inliers: 2,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let mut successes = 0usize;
        for _ in 0..TRIALS {
            let x = ws.sample(&mut rng);
            let mut corrupt: Vec<usize> = (0..rig.len()).collect();
            corrupt.shuffle(&mut rng);
            let corrupt = &corrupt[..2];
            let s: Vec<(PixelObservation, &CameraModel)> = rig
                .iter()
                .enumerate()
                .map(|(k, cam)| {
                    let pixel = if corrupt.contains(&k) {
                        Pixel::new(
                            rng.gen_range(0.0..cam.width as f64),
                            rng.gen_range(0.0..cam.height as f64),
                        )
                    } else {
                        let p = cam.project(&x).unwrap();
                        let (n1, n2) = crate::testutil::gauss_pair(&mut rng, 1.3);
                        Pixel::new(p.u + n1, p.v + n2)
                    };
                    (
                        PixelObservation {
                            camera_id: cam.id,
                            pixel,
                            frame: 0,
                        },
                        cam,
                    )
                })
                .collect();
            let consensus = largest_consistent_subset(&s, &cfg).unwrap();
            let mut expected: Vec<CameraId> = (0..6u32).filter(|k| !corrupt.contains(&(*k as usize))).collect();
            expected.sort_unstable();
            if consensus.inlier_ids == expected {
                successes += 1;
            }
        }
        assert!(successes >= TRIALS * 99 / 100, "{successes}/{TRIALS}");
        assert_eq!(successes, FROZEN_SUCCESSES);
    }

    /// Independent oracle: enumerate every pair candidate naively and pick
    /// the winner by (size, mean residual, pair order). Shares only the
    /// geometry primitives with the implementation under test.
    pub(crate) fn brute_force(
        s: &[(PixelObservation, &CameraModel)],
        epsilon: f64,
    ) -> (Vec<CameraId>, usize) {
        let mut ordered: Vec<&(PixelObservation, &CameraModel)> = s.iter().collect();
        ordered.sort_by_key(|(o, _)| o.camera_id);
        let mut best_ids: Vec<CameraId> = Vec::new();
        let mut best_mean = f64::INFINITY;
        let mut considered = 0usize;
        for i in 0..ordered.len() {
            for j in (i + 1)..ordered.len() {
                let pair = [
                    (ordered[i].0.pixel, ordered[i].1),
                    (ordered[j].0.pixel, ordered[j].1),
                ];
                let cand = match triangulate(&pair, false) {
                    Ok(x) => x,
                    Err(_) => continue,
                };
                considered += 1;
                let mut ids = Vec::new();
                let mut sum = 0.0;
                for (o, cam) in ordered.iter() {
                    let e = match cam.project(&cand) {
                        Ok(p) => p.distance(&o.pixel),
                        Err(_) => f64::INFINITY,
                    };
                    if e < epsilon {
                        ids.push(o.camera_id);
                        sum += e;
                    }
                }
                let mean = if ids.is_empty() {
                    f64::INFINITY
                } else {
                    sum / ids.len() as f64
                };
                if ids.len() > best_ids.len() || (ids.len() == best_ids.len() && mean < best_mean) {
                    best_ids = ids;
                    best_mean = mean;
                }
            }
        }
        (best_ids, considered)
    }

    /// Subset-enumeration maximality oracle: the winner size equals the
    /// maximum over all subsets of size >= 2 that some pair candidate
    /// covers entirely within epsilon.
    #[test]
    fn maximality_against_subset_enumeration() {
        let ws = workspace();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..200 {
            let c = rng.gen_range(3usize..=6);
            let rig = synthetic_rig(c, &ws, (640, 480)).unwrap();
            let x = ws.sample(&mut rng);
            let n_outliers = rng.gen_range(0..=c / 2);
            let s: Vec<(PixelObservation, &CameraModel)> = rig
                .iter()
                .enumerate()
                .map(|(k, cam)| {
                    let pixel = if k < n_outliers {
                        Pixel::new(
                            rng.gen_range(0.0..cam.width as f64),
                            rng.gen_range(0.0..cam.height as f64),
                        )
                    } else {
                        let p = cam.project(&x).unwrap();
                        let (n1, n2) = crate::testutil::gauss_pair(&mut rng, 1.3);
                        Pixel::new(p.u + n1, p.v + n2)
                    };
                    (
                        PixelObservation {
                            camera_id: cam.id,
                            pixel,
                            frame: 0,
                        },
                        cam,
                    )
                })
                .collect();
            let cfg = FusionConfig {
                epsilon: 5.0,
                min_inliers: 2,
            };
            let consensus = largest_consistent_subset(&s, &cfg).unwrap();

            // Enumerate: collect every pair-generated consistent set, then
            // every subset of size >= 2 covered by one of them.
            let mut covers: Vec<Vec<CameraId>> = Vec::new();
            for i in 0..s.len() {
                for j in (i + 1)..s.len() {
                    let pair = [(s[i].0.pixel, s[i].1), (s[j].0.pixel, s[j].1)];
                    if let Ok(cand) = triangulate(&pair, false) {
                        let ids: Vec<CameraId> = s
                            .iter()
                            .filter(|(o, cam)| match cam.project(&cand) {
                                Ok(p) => p.distance(&o.pixel) < cfg.epsilon,
                                Err(_) => false,
                            })
                            .map(|(o, _)| o.camera_id)
                            .collect();
                        covers.push(ids);
                    }
                }
            }
            let mut max_subset = 0usize;
            for mask in 0u32..(1 << s.len()) {
                let subset: Vec<CameraId> = (0..s.len())
                    .filter(|k| mask & (1 << k) != 0)
                    .map(|k| s[k].0.camera_id)
                    .collect();
                if subset.len() < 2 {
                    continue;
                }
                if covers
                    .iter()
                    .any(|cover| subset.iter().all(|id| cover.contains(id)))
                {
                    max_subset = max_subset.max(subset.len());
                }
            }
            if max_subset >= 2 {
                assert_eq!(consensus.inlier_ids.len(), max_subset, "trial {trial}");
            } else {
                assert!(consensus.inlier_ids.len() < 2, "trial {trial}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Shuffling the input changes nothing.
        #[test]
        fn permutation_invariance(seed in 0u64..500, perm_seed in 0u64..500) {
            let ws = workspace();
            let rig = synthetic_rig(5, &ws, (640, 480)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = ws.sample(&mut rng);
            let mut s: Vec<(PixelObservation, &CameraModel)> = rig
                .iter()
                .enumerate()
                .map(|(k, cam)| {
                    let pixel = if k == 0 && seed % 2 == 0 {
                        Pixel::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0))
                    } else {
                        let p = cam.project(&x).unwrap();
                        let (n1, n2) = crate::testutil::gauss_pair(&mut rng, 1.3);
                        Pixel::new(p.u + n1, p.v + n2)
                    };
                    (PixelObservation { camera_id: cam.id, pixel, frame: 0 }, cam)
                })
                .collect();
            let cfg = FusionConfig::default();
            let a = largest_consistent_subset(&s, &cfg).unwrap();
            let mut perm_rng = ChaCha8Rng::seed_from_u64(perm_seed);
            s.shuffle(&mut perm_rng);
            let b = largest_consistent_subset(&s, &cfg).unwrap();
            prop_assert_eq!(a.inlier_ids, b.inlier_ids);
            prop_assert_eq!(a.generator, b.generator);
            prop_assert_eq!(a.candidate, b.candidate);
        }

        /// Winning set size is non-decreasing in epsilon.
        #[test]
        fn monotone_in_epsilon(seed in 0u64..500, e1 in 0.5f64..10.0, factor in 1.0f64..5.0) {
            let ws = workspace();
            let rig = synthetic_rig(5, &ws, (640, 480)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = ws.sample(&mut rng);
            let s: Vec<(PixelObservation, &CameraModel)> = rig
                .iter()
                .map(|cam| {
                    let p = cam.project(&x).unwrap();
                    let (n1, n2) = crate::testutil::gauss_pair(&mut rng, 2.0);
                    (PixelObservation { camera_id: cam.id, pixel: Pixel::new(p.u + n1, p.v + n2), frame: 0 }, cam)
                })
                .collect();
            let small = largest_consistent_subset(&s, &FusionConfig { epsilon: e1, min_inliers: 2 }).unwrap();
            let large = largest_consistent_subset(&s, &FusionConfig { epsilon: e1 * factor, min_inliers: 2 }).unwrap();
            prop_assert!(large.inlier_ids.len() >= small.inlier_ids.len());
        }
    }
}
