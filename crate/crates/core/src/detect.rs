//! Per-image ball detection.
//!
//! A single 5x5 convolutional unit over normalized RGB produces a per-pixel
//! ball probability; the object is then extracted by locating the global
//! probability maximum and flood-filling its neighborhood above a low
//! threshold by breadth-first search.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Pixel;

pub const FILTER_SIZE: usize = 5;
pub const CHANNELS: usize = 3;
pub const WEIGHT_COUNT: usize = FILTER_SIZE * FILTER_SIZE * CHANNELS;

/// RGB image with channels normalized to [0, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    pub width: usize,
    pub height: usize,
    pixels: Vec<[f64; CHANNELS]>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; CHANNELS]>) -> Result<Self, DetectError> {
        if pixels.len() != width * height {
            return Err(DetectError::BadDimensions);
        }
        if pixels
            .iter()
            .any(|p| p.iter().any(|c| !(0.0..=1.0).contains(c)))
        {
            return Err(DetectError::ChannelOutOfRange);
        }
        Ok(ColorImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: [f64; CHANNELS]) -> Self {
        ColorImage {
            width,
            height,
            pixels: vec![color; width * height],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> [f64; CHANNELS] {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, color: [f64; CHANNELS]) {
        self.pixels[row * self.width + col] = color;
    }

    pub fn pixels(&self) -> &[[f64; CHANNELS]] {
        &self.pixels
    }
}

/// Per-pixel ball probability map, same dimensions as its source image.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityImage {
    pub width: usize,
    pub height: usize,
    values: Vec<f64>,
}

impl ProbabilityImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, DetectError> {
        if values.len() != width * height {
            return Err(DetectError::BadDimensions);
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(DetectError::ChannelOutOfRange);
        }
        Ok(ProbabilityImage {
            width,
            height,
            values,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Thresholds for region extraction: the global maximum must clear
/// `t_high`; the flood fill admits neighbors above `t_low`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub t_high: f64,
    pub t_low: f64,
    pub connectivity: Connectivity,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            t_high: 0.8,
            t_low: 0.3,
            connectivity: Connectivity::Eight,
        }
    }
}

/// The 5x5x3 filter and bias of the pixel classifier. Weight layout is
/// row-major over the filter window with the channel as the minor index.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvUnit {
    pub weights: [f64; WEIGHT_COUNT],
    pub bias: f64,
}

impl ConvUnit {
    pub fn zeros() -> Self {
        ConvUnit {
            weights: [0.0; WEIGHT_COUNT],
            bias: 0.0,
        }
    }

    #[inline]
    pub fn weight(&self, dr: usize, dc: usize, ch: usize) -> f64 {
        self.weights[(dr * FILTER_SIZE + dc) * CHANNELS + ch]
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }
}

/// Connected set of object pixels with its centroid and tight bounding
/// box (min_row, min_col, max_row, max_col).
#[derive(Debug, Clone, PartialEq)]
pub struct PixelRegion {
    /// (row, col) members, sorted row-major.
    pub pixels: Vec<(usize, usize)>,
    /// Unweighted mean of member coordinates, as (u=col, v=row).
    pub centroid: Pixel,
    pub bbox: (usize, usize, usize, usize),
}

/// Operation counters for the extraction stages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractionStats {
    /// Pixels visited by the argmax scan (always the full image).
    pub argmax_visits: u64,
    /// Pixels admitted to the region by the flood fill.
    pub admitted: u64,
    /// Neighbor probes performed by the flood fill.
    pub neighbor_probes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectError {
    /// Image smaller than the 5x5 filter.
    ImageTooSmall,
    BadDimensions,
    ChannelOutOfRange,
    NoPositiveLabels,
    /// Training loss became non-finite (diverged learning rate).
    Diverged,
}

impl fmt::Display for DetectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectError::ImageTooSmall => write!(f, "image smaller than the 5x5 filter"),
            DetectError::BadDimensions => write!(f, "pixel buffer does not match dimensions"),
            DetectError::ChannelOutOfRange => write!(f, "values must lie in [0, 1]"),
            DetectError::NoPositiveLabels => write!(f, "training corpus has no positive bounding box"),
            DetectError::Diverged => write!(f, "training loss diverged"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DetectError {}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

/// Classifier logit at one pixel: dot product of the 5x5x3 neighborhood
/// (zero padded at the borders) with the filter, plus bias.
fn logit_at(img: &ColorImage, unit: &ConvUnit, row: usize, col: usize) -> f64 {
    let mut z = unit.bias;
    let half = (FILTER_SIZE / 2) as isize;
    for dr in 0..FILTER_SIZE {
        let r = row as isize + dr as isize - half;
        if r < 0 || r >= img.height as isize {
            continue;
        }
        for dc in 0..FILTER_SIZE {
            let c = col as isize + dc as isize - half;
            if c < 0 || c >= img.width as isize {
                continue;
            }
            let px = img.get(r as usize, c as usize);
            for (ch, &val) in px.iter().enumerate() {
                z += unit.weight(dr, dc, ch) * val;
            }
        }
    }
    z
}

/// Runs the convolutional unit over the image, producing a same-size
/// probability map (logistic sigmoid of the per-pixel logit).
pub fn infer(img: &ColorImage, unit: &ConvUnit) -> Result<ProbabilityImage, DetectError> {
    if img.width < FILTER_SIZE || img.height < FILTER_SIZE {
        return Err(DetectError::ImageTooSmall);
    }
    let mut values = Vec::with_capacity(img.width * img.height);
    for row in 0..img.height {
        for col in 0..img.width {
            values.push(sigmoid(logit_at(img, unit, row, col)));
        }
    }
    Ok(ProbabilityImage {
        width: img.width,
        height: img.height,
        values,
    })
}

/// Extracts the object region: the global argmax gates on `t_high`
/// (row-major first occurrence on ties), then a breadth-first flood fill
/// admits neighbors above `t_low`.
pub fn find_object_pixels(b: &ProbabilityImage, cfg: &DetectorConfig) -> Option<PixelRegion> {
    find_object_pixels_with_stats(b, cfg).0
}

pub fn find_object_pixels_with_stats(
    b: &ProbabilityImage,
    cfg: &DetectorConfig,
) -> (Option<PixelRegion>, ExtractionStats) {
    let mut stats = ExtractionStats::default();
    let (w, h) = (b.width, b.height);

    let mut best = 0usize;
    for idx in 0..w * h {
        stats.argmax_visits += 1;
        if b.values[idx] > b.values[best] {
            best = idx;
        }
    }
    if b.values[best] < cfg.t_high {
        return (None, stats);
    }
    let seed = (best / w, best % w);

    let mut member = vec![false; w * h];
    member[best] = true;
    let mut queue = VecDeque::new();
    queue.push_back(seed);
    let mut pixels = vec![seed];
    stats.admitted = 1;

    let offsets_4: &[(isize, isize)] = &[(-1, 0), (1, 0), (0, -1), (0, 1)];
    let offsets_8: &[(isize, isize)] = &[
        (-1, -1),
        (-1, 0),
        (-1, 1),
        (0, -1),
        (0, 1),
        (1, -1),
        (1, 0),
        (1, 1),
    ];
    let offsets = match cfg.connectivity {
        Connectivity::Four => offsets_4,
        Connectivity::Eight => offsets_8,
    };

    while let Some((r, c)) = queue.pop_front() {
        for (dr, dc) in offsets {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                continue;
            }
            stats.neighbor_probes += 1;
            let (nr, nc) = (nr as usize, nc as usize);
            let idx = nr * w + nc;
            if !member[idx] && b.values[idx] > cfg.t_low {
                member[idx] = true;
                stats.admitted += 1;
                queue.push_back((nr, nc));
                pixels.push((nr, nc));
            }
        }
    }

    pixels.sort_unstable();
    let n = pixels.len() as f64;
    let (mut sum_r, mut sum_c) = (0.0, 0.0);
    let (mut min_r, mut min_c, mut max_r, mut max_c) = (usize::MAX, usize::MAX, 0, 0);
    for (r, c) in &pixels {
        sum_r += *r as f64;
        sum_c += *c as f64;
        min_r = min_r.min(*r);
        min_c = min_c.min(*c);
        max_r = max_r.max(*r);
        max_c = max_c.max(*c);
    }
    let region = PixelRegion {
        pixels,
        centroid: Pixel::new(sum_c / n, sum_r / n),
        bbox: (min_r, min_c, max_r, max_c),
    };
    (Some(region), stats)
}

/// Full per-image detection: probability map, region extraction, centroid.
pub fn detect(
    img: &ColorImage,
    unit: &ConvUnit,
    cfg: &DetectorConfig,
) -> Result<Option<Pixel>, DetectError> {
    let b = infer(img, unit)?;
    Ok(find_object_pixels(&b, cfg).map(|r| r.centroid))
}

/// Inclusive bounding box label in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bbox {
    pub min_row: usize,
    pub min_col: usize,
    pub max_row: usize,
    pub max_col: usize,
}

impl Bbox {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.min_row && row <= self.max_row && col >= self.min_col && col <= self.max_col
    }
}

/// One labeled training image; `None` bbox marks a ball-free image.
#[derive(Debug, Clone)]
pub struct LabeledImage {
    pub image: ColorImage,
    pub bbox: Option<Bbox>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 20,
            batch_size: 64,
            seed: 0,
        }
    }
}

/// Trained unit plus the mean cross-entropy before training and after
/// each epoch.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub unit: ConvUnit,
    pub losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("losses never empty")
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    image: usize,
    row: usize,
    col: usize,
    positive: bool,
}

/// Numerically stable mean cross-entropy of the logit against the label.
fn cross_entropy(z: f64, positive: bool) -> f64 {
    let y = if positive { 1.0 } else { 0.0 };
    z.max(0.0) - z * y + libm::log(1.0 + libm::exp(-libm::fabs(z)))
}

/// Trains the per-pixel logistic classifier by seeded mini-batch SGD.
///
/// Pixels inside a labeled bbox are positive, all others negative;
/// negatives are subsampled to a 10:1 negative:positive ratio per image
/// (bbox-free images contribute the corpus-average positive count times
/// ten). Deterministic given the seed.
pub fn train(data: &[LabeledImage], cfg: &TrainConfig) -> Result<TrainReport, DetectError> {
    for li in data {
        if li.image.width < FILTER_SIZE || li.image.height < FILTER_SIZE {
            return Err(DetectError::ImageTooSmall);
        }
    }
    let mut total_pos = 0usize;
    let mut labeled_images = 0usize;
    for li in data {
        if let Some(b) = &li.bbox {
            total_pos += (b.max_row - b.min_row + 1) * (b.max_col - b.min_col + 1);
            labeled_images += 1;
        }
    }
    if total_pos == 0 {
        return Err(DetectError::NoPositiveLabels);
    }
    let avg_pos = total_pos.div_ceil(labeled_images);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples: Vec<Sample> = Vec::new();
    for (img_idx, li) in data.iter().enumerate() {
        let (w, h) = (li.image.width, li.image.height);
        let n_pos = match &li.bbox {
            Some(b) => {
                for row in b.min_row..=b.max_row {
                    for col in b.min_col..=b.max_col {
                        samples.push(Sample {
                            image: img_idx,
                            row,
                            col,
                            positive: true,
                        });
                    }
                }
                (b.max_row - b.min_row + 1) * (b.max_col - b.min_col + 1)
            }
            None => 0,
        };
        let quota = 10 * if li.bbox.is_some() { n_pos } else { avg_pos };
        let mut negatives: Vec<(usize, usize)> = (0..h * w)
            .map(|i| (i / w, i % w))
            .filter(|(r, c)| li.bbox.is_none_or(|b| !b.contains(*r, *c)))
            .collect();
        negatives.shuffle(&mut rng);
        for (row, col) in negatives.into_iter().take(quota) {
            samples.push(Sample {
                image: img_idx,
                row,
                col,
                positive: false,
            });
        }
    }

    // Seed-determined initialization.
    let mut unit = ConvUnit::zeros();
    for w in unit.weights.iter_mut() {
        *w = rng.gen_range(-0.01..0.01);
    }

    let feature = |s: &Sample, unit: &ConvUnit| logit_at(&data[s.image].image, unit, s.row, s.col);
    let corpus_loss = |unit: &ConvUnit| {
        samples
            .iter()
            .map(|s| cross_entropy(feature(s, unit), s.positive))
            .sum::<f64>()
            / samples.len() as f64
    };

    let mut losses = vec![corpus_loss(&unit)];
    let batch_size = cfg.batch_size.max(1);
    let half = (FILTER_SIZE / 2) as isize;
    let mut order: Vec<usize> = (0..samples.len()).collect();

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size) {
            let mut grad_w = [0.0f64; WEIGHT_COUNT];
            let mut grad_b = 0.0f64;
            for &si in batch {
                let s = &samples[si];
                let img = &data[s.image].image;
                let z = logit_at(img, &unit, s.row, s.col);
                let g = sigmoid(z) - if s.positive { 1.0 } else { 0.0 };
                grad_b += g;
                for dr in 0..FILTER_SIZE {
                    let r = s.row as isize + dr as isize - half;
                    if r < 0 || r >= img.height as isize {
                        continue;
                    }
                    for dc in 0..FILTER_SIZE {
                        let c = s.col as isize + dc as isize - half;
                        if c < 0 || c >= img.width as isize {
                            continue;
                        }
                        let px = img.get(r as usize, c as usize);
                        for ch in 0..CHANNELS {
                            grad_w[(dr * FILTER_SIZE + dc) * CHANNELS + ch] += g * px[ch];
                        }
                    }
                }
            }
            let scale = cfg.learning_rate / batch.len() as f64;
            for (w, g) in unit.weights.iter_mut().zip(grad_w.iter()) {
                *w -= scale * g;
            }
            unit.bias -= scale * grad_b;
        }
        let loss = corpus_loss(&unit);
        if !loss.is_finite() || !unit.is_finite() {
            return Err(DetectError::Diverged);
        }
        losses.push(loss);
    }

    Ok(TrainReport { unit, losses })
}
