//! Subcommand implementations and the clap definitions behind the
//! `balltrack` binary.
//!
//! Exit-code contract: 0 success, 2 usage/input error, 3 numerical
//! failure (e.g. diverged training).

use std::collections::BTreeMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use balltrack_core::detect::{self, Connectivity, DetectorConfig, LabeledImage, TrainConfig};
use balltrack_core::fusion::{fuse, FusionConfig, FusionResult};
use balltrack_core::geometry::{Aabb, CameraId, CameraModel, Pixel, PixelObservation, Point3};
use clap::{Args, Parser, Subcommand};

use crate::sim::{
    loglog_slope, run_outlier_study, run_runtime_benchmark, run_trajectory_study,
    OutlierStudyConfig, TrajectoryStudyConfig,
};
use crate::streams::{read_detections, write_record, DetectionRecord, StreamError, TrackRecord};
use crate::synth::ManifestEntry;
use crate::{calib, labels, model_file, pnm};

#[derive(Parser)]
#[command(name = "balltrack", version, about = "Multi-camera ball tracking toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Train the pixel classifier on a labeled image corpus.
    Train(TrainArgs),
    /// Run per-image detection over a (camera, frame) image manifest.
    Detect(DetectArgs),
    /// Fuse per-camera detection streams into 3D track records.
    Track(TrackArgs),
    /// Run the outlier-rejection Monte-Carlo study grid.
    Simulate(SimulateArgs),
    /// Benchmark fusion runtime against camera count.
    Bench(BenchArgs),
    /// Run the trajectory-prediction study grid.
    Traj(TrajArgs),
}

/// Errors carry their exit code: input problems exit 2, numerical
/// failures exit 3.
#[derive(Debug)]
pub enum CmdError {
    Input(anyhow::Error),
    Numeric(anyhow::Error),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Input(_) => 2,
            CmdError::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CmdError::Input(e) | CmdError::Numeric(e) => format!("{e:#}"),
        }
    }
}

fn input<E: Into<anyhow::Error>>(e: E) -> CmdError {
    CmdError::Input(e.into())
}

pub fn run(cli: Cli) -> Result<(), CmdError> {
    match cli.cmd {
        Command::Train(a) => cmd_train(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Track(a) => cmd_track(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Traj(a) => cmd_traj(a),
    }
}

/// Opens `--out` or stdout.
fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CmdError> {
    match out {
        Some(p) => {
            let f = std::fs::File::create(p)
                .map_err(|e| input(anyhow::anyhow!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(std::io::stdout()))),
    }
}

#[derive(Args)]
pub struct TrainArgs {
    /// Label file: one JSON record per line with `path` and optional `bbox`.
    #[arg(long)]
    pub labels: PathBuf,
    /// Where to write the trained model file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn cmd_train(a: TrainArgs) -> Result<(), CmdError> {
    let records = labels::load(&a.labels).map_err(input)?;
    let mut data = Vec::with_capacity(records.len());
    for r in &records {
        let image = pnm::read_ppm(&r.path).map_err(input)?;
        data.push(LabeledImage {
            image,
            bbox: r.bbox(),
        });
    }
    let cfg = TrainConfig {
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
    };
    let report = match detect::train(&data, &cfg) {
        Ok(r) => r,
        Err(e @ detect::DetectError::Diverged) => {
            return Err(CmdError::Numeric(anyhow::anyhow!("{e}")))
        }
        Err(e) => return Err(input(anyhow::anyhow!("{e}"))),
    };
    model_file::save(&a.out, &report.unit).map_err(input)?;
    println!("final loss {:.6}", report.final_loss());
    Ok(())
}

#[derive(Args)]
pub struct DetectArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Calibration file; manifest camera ids must appear in it.
    #[arg(long)]
    pub calib: PathBuf,
    /// Image manifest: one JSON record per line with `camera_id`,
    /// `frame`, `path`.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Detection stream output path (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    pub t_high: f64,
    #[arg(long, default_value_t = 0.3)]
    pub t_low: f64,
    /// Flood-fill connectivity: 4 or 8.
    #[arg(long, default_value_t = 8)]
    pub connectivity: u8,
}

fn detector_config(t_high: f64, t_low: f64, connectivity: u8) -> Result<DetectorConfig, CmdError> {
    let connectivity = match connectivity {
        4 => Connectivity::Four,
        8 => Connectivity::Eight,
        other => return Err(input(anyhow::anyhow!("connectivity must be 4 or 8, got {other}"))),
    };
    if !(0.0 < t_low && t_low <= t_high && t_high <= 1.0) {
        return Err(input(anyhow::anyhow!(
            "thresholds must satisfy 0 < t_low <= t_high <= 1"
        )));
    }
    Ok(DetectorConfig {
        t_high,
        t_low,
        connectivity,
    })
}

fn cmd_detect(a: DetectArgs) -> Result<(), CmdError> {
    let unit = model_file::load(&a.model).map_err(input)?;
    let cams = calib::load(&a.calib).map_err(input)?;
    let known: BTreeMap<CameraId, ()> = cams.iter().map(|c| (c.id, ())).collect();
    let cfg = detector_config(a.t_high, a.t_low, a.connectivity)?;
    let manifest_text = std::fs::read_to_string(&a.manifest)
        .map_err(|e| input(anyhow::anyhow!("cannot read {}: {e}", a.manifest.display())))?;
    let mut out = open_out(&a.out)?;
    for (idx, line) in manifest_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(line).map_err(|e| {
            input(anyhow::anyhow!(
                "manifest {} line {}: {e}",
                a.manifest.display(),
                idx + 1
            ))
        })?;
        if !known.contains_key(&entry.camera_id) {
            return Err(input(anyhow::anyhow!(
                "manifest {} line {}: unknown camera id {}",
                a.manifest.display(),
                idx + 1,
                entry.camera_id
            )));
        }
        // Unreadable images produce a record-level error entry and
        // processing continues.
        let record = match pnm::read_ppm(&entry.path) {
            Err(e) => DetectionRecord::fault(entry.camera_id, entry.frame, e.to_string()),
            Ok(img) => match detect::detect(&img, &unit, &cfg) {
                Ok(Some(px)) => DetectionRecord::hit(entry.camera_id, entry.frame, px.u, px.v),
                Ok(None) => DetectionRecord::miss(entry.camera_id, entry.frame),
                Err(e) => DetectionRecord::fault(entry.camera_id, entry.frame, e.to_string()),
            },
        };
        write_record(&mut out, &record).map_err(input)?;
    }
    out.flush().map_err(input)?;
    Ok(())
}

#[derive(Args)]
pub struct TrackArgs {
    #[arg(long)]
    pub calib: PathBuf,
    /// Detection stream path; `-` reads stdin.
    #[arg(long, default_value = "-")]
    pub detections: PathBuf,
    /// Track stream output path (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Pixel error tolerance for the consistent-set search.
    #[arg(long, default_value_t = 5.0)]
    pub epsilon: f64,
    /// Frame rate used to derive record timestamps.
    #[arg(long, default_value_t = 200.0)]
    pub fps: f64,
    /// Emit per-record latency (makes reruns non-identical).
    #[arg(long, default_value_t = false)]
    pub timing: bool,
}

struct Tracker<'a> {
    cams: &'a BTreeMap<CameraId, CameraModel>,
    cfg: FusionConfig,
    fps: f64,
    timing: bool,
    /// Open groups by frame, with the group's wall-clock open time.
    pending: BTreeMap<u64, (Vec<DetectionRecord>, Instant)>,
    next_emit: u64,
    records_used: u64,
    records_late: u64,
}

impl<'a> Tracker<'a> {
    fn new(cams: &'a BTreeMap<CameraId, CameraModel>, cfg: FusionConfig, fps: f64, timing: bool) -> Self {
        Tracker {
            cams,
            cfg,
            fps,
            timing,
            pending: BTreeMap::new(),
            next_emit: 0,
            records_used: 0,
            records_late: 0,
        }
    }

    fn fuse_group(&self, frame: u64, records: &[DetectionRecord], opened: Instant) -> TrackRecord {
        let obs: Vec<(PixelObservation, &CameraModel)> = records
            .iter()
            .filter_map(|r| {
                let (u, v) = r.pixel()?;
                let cam = self.cams.get(&r.camera_id)?;
                Some((
                    PixelObservation {
                        camera_id: r.camera_id,
                        pixel: Pixel::new(u, v),
                        frame,
                    },
                    cam,
                ))
            })
            .collect();
        let t = frame as f64 / self.fps;
        let latency_ms = self
            .timing
            .then(|| opened.elapsed().as_secs_f64() * 1e3);
        match fuse(&obs, &self.cfg) {
            FusionResult::Success {
                position,
                inlier_ids,
                residuals,
            } => TrackRecord {
                frame,
                t,
                position: Some([position.x, position.y, position.z]),
                inlier_ids: Some(inlier_ids),
                residuals: Some(residuals),
                failure: None,
                latency_ms,
            },
            FusionResult::Failure { reason } => TrackRecord {
                frame,
                t,
                position: None,
                inlier_ids: None,
                residuals: None,
                failure: Some(reason.to_string()),
                latency_ms,
            },
        }
    }

    /// Emits every closed group in frame order; a group is closed when
    /// all calibrated cameras have reported or the stream has advanced
    /// two frames past it (`force_below`). Emission never skips ahead of
    /// an older open group.
    fn drain<W: Write>(&mut self, force_below: u64, out: &mut W) -> Result<(), StreamError> {
        while let Some((&frame, (records, opened))) = self.pending.iter().next() {
            let complete = records.len() >= self.cams.len();
            if !(complete || frame < force_below) {
                break;
            }
            let record = self.fuse_group(frame, records, *opened);
            write_record(out, &record)?;
            self.next_emit = frame + 1;
            self.pending.remove(&frame);
        }
        Ok(())
    }

    fn push<W: Write>(&mut self, r: DetectionRecord, out: &mut W) -> Result<(), StreamError> {
        if r.frame < self.next_emit {
            self.records_late += 1;
            return Ok(());
        }
        self.records_used += 1;
        let frame = r.frame;
        self.pending
            .entry(frame)
            .or_insert_with(|| (Vec::new(), Instant::now()))
            .0
            .push(r);
        // A record at frame f closes every group at frame <= f - 2.
        self.drain(frame.saturating_sub(1), out)
    }

    fn finish<W: Write>(&mut self, out: &mut W) -> Result<(), StreamError> {
        self.drain(u64::MAX, out)
    }
}

fn cmd_track(a: TrackArgs) -> Result<(), CmdError> {
    let cam_list = calib::load(&a.calib).map_err(input)?;
    let cams: BTreeMap<CameraId, CameraModel> =
        cam_list.into_iter().map(|c| (c.id, c)).collect();
    if a.epsilon <= 0.0 {
        return Err(input(anyhow::anyhow!("epsilon must be positive")));
    }
    let cfg = FusionConfig {
        epsilon: a.epsilon,
        ..FusionConfig::default()
    };
    let reader: Box<dyn BufRead> = if a.detections.as_os_str() == "-" {
        Box::new(std::io::BufReader::new(std::io::stdin()))
    } else {
        let f = std::fs::File::open(&a.detections).map_err(|e| {
            input(anyhow::anyhow!("cannot read {}: {e}", a.detections.display()))
        })?;
        Box::new(std::io::BufReader::new(f))
    };
    let mut out = open_out(&a.out)?;
    let mut tracker = Tracker::new(&cams, cfg, a.fps, a.timing);
    let mut records_in = 0u64;
    let mut records_skipped = 0u64;
    for item in read_detections(reader) {
        records_in += 1;
        match item {
            // Malformed lines are counted and skipped.
            Err(_) => records_skipped += 1,
            Ok(r) => {
                if cams.contains_key(&r.camera_id) {
                    tracker.push(r, &mut out).map_err(input)?;
                } else {
                    records_skipped += 1;
                }
            }
        }
    }
    tracker.finish(&mut out).map_err(input)?;
    out.flush().map_err(input)?;
    eprintln!(
        "records_in={records_in} records_used={} records_skipped={records_skipped} records_late={}",
        tracker.records_used, tracker.records_late
    );
    Ok(())
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Camera counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4,8,15,30")]
    pub cameras: Vec<usize>,
    /// Outlier probabilities, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1,0.25,0.5")]
    pub outliers: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Pixel noise standard deviation.
    #[arg(long, default_value_t = 1.3)]
    pub sigma: f64,
    /// Consistency threshold in pixels.
    #[arg(long, default_value_t = 5.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = false)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CmdError> {
    if a.cameras.iter().any(|&c| c < 2) {
        return Err(input(anyhow::anyhow!("camera counts must be at least 2")));
    }
    if a.outliers.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(input(anyhow::anyhow!("outlier probabilities must lie in [0, 1]")));
    }
    if a.trials == 0 || a.sigma < 0.0 || a.epsilon <= 0.0 {
        return Err(input(anyhow::anyhow!("invalid trials/sigma/epsilon")));
    }
    let cfg = OutlierStudyConfig {
        cameras: a.cameras.clone(),
        outlier_probs: a.outliers.clone(),
        pixel_noise_sigma: a.sigma,
        trials: a.trials,
        epsilon: a.epsilon,
        seed: a.seed,
        ..OutlierStudyConfig::default()
    };
    let cells = run_outlier_study(&cfg);
    let mut out = open_out(&a.out)?;
    if a.json {
        serde_json::to_writer_pretty(&mut out, &cells).map_err(input)?;
        writeln!(out).map_err(input)?;
    } else {
        // Header: one E/F column pair per outlier probability.
        write!(out, "{:>4}", "c").map_err(input)?;
        for p in &a.outliers {
            write!(out, " {:>9} {:>7}", format!("E@{p}"), format!("F@{p}")).map_err(input)?;
        }
        writeln!(out).map_err(input)?;
        for row in cells.chunks(a.outliers.len()) {
            write!(out, "{:>4}", row[0].c).map_err(input)?;
            for cell in row {
                write!(
                    out,
                    " {:>7.2}cm {:>6.2}%",
                    cell.mean_error_cm,
                    cell.failure_rate * 100.0
                )
                .map_err(input)?;
            }
            writeln!(out).map_err(input)?;
        }
    }
    out.flush().map_err(input)?;
    Ok(())
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "4,8,15,30,50")]
    pub cameras: Vec<usize>,
    /// Timed fuse calls per camera count.
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = false)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn cmd_bench(a: BenchArgs) -> Result<(), CmdError> {
    if a.cameras.iter().any(|&c| c < 2) {
        return Err(input(anyhow::anyhow!("camera counts must be at least 2")));
    }
    if a.reps < 100 {
        return Err(input(anyhow::anyhow!("reps must be at least 100")));
    }
    let rows = run_runtime_benchmark(&a.cameras, a.reps, a.seed);
    let slope = if rows.len() >= 2 {
        Some(loglog_slope(&rows))
    } else {
        None
    };
    let mut out = open_out(&a.out)?;
    if a.json {
        #[derive(serde::Serialize)]
        struct Doc<'a> {
            rows: &'a [crate::sim::RuntimeRow],
            loglog_slope: Option<f64>,
        }
        serde_json::to_writer_pretty(&mut out, &Doc { rows: &rows, loglog_slope: slope })
            .map_err(input)?;
        writeln!(out).map_err(input)?;
    } else {
        writeln!(out, "{:>4} {:>10} {:>10}", "c", "mean_ms", "p99_ms").map_err(input)?;
        for r in &rows {
            writeln!(out, "{:>4} {:>10.4} {:>10.4}", r.c, r.mean_ms, r.p99_ms).map_err(input)?;
        }
        if let Some(s) = slope {
            writeln!(out, "log-log slope {s:.2}").map_err(input)?;
        }
    }
    out.flush().map_err(input)?;
    Ok(())
}

#[derive(Args)]
pub struct TrajArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    pub orders: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "12,25,50,75")]
    pub obs: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// 3D observation noise in meters.
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = false)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn cmd_traj(a: TrajArgs) -> Result<(), CmdError> {
    if a.orders.iter().any(|&o| !(2..=4).contains(&o)) {
        return Err(input(anyhow::anyhow!("orders must lie in 2..=4")));
    }
    if a.obs.iter().any(|&n| n < 5) || a.trials == 0 || a.sigma < 0.0 {
        return Err(input(anyhow::anyhow!("invalid obs/trials/sigma")));
    }
    let cfg = TrajectoryStudyConfig {
        orders: a.orders.clone(),
        obs_counts: a.obs.clone(),
        trials: a.trials,
        noise_sigma_m: a.sigma,
        seed: a.seed,
        ..TrajectoryStudyConfig::default()
    };
    let cells = run_trajectory_study(&cfg);
    let mut out = open_out(&a.out)?;
    if a.json {
        serde_json::to_writer_pretty(&mut out, &cells).map_err(input)?;
        writeln!(out).map_err(input)?;
    } else {
        write!(out, "{:>6}", "order").map_err(input)?;
        for n in &a.obs {
            write!(out, " {:>9}", format!("{n}obs")).map_err(input)?;
        }
        writeln!(out).map_err(input)?;
        for row in cells.chunks(a.obs.len()) {
            write!(out, "{:>6}", row[0].order).map_err(input)?;
            for cell in row {
                write!(out, " {:>7.2}cm", cell.mean_error_cm).map_err(input)?;
            }
            writeln!(out).map_err(input)?;
        }
    }
    out.flush().map_err(input)?;
    Ok(())
}

/// Default workspace used by the studies, exposed for tests.
pub fn default_workspace() -> Aabb {
    Aabb::new(Point3::new(-2.0, -1.5, 0.0), Point3::new(2.0, 1.5, 2.0))
}
