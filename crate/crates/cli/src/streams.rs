//! Line-delimited record streams between pipeline stages: one JSON
//! object per line, greppable and seekable.

use std::io::{BufRead, Write};

use balltrack_core::geometry::{CameraId, Point3};
use serde::{Deserialize, Serialize};

/// Per-image detector output: a pixel position, an explicit no-ball
/// marker, or a record-level error (unreadable image).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DetectionRecord {
    pub camera_id: CameraId,
    pub frame: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub none: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl DetectionRecord {
    pub fn hit(camera_id: CameraId, frame: u64, u: f64, v: f64) -> Self {
        DetectionRecord {
            camera_id,
            frame,
            u: Some(u),
            v: Some(v),
            none: None,
            error: None,
        }
    }

    pub fn miss(camera_id: CameraId, frame: u64) -> Self {
        DetectionRecord {
            camera_id,
            frame,
            u: None,
            v: None,
            none: Some(true),
            error: None,
        }
    }

    pub fn fault(camera_id: CameraId, frame: u64, error: String) -> Self {
        DetectionRecord {
            camera_id,
            frame,
            u: None,
            v: None,
            none: None,
            error: Some(error),
        }
    }

    pub fn pixel(&self) -> Option<(f64, f64)> {
        match (self.u, self.v) {
            (Some(u), Some(v)) => Some((u, v)),
            _ => None,
        }
    }
}

/// Fused per-frame output: a 3D position with its inlier cameras, or an
/// explicit failure reason. `latency_ms` is present only when timing is
/// requested, so seeded reruns stay byte-identical.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrackRecord {
    pub frame: u64,
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inlier_ids: Option<Vec<CameraId>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<f64>,
}

impl TrackRecord {
    pub fn point(&self) -> Option<Point3> {
        self.position.map(|[x, y, z]| Point3::new(x, y, z))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StreamError {
    #[error("stream IO error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record: {0}")]
    Malformed(#[from] serde_json::Error),
}

pub fn write_record<W: Write, T: Serialize>(w: &mut W, record: &T) -> Result<(), StreamError> {
    serde_json::to_writer(&mut *w, record)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Reads every line of a detection stream; malformed lines are returned
/// as `Err` entries so callers can count and skip them.
pub fn read_detections<R: BufRead>(
    r: R,
) -> impl Iterator<Item = Result<DetectionRecord, StreamError>> {
    r.lines().filter_map(|line| match line {
        Err(e) => Some(Err(StreamError::Io(e))),
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(serde_json::from_str(&l).map_err(StreamError::Malformed)),
    })
}
