//! Calibration file parsing and writing.
//!
//! A calibration document is JSON with a `cameras` array; each entry
//! carries `id`, `width`, `height`, and `P`, the 12 entries of the 3x4
//! projection matrix in row-major order.

use std::path::Path;

use balltrack_core::geometry::{CameraError, CameraModel, ProjectionMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct CalibrationDoc {
    pub cameras: Vec<CameraEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CameraEntry {
    pub id: u32,
    pub width: u32,
    pub height: u32,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CalibError {
    #[error("cannot read calibration file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("calibration file {path} is not valid JSON: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("camera {id}: P must have 12 entries, found {found}")]
    BadMatrixLength { id: u32, found: usize },
    #[error("camera {id}: {source}")]
    BadCamera { id: u32, source: CameraError },
    #[error("duplicate camera id {id}")]
    DuplicateId { id: u32 },
    #[error("calibration file {path} lists no cameras")]
    Empty { path: String },
}

/// Loads and validates a calibration file, returning cameras sorted by id.
pub fn load(path: &Path) -> Result<Vec<CameraModel>, CalibError> {
    let text = std::fs::read_to_string(path).map_err(|source| CalibError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let doc: CalibrationDoc = serde_json::from_str(&text).map_err(|source| CalibError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    if doc.cameras.is_empty() {
        return Err(CalibError::Empty {
            path: path.display().to_string(),
        });
    }
    let mut cams = Vec::with_capacity(doc.cameras.len());
    for entry in &doc.cameras {
        if entry.p.len() != 12 {
            return Err(CalibError::BadMatrixLength {
                id: entry.id,
                found: entry.p.len(),
            });
        }
        let p = ProjectionMatrix::from_row_slice(&entry.p);
        let cam = CameraModel::new(entry.id, p, entry.width, entry.height)
            .map_err(|source| CalibError::BadCamera {
                id: entry.id,
                source,
            })?;
        cams.push(cam);
    }
    cams.sort_by_key(|c| c.id);
    if let Some(w) = cams.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(CalibError::DuplicateId { id: w[0].id });
    }
    Ok(cams)
}

/// Writes a rig to a calibration file.
pub fn save(path: &Path, cams: &[CameraModel]) -> Result<(), CalibError> {
    let doc = CalibrationDoc {
        cameras: cams
            .iter()
            .map(|c| CameraEntry {
                id: c.id,
                width: c.width,
                height: c.height,
                p: c
                    .projection()
                    .row_iter()
                    .flat_map(|r| r.iter().copied().collect::<Vec<_>>())
                    .collect(),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&doc).expect("serializable");
    std::fs::write(path, text).map_err(|source| CalibError::Io {
        path: path.display().to_string(),
        source,
    })
}
