//! Label files for detector training: one JSON record per line, each
//! carrying an image path and an optional bounding box
//! `[min_row, min_col, max_row, max_col]` (absent for ball-free images).

use std::path::{Path, PathBuf};

use balltrack_core::detect::Bbox;
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct LabelRecord {
    pub path: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bbox: Option<[usize; 4]>,
}

impl LabelRecord {
    pub fn bbox(&self) -> Option<Bbox> {
        self.bbox.map(|[min_row, min_col, max_row, max_col]| Bbox {
            min_row,
            min_col,
            max_row,
            max_col,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LabelError {
    #[error("cannot read label file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("label file {path} line {line}: {source}")]
    Parse {
        path: String,
        line: usize,
        source: serde_json::Error,
    },
    #[error("label file {path} has no records")]
    Empty { path: String },
    #[error("label file {path} line {line}: bbox min exceeds max")]
    BadBbox { path: String, line: usize },
}

pub fn load(path: &Path) -> Result<Vec<LabelRecord>, LabelError> {
    let text = std::fs::read_to_string(path).map_err(|source| LabelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: LabelRecord =
            serde_json::from_str(line).map_err(|source| LabelError::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                source,
            })?;
        if let Some([r0, c0, r1, c1]) = record.bbox {
            if r0 > r1 || c0 > c1 {
                return Err(LabelError::BadBbox {
                    path: path.display().to_string(),
                    line: idx + 1,
                });
            }
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(LabelError::Empty {
            path: path.display().to_string(),
        });
    }
    Ok(records)
}

pub fn save(path: &Path, records: &[LabelRecord]) -> Result<(), LabelError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("serializable"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| LabelError::Io {
        path: path.display().to_string(),
        source,
    })
}
