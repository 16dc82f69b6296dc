//! Detector model files: the 75 filter weights (row-major over the 5x5
//! window, channel-minor) and the bias, as a JSON document.

use std::path::Path;

use balltrack_core::detect::{ConvUnit, WEIGHT_COUNT};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    weights: Vec<f64>,
    bias: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("cannot read model file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("model file {path} is not valid JSON: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("model file {path}: expected {expected} weights, found {found}")]
    BadWeightCount {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("model file {path}: non-finite parameter")]
    NonFinite { path: String },
}

pub fn load(path: &Path) -> Result<ConvUnit, ModelFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let doc: ModelDoc = serde_json::from_str(&text).map_err(|source| ModelFileError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    if doc.weights.len() != WEIGHT_COUNT {
        return Err(ModelFileError::BadWeightCount {
            path: path.display().to_string(),
            expected: WEIGHT_COUNT,
            found: doc.weights.len(),
        });
    }
    let mut unit = ConvUnit::zeros();
    unit.weights.copy_from_slice(&doc.weights);
    unit.bias = doc.bias;
    if !unit.is_finite() {
        return Err(ModelFileError::NonFinite {
            path: path.display().to_string(),
        });
    }
    Ok(unit)
}

pub fn save(path: &Path, unit: &ConvUnit) -> Result<(), ModelFileError> {
    let doc = ModelDoc {
        weights: unit.weights.to_vec(),
        bias: unit.bias,
    };
    let text = serde_json::to_string_pretty(&doc).expect("serializable");
    std::fs::write(path, text).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })
}
