//! Binary PNM image IO: P6 (color, maxval 255) for camera images and P5
//! (gray, maxval 255) for probability-image dumps.

use std::io::{Read, Write};
use std::path::Path;

use balltrack_core::detect::{ColorImage, ProbabilityImage};

#[derive(Debug, thiserror::Error)]
pub enum PnmError {
    #[error("cannot access image {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("image {path}: {reason}")]
    Format { path: String, reason: String },
}

fn format_err(path: &Path, reason: impl Into<String>) -> PnmError {
    PnmError::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> PnmError {
    PnmError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads the PNM header after the magic: whitespace/comment-separated
/// width, height, maxval; returns them plus the offset of the raster.
fn parse_header(data: &[u8], path: &Path) -> Result<(usize, usize, usize, usize), PnmError> {
    let mut fields = Vec::new();
    let mut pos = 2; // past the magic
    while fields.len() < 3 {
        while pos < data.len() && (data[pos].is_ascii_whitespace() || data[pos] == b'#') {
            if data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < data.len() && data[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(path, "truncated header"));
        }
        let text = std::str::from_utf8(&data[start..pos]).unwrap();
        fields.push(
            text.parse::<usize>()
                .map_err(|_| format_err(path, "bad header field"))?,
        );
    }
    if pos >= data.len() || !data[pos].is_ascii_whitespace() {
        return Err(format_err(path, "missing raster separator"));
    }
    Ok((fields[0], fields[1], fields[2], pos + 1))
}

/// Reads a binary P6 color image, normalizing channels to [0, 1].
pub fn read_ppm(path: &Path) -> Result<ColorImage, PnmError> {
    let mut data = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(|e| io_err(path, e))?;
    if data.len() < 2 || &data[..2] != b"P6" {
        return Err(format_err(path, "not a binary P6 pixmap"));
    }
    let (w, h, maxval, offset) = parse_header(&data, path)?;
    if maxval != 255 {
        return Err(format_err(path, format!("unsupported maxval {maxval}")));
    }
    let need = w * h * 3;
    let raster = data
        .get(offset..offset + need)
        .ok_or_else(|| format_err(path, "truncated raster"))?;
    let pixels = raster
        .chunks_exact(3)
        .map(|c| [c[0] as f64 / 255.0, c[1] as f64 / 255.0, c[2] as f64 / 255.0])
        .collect();
    ColorImage::new(w, h, pixels).map_err(|e| format_err(path, e.to_string()))
}

/// Writes a binary P6 color image, quantizing channels to 0-255.
pub fn write_ppm(path: &Path, img: &ColorImage) -> Result<(), PnmError> {
    let mut out = Vec::with_capacity(img.width * img.height * 3 + 32);
    out.extend_from_slice(format!("P6\n{} {}\n255\n", img.width, img.height).as_bytes());
    for px in img.pixels() {
        for ch in px {
            out.push((ch * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| io_err(path, e))
}

/// Writes a probability image as a binary P5 graymap scaled to 0-255.
pub fn write_pgm(path: &Path, img: &ProbabilityImage) -> Result<(), PnmError> {
    let mut out = Vec::with_capacity(img.width * img.height + 32);
    out.extend_from_slice(format!("P5\n{} {}\n255\n", img.width, img.height).as_bytes());
    for v in img.values() {
        out.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| io_err(path, e))
}
