//! IO, file formats, study harnesses, and the command-line pipeline for
//! the ball-tracking toolkit. The numerical core lives in
//! `balltrack-core`; this crate adds everything that needs an operating
//! system: calibration/model/label files, PNM images, line-delimited
//! record streams, the Monte-Carlo studies, and the subcommands.

pub mod calib;
pub mod commands;
pub mod labels;
pub mod model_file;
pub mod pnm;
pub mod sim;
pub mod streams;
pub mod synth;
