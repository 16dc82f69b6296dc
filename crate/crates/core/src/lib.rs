//! Core algorithms for reliable multi-camera ball tracking.
//!
//! The crate is split along the processing pipeline:
//!
//! * [`detect`] — per-image ball detection with a single 5x5 convolutional
//!   unit and thresholded region extraction.
//! * [`geometry`] — pinhole projection and multi-view triangulation.
//! * [`fusion`] — robust 3D estimation from unreliable per-camera
//!   detections by finding the largest consistent observation subset.
//! * [`ballistics`] — ball flight prediction with a drag/Magnus ODE and
//!   polynomial initial-state estimation.
//!
//! Everything here is pure computation over caller-supplied data; all IO,
//! file formats and the CLI live in the companion `balltrack` crate. The
//! crate is `no_std` compatible (with `alloc`) when built without the
//! default `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod ballistics;
#[cfg(test)]
pub(crate) mod testutil;
pub mod detect;
pub mod fusion;
pub mod geometry;

pub use geometry::{CameraId, CameraModel, Pixel, PixelObservation, Point3, Vec3};
