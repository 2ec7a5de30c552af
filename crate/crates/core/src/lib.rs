//! Preprocessing, regularization and evaluation tooling for camera-trap
//! image classifiers.
//!
//! The classifier itself is out of scope. This crate covers what surrounds
//! it: seeded augmentation (including CLAHE), label smoothing, cutout and
//! mixup, probability ensembling, and macro-F1 scoring, plus the batch
//! commands behind the `trapforge` binary.

pub mod clahe;
pub mod classes;
pub mod ensemble;
pub mod error;
pub mod image_core;
pub mod metrics;
pub mod pipeline;
pub mod regularizers;
pub mod rng;

pub use classes::ClassSet;
pub use error::{Error, Result};
pub use image_core::ImageBuffer;
pub use rng::Seed;
