//! Batch front end: manifests, run configs, prediction files, and the
//! `augment`, `evaluate` and `ensemble` commands.

mod augment;
mod config;
mod ensemble_cmd;
mod evaluate;
mod manifest;
mod predictions;

use std::io::Write;
use std::path::Path;

pub use augment::{cmd_augment, derangement, AugmentOptions, AugmentReport, Skipped, StepStats};
pub use config::{OnError, PipelineConfig, DEFAULT_MIXUP_ALPHA};
pub use ensemble_cmd::{cmd_ensemble, EnsembleReport};
pub use evaluate::{cmd_evaluate, ClassScore, EvaluateReport};
pub use manifest::{load_manifest, ManifestRecord};
pub use predictions::{
    encode_predictions, format_probability, read_predictions, read_predictions_with_classes, write_predictions,
};

use crate::error::{Error, Result};
use crate::image_core::ImageBuffer;

/// Decodes any supported format. Grayscale sources load as one channel,
/// everything else as RGB (alpha dropped).
pub fn load_image(path: &Path) -> Result<ImageBuffer> {
    let decoded = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    match decoded.color() {
        image::ColorType::L8 | image::ColorType::La8 | image::ColorType::L16 | image::ColorType::La16 => {
            ImageBuffer::new(w, h, 1, decoded.into_luma8().into_raw())
        }
        _ => ImageBuffer::new(w, h, 3, decoded.into_rgb8().into_raw()),
    }
}

pub fn save_png(img: &ImageBuffer, path: &Path) -> Result<()> {
    let color = match img.channels() {
        1 => image::ExtendedColorType::L8,
        _ => image::ExtendedColorType::Rgb8,
    };
    image::save_buffer_with_format(
        path,
        img.pixels(),
        img.width() as u32,
        img.height() as u32,
        color,
        image::ImageFormat::Png,
    )
    .map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `bytes` to a temporary sibling of `path`, then renames it into
/// place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
