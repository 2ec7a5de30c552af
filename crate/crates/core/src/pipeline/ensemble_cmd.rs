//! The `ensemble` command: average several prediction files into one.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::ensemble::{weighted_average, EnsembleSpec};
use crate::error::{Error, Result};

use super::predictions::{read_predictions, read_predictions_with_classes, write_predictions};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleReport {
    pub members: Vec<PathBuf>,
    pub weights: Vec<f64>,
    pub samples: usize,
    pub classes: usize,
    pub output: PathBuf,
}

impl fmt::Display for EnsembleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "members: {}", self.members.len())?;
        for (path, w) in self.members.iter().zip(&self.weights) {
            writeln!(f, "  {w:.6}  {}", path.display())?;
        }
        write!(
            f,
            "wrote {} rows x {} classes to {}",
            self.samples,
            self.classes,
            self.output.display()
        )
    }
}

/// Class columns come from the first file; every other file must carry the
/// same class set. Raw weights are normalized; `None` means uniform.
pub fn cmd_ensemble(pred_paths: &[PathBuf], weights: Option<&[f64]>, out_path: &Path) -> Result<EnsembleReport> {
    let Some((first, rest)) = pred_paths.split_first() else {
        return Err(Error::InvalidParameter(
            "ensemble needs at least one prediction file".into(),
        ));
    };
    let spec = match weights {
        Some(w) if w.len() != pred_paths.len() => {
            return Err(Error::InvalidParameter(format!(
                "{} weights given for {} prediction files",
                w.len(),
                pred_paths.len()
            )))
        }
        Some(w) => EnsembleSpec::from_weights(w)?,
        None => EnsembleSpec::uniform(pred_paths.len())?,
    };

    let (classes, head) = read_predictions_with_classes(first)?;
    let mut members = vec![head];
    for path in rest {
        members.push(read_predictions(path, &classes)?);
    }
    let combined = weighted_average(&members, &spec)?;
    write_predictions(&combined, &classes, out_path)?;
    Ok(EnsembleReport {
        members: pred_paths.to_vec(),
        weights: spec.weights().to_vec(),
        samples: combined.len(),
        classes: classes.len(),
        output: out_path.to_path_buf(),
    })
}
