//! The `evaluate` command: macro-F1 of a prediction file against a labelled
//! manifest.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::classes::ClassSet;
use crate::ensemble::{argmax_labels, preview};
use crate::error::{Error, Result};
use crate::metrics::{confusion_matrix, macro_f1, per_class_f1};

use super::manifest::load_manifest;
use super::predictions::read_predictions;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScore {
    pub class: String,
    pub support: u64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluateReport {
    pub samples: usize,
    pub per_class: Vec<ClassScore>,
    pub macro_f1: f64,
}

impl fmt::Display for EvaluateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.per_class.iter().map(|c| c.class.len()).max().unwrap_or(5).max(5);
        writeln!(f, "{:<width$}  {:>8}  {:>8}", "class", "support", "f1")?;
        for c in &self.per_class {
            writeln!(f, "{:<width$}  {:>8}  {:.6}", c.class, c.support, c.f1)?;
        }
        writeln!(f, "samples: {}", self.samples)?;
        write!(f, "macro-F1: {:.6}", self.macro_f1)
    }
}

pub fn cmd_evaluate(pred_path: &Path, truth_manifest: &Path, classes: &ClassSet) -> Result<EvaluateReport> {
    let predictions = read_predictions(pred_path, classes)?;
    let records = load_manifest(truth_manifest)?;

    let unlabeled: Vec<&str> = records
        .iter()
        .filter(|r| r.label.is_none())
        .map(|r| r.id.as_str())
        .collect();
    if !unlabeled.is_empty() {
        return Err(Error::Manifest(format!(
            "{}: rows without a label: {}",
            truth_manifest.display(),
            preview(&unlabeled)
        )));
    }

    let predicted: HashMap<String, usize> = argmax_labels(&predictions).into_iter().collect();
    let mut missing: Vec<&str> = records
        .iter()
        .filter(|r| !predicted.contains_key(&r.id))
        .map(|r| r.id.as_str())
        .collect();
    let truth_ids: HashMap<&str, ()> = records.iter().map(|r| (r.id.as_str(), ())).collect();
    let mut extra: Vec<&str> = predictions
        .ids()
        .iter()
        .map(String::as_str)
        .filter(|id| !truth_ids.contains_key(id))
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        missing.sort_unstable();
        extra.sort_unstable();
        return Err(Error::Predictions(format!(
            "id sets differ: missing from predictions {}, not in truth {}",
            preview(&missing),
            preview(&extra)
        )));
    }

    let mut truth = Vec::with_capacity(records.len());
    let mut pred = Vec::with_capacity(records.len());
    for r in &records {
        let name = r.label.as_deref().unwrap_or_default();
        let t = classes.index_of(name).ok_or_else(|| {
            Error::Manifest(format!(
                "line {}: label {name:?} of {:?} is not in the class set",
                r.line, r.id
            ))
        })?;
        truth.push(t);
        pred.push(predicted[&r.id]);
    }

    let cm = confusion_matrix(&truth, &pred, classes)?;
    let per_class = per_class_f1(&cm)
        .into_iter()
        .enumerate()
        .map(|(k, f1)| ClassScore {
            class: classes.name(k).to_owned(),
            support: cm.row_sum(k),
            f1,
        })
        .collect();
    Ok(EvaluateReport {
        samples: records.len(),
        per_class,
        macro_f1: macro_f1(&cm),
    })
}
