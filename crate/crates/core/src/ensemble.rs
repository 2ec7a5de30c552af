//! Weighted averaging of classifier probability matrices.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::regularizers::argmax;

/// Rows further than this from summing to 1 are rejected.
pub const ROW_SUM_TOLERANCE: f64 = 1e-3;

/// `N x K` row-stochastic matrix keyed by sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    ids: Vec<String>,
    k: usize,
    probs: Vec<f64>,
}

impl PredictionMatrix {
    /// Builds a matrix without normalizing; see [`validate_predictions`].
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>, k: usize) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::LengthMismatch {
                what: "prediction ids and rows",
                left: ids.len(),
                right: rows.len(),
            });
        }
        let mut probs = Vec::with_capacity(rows.len() * k);
        for (id, row) in ids.iter().zip(rows) {
            if row.len() != k {
                return Err(Error::Predictions(format!(
                    "row {id:?} has {} entries, expected {k}",
                    row.len()
                )));
            }
            probs.extend(row);
        }
        Ok(PredictionMatrix { ids, k, probs })
    }

    pub fn empty(k: usize) -> Self {
        PredictionMatrix {
            ids: Vec::new(),
            k,
            probs: Vec::new(),
        }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.probs.chunks_exact(self.k.max(1)))
    }

    fn id_index(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
    }
}

/// Rejects negative entries, duplicate ids, and rows whose sum is off by more
/// than [`ROW_SUM_TOLERANCE`]; rescales the remaining rows to sum to 1.
pub fn validate_predictions(pm: PredictionMatrix) -> Result<PredictionMatrix> {
    let mut seen = HashSet::with_capacity(pm.ids.len());
    for id in &pm.ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::Predictions(format!("duplicate id {id:?}")));
        }
    }
    let PredictionMatrix { ids, k, mut probs } = pm;
    if k == 0 {
        return Ok(PredictionMatrix { ids, k, probs });
    }
    for (id, row) in ids.iter().zip(probs.chunks_exact_mut(k)) {
        if let Some((c, p)) = row.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(Error::Predictions(format!(
                "row {id:?} class {c}: invalid probability {p}"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::Predictions(format!(
                "row {id:?} sums to {sum}, outside 1 +/- {ROW_SUM_TOLERANCE}"
            )));
        }
        if sum != 1.0 {
            row.iter_mut().for_each(|p| *p /= sum);
        }
    }
    Ok(PredictionMatrix { ids, k, probs })
}

/// Member weights, normalized to sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    weights: Vec<f64>,
}

impl EnsembleSpec {
    pub fn uniform(members: usize) -> Result<Self> {
        if members == 0 {
            return Err(Error::InvalidParameter("an ensemble needs at least one member".into()));
        }
        Ok(EnsembleSpec {
            weights: vec![1.0 / members as f64; members],
        })
    }

    /// Normalizes raw non-negative weights; at least one must be positive.
    pub fn from_weights(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidParameter("an ensemble needs at least one member".into()));
        }
        if let Some(w) = raw.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ensemble weights must be finite and non-negative, got {w}"
            )));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("ensemble weights are all zero".into()));
        }
        Ok(EnsembleSpec {
            weights: raw.iter().map(|w| w / total).collect(),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn members(&self) -> usize {
        self.weights.len()
    }
}

/// `out[i][k] = sum_m w_m * probs_m[i][k]`, aligning members by id. Rows come
/// out in the first member's order.
pub fn weighted_average(matrices: &[PredictionMatrix], spec: &EnsembleSpec) -> Result<PredictionMatrix> {
    if matrices.len() != spec.members() {
        return Err(Error::LengthMismatch {
            what: "ensemble members and weights",
            left: matrices.len(),
            right: spec.members(),
        });
    }
    let first = &matrices[0];
    let k = first.k;
    let mut probs = vec![0.0; first.probs.len()];
    for (m, (pm, &w)) in matrices.iter().zip(&spec.weights).enumerate() {
        if pm.k != k {
            return Err(Error::Predictions(format!(
                "member {m} has {} classes, member 0 has {k}",
                pm.k
            )));
        }
        check_same_ids(first, pm, m)?;
        let index = pm.id_index();
        for (i, id) in first.ids.iter().enumerate() {
            let row = pm.row(index[id.as_str()]);
            for (acc, p) in probs[i * k..(i + 1) * k].iter_mut().zip(row) {
                *acc += w * p;
            }
        }
    }
    Ok(PredictionMatrix {
        ids: first.ids.clone(),
        k,
        probs,
    })
}

fn check_same_ids(reference: &PredictionMatrix, other: &PredictionMatrix, member: usize) -> Result<()> {
    let a: HashSet<&str> = reference.ids.iter().map(String::as_str).collect();
    let b: HashSet<&str> = other.ids.iter().map(String::as_str).collect();
    if a == b && reference.len() == other.len() {
        return Ok(());
    }
    let mut missing: Vec<&str> = a.difference(&b).copied().collect();
    let mut extra: Vec<&str> = b.difference(&a).copied().collect();
    missing.sort_unstable();
    extra.sort_unstable();
    Err(Error::Predictions(format!(
        "member {member} ids differ from member 0: missing {}, unexpected {}",
        preview(&missing),
        preview(&extra)
    )))
}

/// First ten items, comma-joined, with a count of the rest.
pub(crate) fn preview(items: &[&str]) -> String {
    if items.is_empty() {
        return "none".to_owned();
    }
    let shown = items.iter().take(10).copied().collect::<Vec<_>>().join(", ");
    if items.len() > 10 {
        format!("[{shown}, ... {} more]", items.len() - 10)
    } else {
        format!("[{shown}]")
    }
}

/// Most probable class per row; ties go to the lowest class index.
pub fn argmax_labels(pm: &PredictionMatrix) -> Vec<(String, usize)> {
    pm.rows().map(|(id, row)| (id.to_owned(), argmax(row))).collect()
}
