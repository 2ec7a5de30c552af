//! Per-class F1 and macro-F1 over a declared class set.
//!
//! Every declared class is scored, including classes that never occur in
//! either truth or predictions; those contribute an F1 of zero. Scores are
//! kept as exact fractions of integer counts and converted to floating point
//! only at the end.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};

use crate::classes::ClassSet;
use crate::error::{Error, Result};

/// `counts[t][p]`: samples of true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        ConfusionMatrix {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let k = rows.len();
        let mut counts = Vec::with_capacity(k * k);
        for row in rows {
            if row.len() != k {
                return Err(Error::LengthMismatch {
                    what: "confusion matrix row length",
                    left: row.len(),
                    right: k,
                });
            }
            counts.extend(row);
        }
        Ok(ConfusionMatrix { k, counts })
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.k + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, t: usize) -> u64 {
        self.counts[t * self.k..(t + 1) * self.k].iter().sum()
    }

    pub fn col_sum(&self, p: usize) -> u64 {
        (0..self.k).map(|t| self.get(t, p)).sum()
    }

    /// Entrywise sum, for combining shards.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.k != self.k {
            return Err(Error::LengthMismatch {
                what: "confusion matrix class counts",
                left: self.k,
                right: other.k,
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    fn record(&mut self, truth: usize, pred: usize) {
        self.counts[truth * self.k + pred] += 1;
    }
}

pub fn confusion_matrix(truth: &[usize], pred: &[usize], classes: &ClassSet) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch {
            what: "truth and prediction lengths",
            left: truth.len(),
            right: pred.len(),
        });
    }
    let k = classes.len();
    let mut cm = ConfusionMatrix::zeros(k);
    for (&t, &p) in truth.iter().zip(pred) {
        for index in [t, p] {
            if index >= k {
                return Err(Error::ClassOutOfRange { index, classes: k });
            }
        }
        cm.record(t, p);
    }
    Ok(cm)
}

/// F1 of class `k` as an exact fraction. Equal to `2PR / (P + R)`, which
/// reduces to `2TP / (2TP + FP + FN)`; zero whenever precision, recall or
/// their sum is undefined or zero.
pub fn class_f1_ratio(cm: &ConfusionMatrix, k: usize) -> Ratio<u64> {
    let tp = cm.get(k, k);
    if tp == 0 {
        return Ratio::from_integer(0);
    }
    let fp = cm.col_sum(k) - tp;
    let fn_ = cm.row_sum(k) - tp;
    Ratio::new(2 * tp, 2 * tp + fp + fn_)
}

pub fn per_class_f1(cm: &ConfusionMatrix) -> Vec<f64> {
    (0..cm.k)
        .map(|k| {
            let r = class_f1_ratio(cm, k);
            *r.numer() as f64 / *r.denom() as f64
        })
        .collect()
}

/// Unweighted mean of the per-class F1 over all declared classes.
pub fn macro_f1(cm: &ConfusionMatrix) -> f64 {
    if cm.k == 0 {
        return 0.0;
    }
    let sum = (0..cm.k).fold(BigRational::zero(), |acc, k| {
        let r = class_f1_ratio(cm, k);
        acc + BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
    });
    let mean = sum / BigInt::from(cm.k);
    mean.to_f64().expect("mean F1 lies in [0, 1]")
}
