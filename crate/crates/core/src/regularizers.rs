//! Training-side regularization math: label smoothing with its
//! cross-entropy, cutout masking, and mixup blending.

use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::classes::ClassSet;
use crate::error::{Error, Result};
use crate::image_core::{quantize, ImageBuffer};
use crate::rng::{index_below, Seed};

const SUM_TOLERANCE: f64 = 1e-9;
const LOG_FLOOR: f64 = 1e-12;

/// Probability vector over a class set.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabel {
    probs: Vec<f64>,
}

impl SoftLabel {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::SoftLabel("empty probability vector".into()));
        }
        if let Some((k, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(Error::SoftLabel(format!("entry {k} is {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::SoftLabel(format!("entries sum to {sum}, not 1")));
        }
        Ok(SoftLabel { probs })
    }

    pub fn one_hot(y: usize, k: usize) -> Result<Self> {
        if y >= k {
            return Err(Error::ClassOutOfRange { index: y, classes: k });
        }
        let mut probs = vec![0.0; k];
        probs[y] = 1.0;
        Ok(SoftLabel { probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::SoftLabel("empty probability vector".into()));
        }
        Ok(SoftLabel {
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingConfig {
    pub epsilon: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig { epsilon: 0.1 }
    }
}

impl SmoothingConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        let cfg = SmoothingConfig { epsilon };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!(
                "smoothing epsilon must be in [0, 1), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// `(1 - eps) * onehot(y) + eps / K`.
pub fn smooth_labels(y: usize, classes: &ClassSet, cfg: SmoothingConfig) -> Result<SoftLabel> {
    cfg.validate()?;
    let k = classes.len();
    if y >= k {
        return Err(Error::ClassOutOfRange { index: y, classes: k });
    }
    let off = cfg.epsilon / k as f64;
    let mut probs = vec![off; k];
    probs[y] = 1.0 - cfg.epsilon + off;
    Ok(SoftLabel { probs })
}

/// `-sum_k target[k] * ln(max(pred[k], 1e-12))`.
pub fn cross_entropy(target: &SoftLabel, pred: &SoftLabel) -> Result<f64> {
    if target.len() != pred.len() {
        return Err(Error::LengthMismatch {
            what: "target and prediction lengths",
            left: target.len(),
            right: pred.len(),
        });
    }
    Ok(-target
        .probs
        .iter()
        .zip(&pred.probs)
        .map(|(t, p)| t * p.max(LOG_FLOOR).ln())
        .sum::<f64>())
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..self.x1).contains(&x) && (self.y0..self.y1).contains(&y)
    }
}

/// Rectangle masked by [`cutout`] for a `width` x `height` image: a
/// `size` x `size` square around a uniformly drawn pixel, clipped to the
/// image. `None` when nothing is masked.
pub fn cutout_region(width: usize, height: usize, size: usize, seed: Seed) -> Option<Rect> {
    if size == 0 || width == 0 || height == 0 {
        return None;
    }
    let mut rng = seed.rng();
    let cx = index_below(&mut rng, width) as isize;
    let cy = index_below(&mut rng, height) as isize;
    let half = (size / 2) as isize;
    let clip = |lo: isize, len: usize| {
        let a = lo.max(0) as usize;
        let b = ((lo + size as isize).max(0) as usize).min(len);
        (a, b)
    };
    let (x0, x1) = clip(cx - half, width);
    let (y0, y1) = clip(cy - half, height);
    (x0 < x1 && y0 < y1).then_some(Rect { x0, y0, x1, y1 })
}

pub fn cutout(img: &ImageBuffer, size: usize, fill: u8, seed: Seed) -> ImageBuffer {
    let mut out = img.clone();
    if let Some(r) = cutout_region(img.width(), img.height(), size, seed) {
        for y in r.y0..r.y1 {
            for x in r.x0..r.x1 {
                for c in 0..img.channels() {
                    out.set(x, y, c, fill);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixupDraw {
    pub lambda: f64,
    pub alpha: f64,
}

/// Draws the mixing weight from `Beta(alpha, alpha)`.
pub fn sample_mixup_lambda(alpha: f64, seed: Seed) -> Result<MixupDraw> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "mixup alpha must be finite and positive, got {alpha}"
        )));
    }
    let beta = Beta::new(alpha, alpha).map_err(|e| Error::InvalidParameter(format!("mixup alpha {alpha}: {e}")))?;
    let lambda: f64 = beta.sample(&mut seed.rng());
    Ok(MixupDraw {
        lambda: lambda.clamp(0.0, 1.0),
        alpha,
    })
}

/// `lambda * a + (1 - lambda) * b` for both images and labels. Pixels are
/// blended in floating point and rounded once.
pub fn mixup_blend(
    xi: &ImageBuffer,
    yi: &SoftLabel,
    xj: &ImageBuffer,
    yj: &SoftLabel,
    lambda: f64,
) -> Result<(ImageBuffer, SoftLabel)> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "mixup lambda must be in [0, 1], got {lambda}"
        )));
    }
    if !xi.same_shape(xj) {
        return Err(Error::Dimension(format!(
            "cannot blend {}x{}x{} with {}x{}x{}",
            xi.width(),
            xi.height(),
            xi.channels(),
            xj.width(),
            xj.height(),
            xj.channels()
        )));
    }
    if yi.len() != yj.len() {
        return Err(Error::LengthMismatch {
            what: "mixup label lengths",
            left: yi.len(),
            right: yj.len(),
        });
    }
    let rest = 1.0 - lambda;
    let pixels = xi
        .pixels()
        .iter()
        .zip(xj.pixels())
        .map(|(&a, &b)| quantize(lambda * a as f64 + rest * b as f64))
        .collect();
    let probs = yi
        .probs
        .iter()
        .zip(&yj.probs)
        .map(|(a, b)| lambda * a + rest * b)
        .collect();
    Ok((xi.with_pixels(pixels), SoftLabel { probs }))
}
