//! Declarative augmentation steps and their seeded composition.
//!
//! Step `i` applied to sample `id` draws from its own stream derived from
//! `(seed, id, i)`: first a uniform to decide whether the step fires, then
//! the step's parameters, then a sub-seed for the operation itself.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{
    add_gaussian_noise, adjust_brightness, gaussian_blur, horizontal_flip, random_crop, rotate, to_grayscale,
    ImageBuffer,
};
use crate::clahe::{apply_clahe, ClaheConfig, DEFAULT_BINS};
use crate::error::{Error, Result};
use crate::regularizers::cutout;
use crate::rng::{derive_stream, uniform_in, unit_f64, Seed};

// Parameter defaults are conventional choices, not tuned values.
fn default_probability() -> f64 {
    0.5
}
fn default_max_degrees() -> f64 {
    15.0
}
fn default_min_factor() -> f64 {
    0.7
}
fn default_max_factor() -> f64 {
    1.3
}
fn default_max_blur() -> f64 {
    1.5
}
fn default_max_noise() -> f64 {
    10.0
}
fn default_cutout_size() -> usize {
    16
}
fn default_grid() -> usize {
    8
}
fn default_clip_factor() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AugmentKind {
    /// Random `width` x `height` window.
    Crop {
        width: usize,
        height: usize,
    },
    /// Angle uniform in `[-max_degrees, max_degrees]`.
    Rotate {
        #[serde(default = "default_max_degrees")]
        max_degrees: f64,
        #[serde(default)]
        fill: u8,
    },
    Hflip,
    Brightness {
        #[serde(default = "default_min_factor")]
        min_factor: f64,
        #[serde(default = "default_max_factor")]
        max_factor: f64,
    },
    Blur {
        #[serde(default)]
        min_sigma: f64,
        #[serde(default = "default_max_blur")]
        max_sigma: f64,
    },
    Noise {
        #[serde(default)]
        min_sigma: f64,
        #[serde(default = "default_max_noise")]
        max_sigma: f64,
    },
    Grayscale,
    Cutout {
        #[serde(default = "default_cutout_size")]
        size: usize,
        #[serde(default)]
        fill: u8,
    },
    Clahe {
        #[serde(default = "default_grid")]
        grid_w: usize,
        #[serde(default = "default_grid")]
        grid_h: usize,
        #[serde(default = "default_clip_factor")]
        clip_factor: f64,
    },
}

impl AugmentKind {
    pub fn name(&self) -> &'static str {
        match self {
            AugmentKind::Crop { .. } => "crop",
            AugmentKind::Rotate { .. } => "rotate",
            AugmentKind::Hflip => "hflip",
            AugmentKind::Brightness { .. } => "brightness",
            AugmentKind::Blur { .. } => "blur",
            AugmentKind::Noise { .. } => "noise",
            AugmentKind::Grayscale => "grayscale",
            AugmentKind::Cutout { .. } => "cutout",
            AugmentKind::Clahe { .. } => "clahe",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentStep {
    #[serde(default = "default_probability")]
    pub probability: f64,
    #[serde(flatten)]
    pub kind: AugmentKind,
}

fn check_range(step: &str, what: &str, lo: f64, hi: f64, min: f64, max: f64) -> Result<()> {
    let ok = lo.is_finite() && hi.is_finite() && min <= lo && lo <= hi && hi <= max;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{step}: {what} range [{lo}, {hi}] must satisfy {min} <= lo <= hi <= {max}"
        )))
    }
}

impl AugmentStep {
    pub fn new(kind: AugmentKind, probability: f64) -> Result<Self> {
        let step = AugmentStep { probability, kind };
        step.validate()?;
        Ok(step)
    }

    pub fn always(kind: AugmentKind) -> Self {
        AugmentStep { probability: 1.0, kind }
    }

    pub fn validate(&self) -> Result<()> {
        let name = self.kind.name();
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::InvalidParameter(format!(
                "{name}: probability must be in [0, 1], got {}",
                self.probability
            )));
        }
        match self.kind {
            AugmentKind::Crop { width, height } => {
                if width == 0 || height == 0 {
                    return Err(Error::InvalidParameter(format!(
                        "crop: size must be at least 1x1, got {width}x{height}"
                    )));
                }
            }
            AugmentKind::Rotate { max_degrees, .. } => {
                check_range(name, "max_degrees", 0.0, max_degrees, 0.0, 180.0)?;
            }
            AugmentKind::Brightness { min_factor, max_factor } => {
                check_range(name, "factor", min_factor, max_factor, 0.0, 10.0)?
            }
            AugmentKind::Blur { min_sigma, max_sigma } => check_range(name, "sigma", min_sigma, max_sigma, 0.0, 20.0)?,
            AugmentKind::Noise { min_sigma, max_sigma } => {
                check_range(name, "sigma", min_sigma, max_sigma, 0.0, 255.0)?
            }
            AugmentKind::Clahe {
                grid_w,
                grid_h,
                clip_factor,
            } => ClaheConfig {
                grid_w,
                grid_h,
                clip_factor,
                bins: DEFAULT_BINS,
            }
            .validate()?,
            AugmentKind::Hflip | AugmentKind::Grayscale | AugmentKind::Cutout { .. } => {}
        }
        Ok(())
    }

    /// Runs the step with parameters and sub-seed drawn from `rng`.
    fn run<R: RngCore>(&self, img: &ImageBuffer, rng: &mut R) -> Result<ImageBuffer> {
        match self.kind {
            AugmentKind::Crop { width, height } => random_crop(img, width, height, Seed(rng.next_u64())),
            AugmentKind::Rotate { max_degrees, fill } => rotate(img, uniform_in(rng, -max_degrees, max_degrees), fill),
            AugmentKind::Hflip => Ok(horizontal_flip(img)),
            AugmentKind::Brightness { min_factor, max_factor } => {
                adjust_brightness(img, uniform_in(rng, min_factor, max_factor))
            }
            AugmentKind::Blur { min_sigma, max_sigma } => gaussian_blur(img, uniform_in(rng, min_sigma, max_sigma)),
            AugmentKind::Noise { min_sigma, max_sigma } => {
                let sigma = uniform_in(rng, min_sigma, max_sigma);
                add_gaussian_noise(img, sigma, Seed(rng.next_u64()))
            }
            AugmentKind::Grayscale => Ok(to_grayscale(img)),
            AugmentKind::Cutout { size, fill } => Ok(cutout(img, size, fill, Seed(rng.next_u64()))),
            AugmentKind::Clahe {
                grid_w,
                grid_h,
                clip_factor,
            } => apply_clahe(
                img,
                &ClaheConfig {
                    grid_w,
                    grid_h,
                    clip_factor,
                    bins: DEFAULT_BINS,
                },
            ),
        }
    }
}

pub fn apply_pipeline(img: &ImageBuffer, steps: &[AugmentStep], seed: Seed, sample_id: &str) -> Result<ImageBuffer> {
    apply_pipeline_traced(img, steps, seed, sample_id).map(|(out, _)| out)
}

/// Like [`apply_pipeline`], also reporting which steps fired.
pub fn apply_pipeline_traced(
    img: &ImageBuffer,
    steps: &[AugmentStep],
    seed: Seed,
    sample_id: &str,
) -> Result<(ImageBuffer, Vec<bool>)> {
    let mut current = img.clone();
    let mut fired = Vec::with_capacity(steps.len());
    for (i, step) in steps.iter().enumerate() {
        step.validate()?;
        let mut rng = derive_stream(seed, sample_id, i as u64);
        let fire = unit_f64(&mut rng) < step.probability;
        if fire {
            current = step.run(&current, &mut rng)?;
        }
        fired.push(fire);
    }
    Ok((current, fired))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ImageBuffer {
        ImageBuffer::from_fn(24, 18, 3, |x, y, c| (x * 10 + y * 3 + c * 50) as u8).unwrap()
    }

    fn every_kind() -> Vec<AugmentKind> {
        vec![
            AugmentKind::Crop { width: 20, height: 16 },
            AugmentKind::Rotate {
                max_degrees: 15.0,
                fill: 0,
            },
            AugmentKind::Hflip,
            AugmentKind::Brightness {
                min_factor: 0.7,
                max_factor: 1.3,
            },
            AugmentKind::Blur {
                min_sigma: 0.0,
                max_sigma: 1.5,
            },
            AugmentKind::Noise {
                min_sigma: 0.0,
                max_sigma: 10.0,
            },
            AugmentKind::Grayscale,
            AugmentKind::Cutout { size: 6, fill: 0 },
            AugmentKind::Clahe {
                grid_w: 4,
                grid_h: 3,
                clip_factor: 4.0,
            },
        ]
    }

    #[test]
    fn zero_probability_is_identity() {
        let steps: Vec<_> = every_kind()
            .into_iter()
            .map(|k| AugmentStep::new(k, 0.0).unwrap())
            .collect();
        let img = sample();
        let (out, fired) = apply_pipeline_traced(&img, &steps, Seed(1), "a").unwrap();
        assert_eq!(out, img);
        assert!(fired.iter().all(|f| !f));
    }

    #[test]
    fn certain_hflip_matches_op() {
        let img = sample();
        let steps = [AugmentStep::always(AugmentKind::Hflip)];
        assert_eq!(
            apply_pipeline(&img, &steps, Seed(3), "x").unwrap(),
            horizontal_flip(&img)
        );
    }

    #[test]
    fn per_sample_streams_ignore_batch_context() {
        let steps: Vec<_> = every_kind()
            .into_iter()
            .map(|k| AugmentStep::new(k, 0.7).unwrap())
            .collect();
        let img = sample();
        let alone = apply_pipeline(&img, &steps, Seed(99), "img_3").unwrap();
        // processing other samples first must not perturb img_3
        for other in ["img_1", "img_2"] {
            apply_pipeline(&img, &steps, Seed(99), other).unwrap();
        }
        assert_eq!(apply_pipeline(&img, &steps, Seed(99), "img_3").unwrap(), alone);
    }

    #[test]
    fn fire_rate_tracks_probability() {
        let steps = [AugmentStep::new(AugmentKind::Hflip, 0.3).unwrap()];
        let img = ImageBuffer::filled(2, 2, 1, 0).unwrap();
        let n = 4000;
        let fired = (0..n)
            .filter(|i| {
                apply_pipeline_traced(&img, &steps, Seed(5), &format!("s{i}"))
                    .unwrap()
                    .1[0]
            })
            .count();
        let rate = fired as f64 / n as f64;
        assert!((rate - 0.3).abs() < 0.03, "rate {rate}");
    }

    #[test]
    fn validation_rejects_out_of_range() {
        let bad = [
            (AugmentKind::Hflip, 1.5),
            (AugmentKind::Crop { width: 0, height: 3 }, 1.0),
            (
                AugmentKind::Rotate {
                    max_degrees: 200.0,
                    fill: 0,
                },
                1.0,
            ),
            (
                AugmentKind::Brightness {
                    min_factor: 1.2,
                    max_factor: 0.8,
                },
                1.0,
            ),
            (
                AugmentKind::Blur {
                    min_sigma: -1.0,
                    max_sigma: 1.0,
                },
                1.0,
            ),
            (
                AugmentKind::Noise {
                    min_sigma: 0.0,
                    max_sigma: f64::NAN,
                },
                1.0,
            ),
            (
                AugmentKind::Clahe {
                    grid_w: 0,
                    grid_h: 8,
                    clip_factor: 4.0,
                },
                1.0,
            ),
        ];
        for (kind, p) in bad {
            assert!(AugmentStep::new(kind.clone(), p).is_err(), "{kind:?}");
        }
    }

    #[test]
    fn crop_larger_than_image_propagates() {
        let steps = [AugmentStep::always(AugmentKind::Crop { width: 100, height: 2 })];
        assert!(matches!(
            apply_pipeline(&sample(), &steps, Seed(0), "a"),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn steps_parse_from_toml() {
        #[derive(Deserialize)]
        struct Doc {
            steps: Vec<AugmentStep>,
        }
        let doc: Doc = toml::from_str(
            r#"
            [[steps]]
            kind = "hflip"

            [[steps]]
            kind = "rotate"
            probability = 0.25
            max_degrees = 10.0

            [[steps]]
            kind = "clahe"
            probability = 1.0
            clip_factor = 2.0
            "#,
        )
        .unwrap();
        assert_eq!(
            doc.steps[0],
            AugmentStep {
                probability: 0.5,
                kind: AugmentKind::Hflip
            }
        );
        assert_eq!(
            doc.steps[1].kind,
            AugmentKind::Rotate {
                max_degrees: 10.0,
                fill: 0
            }
        );
        assert_eq!(
            doc.steps[2].kind,
            AugmentKind::Clahe {
                grid_w: 8,
                grid_h: 8,
                clip_factor: 2.0
            }
        );
    }
}
