//! The `augment` command.
//!
//! Output layout under `out_dir`:
//!
//! ```text
//! images/<id>.png          augmented sample
//! labels.csv               smoothed soft labels of labelled samples
//! mixup/<id>__<partner>.png
//! mixup/labels.csv         blended soft labels
//! mixup/pairs.csv          id, first, second, lambda
//! report.json
//! ```
//!
//! Every file is a pure function of the manifest, the images, the config and
//! the seed. The worker count only changes how fast it gets there.

use std::borrow::Cow;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::PredictionMatrix;
use crate::error::{Error, Result};
use crate::image_core::{apply_pipeline_traced, to_grayscale, ImageBuffer};
use crate::regularizers::{mixup_blend, sample_mixup_lambda, smooth_labels, SoftLabel};
use crate::rng::{derive_stream, index_below, Seed};

use super::config::{OnError, PipelineConfig};
use super::manifest::{load_manifest, ManifestRecord};
use super::predictions::{encode_predictions, format_probability};
use super::{load_image, save_png, write_atomic};

/// Stream step index reserved for run-level draws (pairing, mixing weights).
const MIXUP_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Default)]
pub struct AugmentOptions {
    /// Overrides the config seed.
    pub seed: Option<u64>,
    /// Worker threads; 0 lets the thread pool decide.
    pub workers: usize,
    /// Abort on unreadable images even if the config says `skip`.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepStats {
    pub kind: String,
    pub probability: f64,
    pub fired: usize,
    pub fire_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentReport {
    pub seed: u64,
    pub records: usize,
    pub written: usize,
    pub skipped: Vec<Skipped>,
    pub steps: Vec<StepStats>,
    pub soft_labels: usize,
    pub smoothing_epsilon: f64,
    pub mixup_samples: usize,
    pub mixup_alpha: Option<f64>,
}

impl fmt::Display for AugmentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed: {}", self.seed)?;
        writeln!(
            f,
            "records: {}  written: {}  skipped: {}",
            self.records,
            self.written,
            self.skipped.len()
        )?;
        for s in &self.skipped {
            writeln!(f, "  skipped {}: {}", s.id, s.reason)?;
        }
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(
                f,
                "step {i} {:<10} p={:<5} fired {:>6} ({:.3})",
                s.kind, s.probability, s.fired, s.fire_rate
            )?;
        }
        writeln!(
            f,
            "soft labels: {} (epsilon {})",
            self.soft_labels, self.smoothing_epsilon
        )?;
        match self.mixup_alpha {
            Some(alpha) => write!(f, "mixup samples: {} (alpha {alpha})", self.mixup_samples),
            None => write!(f, "mixup: off"),
        }
    }
}

struct Processed {
    record: usize,
    fired: Vec<bool>,
    image: Option<ImageBuffer>,
}

enum Outcome {
    Done(Processed),
    Skipped(Skipped),
}

/// Ids become file names, so they may not contain path syntax.
fn check_id(id: &str) -> Result<()> {
    let bad = id.is_empty() || id == "." || id == ".." || id.contains(['/', '\\', '\0']);
    if bad {
        return Err(Error::Manifest(format!("id {id:?} cannot be used as a file name")));
    }
    Ok(())
}

pub fn cmd_augment(
    manifest_path: &Path,
    config: &PipelineConfig,
    out_dir: &Path,
    opts: &AugmentOptions,
) -> Result<AugmentReport> {
    config.validate()?;
    let seed = Seed(
        opts.seed
            .or(config.seed)
            .ok_or_else(|| Error::Config("no seed given: set `seed` in the config or pass --seed".into()))?,
    );
    let records = load_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut labels = Vec::with_capacity(records.len());
    for r in &records {
        check_id(&r.id)?;
        let label = match &r.label {
            None => None,
            Some(name) => Some(config.class_set.index_of(name).ok_or_else(|| {
                Error::Manifest(format!(
                    "line {}: label {name:?} of {:?} is not in the class set",
                    r.line, r.id
                ))
            })?),
        };
        labels.push(label);
    }
    if config.mixup_enabled {
        let unlabeled: Vec<&str> = records
            .iter()
            .zip(&labels)
            .filter(|(_, l)| l.is_none())
            .map(|(r, _)| r.id.as_str())
            .collect();
        if !unlabeled.is_empty() {
            return Err(Error::Manifest(format!(
                "mixup needs labels; unlabeled ids: {}",
                crate::ensemble::preview(&unlabeled)
            )));
        }
    }

    let images_dir = out_dir.join("images");
    std::fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;

    let abort = opts.strict || config.on_error == OnError::Abort;
    let keep_images = config.mixup_enabled;
    let process = |(i, record): (usize, &ManifestRecord)| -> Result<Outcome> {
        let img = match load_image(&record.resolve(base)) {
            Ok(img) => img,
            Err(e) if !abort => {
                return Ok(Outcome::Skipped(Skipped {
                    id: record.id.clone(),
                    reason: e.to_string(),
                }))
            }
            Err(e) => return Err(e),
        };
        let (out, fired) = apply_pipeline_traced(&img, &config.steps, seed, &record.id)?;
        save_png(&out, &images_dir.join(format!("{}.png", record.id)))?;
        Ok(Outcome::Done(Processed {
            record: i,
            fired,
            image: keep_images.then_some(out),
        }))
    };
    let outcomes: Vec<Result<Outcome>> =
        run_parallel(opts.workers, || records.par_iter().enumerate().map(process).collect())?;

    let mut done = Vec::new();
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome? {
            Outcome::Done(p) => done.push(p),
            Outcome::Skipped(s) => skipped.push(s),
        }
    }

    let mut steps: Vec<StepStats> = config
        .steps
        .iter()
        .map(|s| StepStats {
            kind: s.kind.name().to_owned(),
            probability: s.probability,
            fired: 0,
            fire_rate: 0.0,
        })
        .collect();
    for p in &done {
        for (stat, &f) in steps.iter_mut().zip(&p.fired) {
            stat.fired += usize::from(f);
        }
    }
    for stat in &mut steps {
        stat.fire_rate = if done.is_empty() {
            0.0
        } else {
            stat.fired as f64 / done.len() as f64
        };
    }

    let smoothed: Vec<Option<SoftLabel>> = labels
        .iter()
        .map(|l| {
            l.map(|y| smooth_labels(y, &config.class_set, config.smoothing))
                .transpose()
        })
        .collect::<Result<_>>()?;
    let labelled: Vec<&Processed> = done.iter().filter(|p| smoothed[p.record].is_some()).collect();
    if !labelled.is_empty() {
        let pm = PredictionMatrix::new(
            labelled.iter().map(|p| records[p.record].id.clone()).collect(),
            labelled
                .iter()
                .map(|p| {
                    smoothed[p.record]
                        .as_ref()
                        .map(|s| s.probs().to_vec())
                        .unwrap_or_default()
                })
                .collect(),
            config.class_set.len(),
        )?;
        write_atomic(
            &out_dir.join("labels.csv"),
            &encode_predictions(&pm, &config.class_set)?,
        )?;
    }

    let mixup_samples = if config.mixup_enabled {
        write_mixup(&records, &done, &smoothed, config, seed, out_dir, opts.workers)?
    } else {
        0
    };

    let report = AugmentReport {
        seed: seed.0,
        records: records.len(),
        written: done.len(),
        skipped,
        steps,
        soft_labels: labelled.len(),
        smoothing_epsilon: config.smoothing.epsilon,
        mixup_samples,
        mixup_alpha: config.mixup_enabled.then_some(config.mixup_alpha),
    };
    let json = serde_json::to_vec_pretty(&report).map_err(|e| Error::Config(format!("serializing report: {e}")))?;
    write_atomic(&out_dir.join("report.json"), &json)?;
    Ok(report)
}

fn run_parallel<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("building worker pool: {e}")))?;
    Ok(pool.install(job))
}

/// Uniformly random permutation of `0..n` with no fixed points (n >= 2).
pub fn derangement(n: usize, seed: Seed) -> Vec<usize> {
    assert!(n >= 2, "a derangement needs at least two elements");
    let mut rng = derive_stream(seed, "", MIXUP_STREAM);
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        for i in (1..n).rev() {
            let j = index_below(&mut rng, i + 1);
            perm.swap(i, j);
        }
        if perm.iter().enumerate().all(|(i, &p)| i != p) {
            return perm;
        }
    }
}

/// Night-time infrared frames are often single channel; lift them to RGB so
/// they can mix with colour frames.
fn lift_channels<'a>(x: &'a ImageBuffer, other: &ImageBuffer) -> Cow<'a, ImageBuffer> {
    if x.channels() == 1 && other.channels() == 3 {
        Cow::Owned(to_grayscale(x))
    } else {
        Cow::Borrowed(x)
    }
}

fn write_mixup(
    records: &[ManifestRecord],
    done: &[Processed],
    smoothed: &[Option<SoftLabel>],
    config: &PipelineConfig,
    seed: Seed,
    out_dir: &Path,
    workers: usize,
) -> Result<usize> {
    if done.len() < 2 {
        return Err(Error::Manifest(format!(
            "mixup needs at least two samples, {} available",
            done.len()
        )));
    }
    let mix_dir = out_dir.join("mixup");
    std::fs::create_dir_all(&mix_dir).map_err(|e| Error::io(&mix_dir, e))?;
    let partner = derangement(done.len(), seed);

    let blend = |(a, &b): (usize, &usize)| -> Result<(String, String, String, f64, SoftLabel)> {
        let (pa, pb) = (&done[a], &done[b]);
        let (ra, rb) = (&records[pa.record], &records[pb.record]);
        let lambda_seed = Seed(rand::RngCore::next_u64(&mut derive_stream(seed, &ra.id, MIXUP_STREAM)));
        let lambda = sample_mixup_lambda(config.mixup_alpha, lambda_seed)?.lambda;
        let (xa, xb) = (pa.image.as_ref(), pb.image.as_ref());
        let (ya, yb) = (smoothed[pa.record].as_ref(), smoothed[pb.record].as_ref());
        let (Some(xa), Some(xb), Some(ya), Some(yb)) = (xa, xb, ya, yb) else {
            unreachable!("mixup inputs are retained and labelled");
        };
        let (xa, xb) = (lift_channels(xa, xb), lift_channels(xb, xa));
        let (img, label) = mixup_blend(&xa, ya, &xb, yb, lambda)
            .map_err(|e| Error::Dimension(format!("mixing {:?} with {:?}: {e}", ra.id, rb.id)))?;
        let mix_id = format!("{}__{}", ra.id, rb.id);
        save_png(&img, &mix_dir.join(format!("{mix_id}.png")))?;
        Ok((mix_id, ra.id.clone(), rb.id.clone(), lambda, label))
    };
    let mixed: Vec<Result<_>> = run_parallel(workers, || partner.par_iter().enumerate().map(blend).collect())?;
    let mixed: Vec<_> = mixed.into_iter().collect::<Result<_>>()?;

    let pm = PredictionMatrix::new(
        mixed.iter().map(|m| m.0.clone()).collect(),
        mixed.iter().map(|m| m.4.probs().to_vec()).collect(),
        config.class_set.len(),
    )?;
    write_atomic(
        &mix_dir.join("labels.csv"),
        &encode_predictions(&pm, &config.class_set)?,
    )?;

    let mut pairs = csv::Writer::from_writer(Vec::new());
    let pairs_path: PathBuf = mix_dir.join("pairs.csv");
    pairs
        .write_record(["id", "first", "second", "lambda"])
        .map_err(|e| Error::csv(&pairs_path, e))?;
    for (mix_id, a, b, lambda, _) in &mixed {
        pairs
            .write_record([mix_id.as_str(), a, b, &format_probability(*lambda)])
            .map_err(|e| Error::csv(&pairs_path, e))?;
    }
    let bytes = pairs
        .into_inner()
        .map_err(|e| Error::Config(format!("flushing pairs: {e}")))?;
    write_atomic(&pairs_path, &bytes)?;
    Ok(mixed.len())
}
