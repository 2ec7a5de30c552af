//! TOML run configuration for `augment`.
//!
//! ```toml
//! seed = 42                 # optional; --seed overrides
//! classes = "train14"       # "train14", "full23", a class-list file, or an inline array
//! on_error = "abort"        # or "skip": unreadable images are recorded and skipped
//!
//! [smoothing]
//! epsilon = 0.1
//!
//! [mixup]
//! enabled = true
//! alpha = 0.2
//!
//! [[steps]]
//! kind = "rotate"
//! probability = 0.5
//! max_degrees = 15.0
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::classes::ClassSet;
use crate::error::{Error, Result};
use crate::image_core::AugmentStep;
use crate::regularizers::SmoothingConfig;

pub const DEFAULT_MIXUP_ALPHA: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnError {
    #[default]
    Abort,
    Skip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub class_set: ClassSet,
    pub steps: Vec<AugmentStep>,
    pub smoothing: SmoothingConfig,
    pub mixup_alpha: f64,
    pub mixup_enabled: bool,
    pub on_error: OnError,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: None,
            class_set: ClassSet::full23(),
            steps: Vec::new(),
            smoothing: SmoothingConfig::default(),
            mixup_alpha: DEFAULT_MIXUP_ALPHA,
            mixup_enabled: false,
            on_error: OnError::Abort,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ClassesField {
    Named(String),
    Inline(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MixupSection {
    #[serde(default)]
    enabled: bool,
    #[serde(default = "default_alpha")]
    alpha: f64,
}

fn default_alpha() -> f64 {
    DEFAULT_MIXUP_ALPHA
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    classes: Option<ClassesField>,
    #[serde(default)]
    on_error: OnError,
    smoothing: Option<SmoothingConfig>,
    mixup: Option<MixupSection>,
    #[serde(default)]
    steps: Vec<AugmentStep>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text, base).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Parses TOML; relative class-list paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let class_set = match raw.classes {
            None => ClassSet::full23(),
            Some(ClassesField::Inline(names)) => ClassSet::new(names)?,
            Some(ClassesField::Named(name)) => match name.as_str() {
                "train14" | "full23" => ClassSet::resolve(&name)?,
                file => ClassSet::from_file(&base.join(file))?,
            },
        };
        let (mixup_enabled, mixup_alpha) = raw
            .mixup
            .map(|m| (m.enabled, m.alpha))
            .unwrap_or((false, DEFAULT_MIXUP_ALPHA));
        let cfg = PipelineConfig {
            seed: raw.seed,
            class_set,
            steps: raw.steps,
            smoothing: raw.smoothing.unwrap_or_default(),
            mixup_alpha,
            mixup_enabled,
            on_error: raw.on_error,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, step) in self.steps.iter().enumerate() {
            step.validate().map_err(|e| Error::Config(format!("step {i}: {e}")))?;
        }
        self.smoothing.validate()?;
        if !self.mixup_alpha.is_finite() || self.mixup_alpha <= 0.0 {
            return Err(Error::Config(format!(
                "mixup alpha must be positive, got {}",
                self.mixup_alpha
            )));
        }
        Ok(())
    }
}
