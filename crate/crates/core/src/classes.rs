//! Declared class sets.
//!
//! Two iWildCam 2019 presets ship with the crate: the full 23-category
//! label space and the 14 categories that actually occur in the training
//! split. Names follow the competition's category list.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const IWILDCAM_FULL23: [&str; 23] = [
    "empty",
    "deer",
    "moose",
    "squirrel",
    "rodent",
    "small_mammal",
    "elk",
    "pronghorn_antelope",
    "rabbit",
    "bighorn_sheep",
    "fox",
    "coyote",
    "black_bear",
    "raccoon",
    "skunk",
    "wolf",
    "bobcat",
    "cat",
    "dog",
    "opossum",
    "bison",
    "mountain_goat",
    "mountain_lion",
];

pub const IWILDCAM_TRAIN14: [&str; 14] = [
    "empty",
    "deer",
    "squirrel",
    "rodent",
    "rabbit",
    "fox",
    "coyote",
    "raccoon",
    "skunk",
    "bobcat",
    "cat",
    "dog",
    "opossum",
    "mountain_lion",
];

/// Ordered, duplicate-free list of at least two class names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl ClassSet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(Error::ClassSet(format!("need at least 2 classes, got {}", names.len())));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::ClassSet(format!("class {i} has an empty name")));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::ClassSet(format!("duplicate class name {name:?}")));
            }
        }
        Ok(ClassSet { names, index })
    }

    pub fn train14() -> Self {
        Self::new(IWILDCAM_TRAIN14).expect("preset is valid")
    }

    pub fn full23() -> Self {
        Self::new(IWILDCAM_FULL23).expect("preset is valid")
    }

    /// One class name per line; blank lines and `#` comments are skipped.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_owned),
        )
    }

    /// `train14`, `full23`, or a path to a class-list file.
    pub fn resolve(spec: &str) -> Result<Self> {
        match spec {
            "train14" => Ok(Self::train14()),
            "full23" => Ok(Self::full23()),
            path => Self::from_file(Path::new(path)),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}
