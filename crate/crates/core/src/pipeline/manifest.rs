use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One row of a manifest CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub id: String,
    pub path: PathBuf,
    pub label: Option<String>,
    pub location: Option<String>,
    pub timestamp: Option<String>,
    /// 1-based line in the source file.
    pub line: u64,
}

impl ManifestRecord {
    /// Relative paths are taken relative to `base`.
    pub fn resolve(&self, base: &Path) -> PathBuf {
        if self.path.is_absolute() {
            self.path.clone()
        } else {
            base.join(&self.path)
        }
    }
}

/// Reads a header-bearing CSV with columns `id`, `path` and optionally
/// `label`, `location`, `timestamp` (any order). Record order is preserved.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let id_col = column("id").ok_or_else(|| missing_column(path, "id"))?;
    let path_col = column("path").ok_or_else(|| missing_column(path, "path"))?;
    let label_col = column("label");
    let location_col = column("location");
    let timestamp_col = column("timestamp");

    let mut records = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let optional = |col: Option<usize>| {
            col.and_then(|c| row.get(c))
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
        };
        let id = row.get(id_col).unwrap_or_default().to_owned();
        if id.is_empty() {
            return Err(Error::Manifest(format!("{}: line {line}: empty id", path.display())));
        }
        let file = row.get(path_col).unwrap_or_default();
        if file.is_empty() {
            return Err(Error::Manifest(format!(
                "{}: line {line}: empty path for id {id:?}",
                path.display()
            )));
        }
        if let Some(first) = seen.insert(id.clone(), line) {
            return Err(Error::Manifest(format!(
                "{}: duplicate id {id:?} on line {line} (first seen on line {first})",
                path.display()
            )));
        }
        records.push(ManifestRecord {
            path: PathBuf::from(file),
            label: optional(label_col),
            location: optional(location_col),
            timestamp: optional(timestamp_col),
            id,
            line,
        });
    }
    Ok(records)
}

fn missing_column(path: &Path, name: &str) -> Error {
    Error::Manifest(format!("{}: missing required column {name:?}", path.display()))
}
