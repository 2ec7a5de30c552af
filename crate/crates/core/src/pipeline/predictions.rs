//! Prediction CSV files: an `id` column followed by one probability column
//! per class. Probabilities are written with 9 significant digits.

use std::collections::HashMap;
use std::path::Path;

use crate::classes::ClassSet;
use crate::ensemble::{validate_predictions, PredictionMatrix};
use crate::error::{Error, Result};

use super::write_atomic;

/// Decimal rendering with 9 significant digits.
pub fn format_probability(p: f64) -> String {
    if p == 0.0 {
        return "0".to_owned();
    }
    let exponent = p.abs().log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    format!("{p:.decimals$}")
}

pub fn encode_predictions(pm: &PredictionMatrix, classes: &ClassSet) -> Result<Vec<u8>> {
    if pm.classes() != classes.len() {
        return Err(Error::Predictions(format!(
            "matrix has {} classes, class set has {}",
            pm.classes(),
            classes.len()
        )));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("id").chain(classes.names().iter().map(String::as_str));
    w.write_record(header).map_err(|e| Error::csv("<predictions>", e))?;
    for (id, row) in pm.rows() {
        let cells = std::iter::once(id.to_owned()).chain(row.iter().map(|&p| format_probability(p)));
        w.write_record(cells).map_err(|e| Error::csv("<predictions>", e))?;
    }
    w.into_inner()
        .map_err(|e| Error::Predictions(format!("flushing predictions: {e}")))
}

/// Writes through a temporary file and renames, so a failed write never
/// leaves a partial file at `path`.
pub fn write_predictions(pm: &PredictionMatrix, classes: &ClassSet, path: &Path) -> Result<()> {
    let bytes = encode_predictions(pm, classes)?;
    write_atomic(path, &bytes)
}

/// Reads a prediction file whose class columns must be exactly `classes`
/// (in any order) and validates it.
pub fn read_predictions(path: &Path, classes: &ClassSet) -> Result<PredictionMatrix> {
    read_inner(path, Some(classes)).map(|(_, pm)| pm)
}

/// Reads a prediction file, taking the class set from its header.
pub fn read_predictions_with_classes(path: &Path) -> Result<(ClassSet, PredictionMatrix)> {
    read_inner(path, None)
}

fn read_inner(path: &Path, expected: Option<&ClassSet>) -> Result<(ClassSet, PredictionMatrix)> {
    let fail = |msg: String| Error::Predictions(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.get(0) != Some("id") {
        return Err(fail("first column must be \"id\"".into()));
    }
    let columns: Vec<&str> = headers.iter().skip(1).collect();
    let classes = match expected {
        Some(cs) => cs.clone(),
        None => ClassSet::new(columns.iter().copied()).map_err(|e| fail(e.to_string()))?,
    };

    // column position -> class index
    let mut slot = Vec::with_capacity(columns.len());
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for name in &columns {
        if seen.insert(name, 0).is_some() {
            return Err(fail(format!("duplicate column {name:?}")));
        }
        let k = classes
            .index_of(name)
            .ok_or_else(|| fail(format!("column {name:?} is not in the class set")))?;
        slot.push(k);
    }
    let missing: Vec<&str> = classes
        .names()
        .iter()
        .map(String::as_str)
        .filter(|n| !seen.contains_key(n))
        .collect();
    if !missing.is_empty() {
        return Err(fail(format!(
            "header is missing class column(s) {}",
            missing.join(", ")
        )));
    }

    let k = classes.len();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut row = vec![0.0; k];
        for (col, &class) in slot.iter().enumerate() {
            let cell = record.get(col + 1).unwrap_or_default();
            row[class] = cell.parse::<f64>().map_err(|_| {
                fail(format!(
                    "line {line}, column {:?}: cannot parse {cell:?} as a probability",
                    columns[col]
                ))
            })?;
        }
        ids.push(record.get(0).unwrap_or_default().to_owned());
        rows.push(row);
    }
    let pm = PredictionMatrix::new(ids, rows, k)?;
    let pm = validate_predictions(pm).map_err(|e| fail(e.to_string()))?;
    Ok((classes, pm))
}
