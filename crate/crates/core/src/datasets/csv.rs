use std::path::Path;

use ndarray::Array2;

use super::LabeledSet;
use crate::error::{Error, Result};

/// Parses `features..., label` rows. A first line that does not parse as numbers
/// is taken as a header.
pub fn parse_csv(text: &str) -> Result<LabeledSet> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields[..fields.len() - 1].iter().map(|f| f.parse::<f64>()).collect();
        let label = fields[fields.len() - 1].parse::<usize>();
        let (features, label) = match (parsed, label) {
            (Ok(f), Ok(l)) => (f, l),
            _ if rows.is_empty() && width.is_none() && lineno == 0 => continue,
            _ => return Err(Error::param(format!("csv line {}: cannot parse `{line}`", lineno + 1))),
        };
        if features.is_empty() {
            return Err(Error::param(format!("csv line {}: no feature columns", lineno + 1)));
        }
        match width {
            None => width = Some(features.len()),
            Some(w) if w != features.len() => {
                return Err(Error::param(format!(
                    "csv line {}: {} features, expected {w}",
                    lineno + 1,
                    features.len()
                )))
            }
            _ => {}
        }
        rows.push(features);
        labels.push(label);
    }
    let d = width.ok_or_else(|| Error::param("csv has no data rows"))?;
    let k = labels.iter().max().map_or(1, |m| m + 1);
    let x = Array2::from_shape_vec((rows.len(), d), rows.concat()).expect("sized");
    LabeledSet::new(x, labels, k)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<LabeledSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}
