use super::{
    labels::map_attack_to_class, DataError, Dataset, RawRecord, Reject, FEATURE_COUNT,
    FEATURE_NAMES, NOMINAL_COLUMNS,
};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Ordinal code given to nominal values absent from the training data.
pub const UNSEEN_CATEGORY: f64 = -1.0;

/// Categories of one nominal column in first-appearance order; a category's
/// code is its position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NominalEncoder {
    pub column: usize,
    pub name: String,
    pub categories: Vec<String>,
}

impl NominalEncoder {
    fn lookup(&self) -> HashMap<&str, usize> {
        self.categories
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect()
    }
}

/// Encoder and min-max scaler state, fitted on training records only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderState {
    pub feature_names: Vec<String>,
    pub nominal: Vec<NominalEncoder>,
    /// Per-column minimum of the (ordinal-encoded) training values.
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl EncoderState {
    /// Scales a raw column value into `[0,1]`; constant columns map to 0.
    pub fn scale(&self, column: usize, value: f64) -> f64 {
        let (lo, hi) = (self.min[column], self.max[column]);
        if hi > lo {
            ((value - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

fn parse_numeric(raw: &str) -> Result<f64, String> {
    if raw.is_empty() {
        return Err("empty cell".into());
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("unparseable numeric value {raw:?}")),
    }
}

/// Enumerates nominal categories and records per-column min/max.
/// Unparseable numeric cells are skipped here and rejected by [`transform`].
pub fn fit_encoders(train_records: &[RawRecord]) -> Result<EncoderState, DataError> {
    if train_records.is_empty() {
        return Err(DataError::EmptyTraining);
    }
    let mut nominal: Vec<NominalEncoder> = NOMINAL_COLUMNS
        .iter()
        .map(|&c| NominalEncoder {
            column: c,
            name: FEATURE_NAMES[c].to_string(),
            categories: Vec::new(),
        })
        .collect();
    let mut seen: Vec<HashMap<String, usize>> = vec![HashMap::new(); NOMINAL_COLUMNS.len()];
    let mut min = vec![f64::INFINITY; FEATURE_COUNT];
    let mut max = vec![f64::NEG_INFINITY; FEATURE_COUNT];

    for rec in train_records {
        for (col, raw) in rec.fields.iter().enumerate() {
            let value = match NOMINAL_COLUMNS.iter().position(|&c| c == col) {
                Some(k) => {
                    let next = seen[k].len();
                    let code = *seen[k].entry(raw.clone()).or_insert_with(|| {
                        nominal[k].categories.push(raw.clone());
                        next
                    });
                    code as f64
                }
                None => match parse_numeric(raw) {
                    Ok(v) => v,
                    Err(_) => continue,
                },
            };
            min[col] = min[col].min(value);
            max[col] = max[col].max(value);
        }
    }
    for col in 0..FEATURE_COUNT {
        if min[col] > max[col] {
            // no parseable value at all
            min[col] = 0.0;
            max[col] = 0.0;
        }
    }
    Ok(EncoderState {
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        nominal,
        min,
        max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transformed {
    pub dataset: Dataset,
    pub rejects: Vec<Reject>,
}

/// Encodes and scales records. Records with empty or unparseable cells are
/// rejected and reported; an unknown attack name aborts with its line number.
pub fn transform(records: &[RawRecord], encoder: &EncoderState) -> Result<Transformed, DataError> {
    let lookups: Vec<HashMap<&str, usize>> = encoder.nominal.iter().map(|n| n.lookup()).collect();
    let mut values = Vec::with_capacity(records.len() * FEATURE_COUNT);
    let mut labels5 = Vec::with_capacity(records.len());
    let mut row_ids = Vec::with_capacity(records.len());
    let mut rejects = Vec::new();

    'records: for rec in records {
        let label = map_attack_to_class(&rec.attack_name).map_err(|e| DataError::Record {
            line: rec.line,
            source: Box::new(e),
        })?;
        if rec.fields.len() != FEATURE_COUNT {
            rejects.push(Reject {
                line: rec.line,
                reason: format!(
                    "expected {FEATURE_COUNT} features, found {}",
                    rec.fields.len()
                ),
            });
            continue;
        }
        let mut row = [0.0; FEATURE_COUNT];
        for (col, raw) in rec.fields.iter().enumerate() {
            let encoded = match encoder.nominal.iter().position(|n| n.column == col) {
                Some(k) if raw.is_empty() => {
                    rejects.push(Reject {
                        line: rec.line,
                        reason: format!("empty {} cell", encoder.nominal[k].name),
                    });
                    continue 'records;
                }
                Some(k) => lookups[k]
                    .get(raw.as_str())
                    .map_or(UNSEEN_CATEGORY, |&code| code as f64),
                None => match parse_numeric(raw) {
                    Ok(v) => v,
                    Err(reason) => {
                        rejects.push(Reject {
                            line: rec.line,
                            reason: format!("{}: {reason}", FEATURE_NAMES[col]),
                        });
                        continue 'records;
                    }
                },
            };
            row[col] = encoder.scale(col, encoded);
        }
        values.extend_from_slice(&row);
        labels5.push(label);
        row_ids.push(rec.line);
    }

    let matrix = Array2::from_shape_vec((labels5.len(), FEATURE_COUNT), values)
        .expect("row-major buffer matches shape");
    let mut dataset = Dataset::new(matrix, labels5, encoder.feature_names.clone());
    dataset.row_ids = row_ids;
    dataset.encoder = Some(encoder.clone());
    Ok(Transformed { dataset, rejects })
}
