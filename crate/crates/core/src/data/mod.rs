//! NSL-KDD ingestion: parsing, attack-category mapping, encoding, scaling,
//! stratified splitting and majority-class downsampling.

mod encode;
mod labels;
mod sampling;
mod snapshot;

pub use encode::{fit_encoders, transform, EncoderState, NominalEncoder, Transformed};
pub use labels::{map_attack_to_class, ClassLabel};
pub use sampling::{
    balance_downsample, balance_indices, class_counts, split_indices, split_train_test,
    stratified_subsample, BalanceTarget,
};
pub use snapshot::{read_snapshot, write_snapshot};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use std::io::{self, BufRead};
use std::path::Path;
use thiserror::Error;

/// Number of predictive columns in an NSL-KDD record.
pub const FEATURE_COUNT: usize = 41;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

/// Column indices of `protocol_type`, `service` and `flag`.
pub const NOMINAL_COLUMNS: [usize; 3] = [1, 2, 3];

/// Share of malformed lines above which a file is rejected outright.
pub const MAX_REJECT_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{input}: {malformed} of {total} lines malformed (first at line {first_line}: {reason}); is this an NSL-KDD file?")]
    TooManyMalformed {
        input: String,
        malformed: usize,
        total: usize,
        first_line: usize,
        reason: String,
    },
    #[error("unknown attack name {0:?}")]
    UnknownAttack(String),
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: Box<DataError>,
    },
    #[error("cannot fit encoders on an empty record set")]
    EmptyTraining,
    #[error("invalid ratio {0}; expected 0 < ratio < 1")]
    InvalidRatio(f64),
    #[error("reference class {0} absent from dataset")]
    MissingReferenceClass(ClassLabel),
    #[error("balance target must be positive")]
    ZeroTarget,
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One NSL-KDD line, still as text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    /// 1-based line number in the source.
    pub line: usize,
    pub fields: Vec<String>,
    pub attack_name: String,
    pub difficulty: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseOutput {
    pub records: Vec<RawRecord>,
    pub rejects: Vec<Reject>,
}

fn parse_line(line_no: usize, line: &str) -> Result<RawRecord, String> {
    let mut fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
    let difficulty = match fields.len() {
        42 => None,
        43 => {
            let raw = fields.pop().unwrap_or_default();
            Some(
                raw.parse::<u32>()
                    .map_err(|_| format!("bad difficulty field {raw:?}"))?,
            )
        }
        n => return Err(format!("expected 42 or 43 fields, found {n}")),
    };
    let attack_name = fields.pop().unwrap_or_default();
    Ok(RawRecord {
        line: line_no,
        fields,
        attack_name,
        difficulty,
    })
}

/// Parses comma-separated NSL-KDD text without a header. Blank lines are
/// skipped; `source` names the input in error messages.
pub fn parse_reader<R: BufRead>(reader: R, source: &str) -> Result<ParseOutput, DataError> {
    let mut out = ParseOutput::default();
    let mut total = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| DataError::Io {
            path: source.to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match parse_line(i + 1, line.trim_end_matches('\r')) {
            Ok(rec) => out.records.push(rec),
            Err(reason) => out.rejects.push(Reject {
                line: i + 1,
                reason,
            }),
        }
    }
    if !out.rejects.is_empty() && out.rejects.len() as f64 > MAX_REJECT_FRACTION * total as f64 {
        return Err(DataError::TooManyMalformed {
            input: source.to_string(),
            malformed: out.rejects.len(),
            total,
            first_line: out.rejects[0].line,
            reason: out.rejects[0].reason.clone(),
        });
    }
    Ok(out)
}

pub fn parse_file(path: impl AsRef<Path>) -> Result<ParseOutput, DataError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: name.clone(),
        source,
    })?;
    parse_reader(io::BufReader::new(file), &name)
}

/// Numeric feature matrix with both label views. Every matrix entry is in `[0,1]`
/// once produced by [`transform`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub matrix: Array2<f64>,
    pub labels5: Vec<ClassLabel>,
    pub labels2: Vec<usize>,
    pub feature_names: Vec<String>,
    /// Original row identifiers (source line numbers for parsed data).
    pub row_ids: Vec<usize>,
    pub encoder: Option<EncoderState>,
}

impl Dataset {
    /// Builds a dataset whose binary labels are derived from `labels5`.
    pub fn new(matrix: Array2<f64>, labels5: Vec<ClassLabel>, feature_names: Vec<String>) -> Self {
        assert_eq!(matrix.nrows(), labels5.len(), "row/label count mismatch");
        assert_eq!(
            matrix.ncols(),
            feature_names.len(),
            "column/name count mismatch"
        );
        let labels2 = labels5.iter().map(|l| l.binary()).collect();
        let row_ids = (0..labels5.len()).collect();
        Self {
            matrix,
            labels5,
            labels2,
            feature_names,
            row_ids,
            encoder: None,
        }
    }

    pub fn len(&self) -> usize {
        self.labels5.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels5.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.matrix.ncols()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            matrix: self.matrix.select(Axis(0), indices),
            labels5: indices.iter().map(|&i| self.labels5[i]).collect(),
            labels2: indices.iter().map(|&i| self.labels2[i]).collect(),
            feature_names: self.feature_names.clone(),
            row_ids: indices.iter().map(|&i| self.row_ids[i]).collect(),
            encoder: self.encoder.clone(),
        }
    }

    /// Matrix restricted to the given columns.
    pub fn columns(&self, columns: &[usize]) -> Array2<f64> {
        self.matrix.select(Axis(1), columns)
    }

    /// 5-class labels as class indices (see [`ClassLabel::index`]).
    pub fn class_indices(&self) -> Vec<usize> {
        self.labels5.iter().map(|l| l.index()).collect()
    }
}
