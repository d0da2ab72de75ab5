//! Confusion matrices and the statistics derived from them.
//!
//! Class index 0 is the negative ("Normal") class wherever a binary view is
//! needed; every other class counts as an attack. Any 0/0 rate is 0.

use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("label vectors differ in length ({truth} true vs {predicted} predicted)")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label {label} at position {position} is outside the {classes} known classes")]
    UnknownLabel {
        label: usize,
        position: usize,
        classes: usize,
    },
    #[error("expected a 2x2 matrix, got {0}x{0}")]
    NotBinary(usize),
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    ratio(2.0 * p * r, p + r)
}

impl ConfusionMatrix {
    pub fn zeros(classes: &[String]) -> Self {
        let k = classes.len();
        Self {
            classes: classes.to_vec(),
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn k(&self) -> usize {
        self.classes.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn col_sum(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }

    /// Folds every class except `negative` into a single positive class.
    /// The result has `[negative, positive]` ordering.
    pub fn collapse_binary(&self, negative: usize) -> ConfusionMatrix {
        let mut out = ConfusionMatrix::zeros(&["Normal".to_string(), "Attack".to_string()]);
        for (t, row) in self.counts.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                out.counts[usize::from(t != negative)][usize::from(p != negative)] += n;
            }
        }
        out
    }
}

pub fn build_confusion(
    truth: &[usize],
    predicted: &[usize],
    classes: &[String],
) -> Result<ConfusionMatrix, MetricsError> {
    if truth.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    let k = classes.len();
    let mut cm = ConfusionMatrix::zeros(classes);
    for (position, (&t, &p)) in truth.iter().zip(predicted).enumerate() {
        for label in [t, p] {
            if label >= k {
                return Err(MetricsError::UnknownLabel {
                    label,
                    position,
                    classes: k,
                });
            }
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    /// Binary rates with class 0 as the negative class.
    pub fpr: f64,
    pub fnr: f64,
    pub train_time: f64,
    pub test_time: f64,
    pub confusion: ConfusionMatrix,
}

/// False positive and false negative rates of a 2x2 matrix ordered
/// `[Normal, Attack]`, with Attack as the positive class.
pub fn binary_rates(cm: &ConfusionMatrix) -> Result<(f64, f64), MetricsError> {
    if cm.k() != 2 {
        return Err(MetricsError::NotBinary(cm.k()));
    }
    let [tn, fp] = [cm.counts[0][0], cm.counts[0][1]].map(|v| v as f64);
    let [fn_, tp] = [cm.counts[1][0], cm.counts[1][1]].map(|v| v as f64);
    Ok((ratio(fp, fp + tn), ratio(fn_, fn_ + tp)))
}

pub fn classification_report(cm: &ConfusionMatrix) -> MetricsReport {
    let total = cm.total() as f64;
    let per_class: Vec<ClassMetrics> = (0..cm.k())
        .map(|c| {
            let hit = cm.counts[c][c] as f64;
            let precision = ratio(hit, cm.col_sum(c) as f64);
            let recall = ratio(hit, cm.row_sum(c) as f64);
            ClassMetrics {
                name: cm.classes[c].clone(),
                precision,
                recall,
                f1: harmonic(precision, recall),
                support: cm.row_sum(c),
            }
        })
        .collect();

    let k = per_class.len() as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| ratio(per_class.iter().map(f).sum(), k);
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        ratio(
            per_class.iter().map(|m| f(m) * m.support as f64).sum(),
            total,
        )
    };
    let macro_avg = Averages {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
    };
    let weighted_avg = Averages {
        precision: weighted(|m| m.precision),
        recall: weighted(|m| m.recall),
        f1: weighted(|m| m.f1),
    };
    let (fpr, fnr) = if cm.k() >= 2 {
        binary_rates(&cm.collapse_binary(0)).expect("collapsed matrix is 2x2")
    } else {
        (0.0, 0.0)
    };

    MetricsReport {
        accuracy: ratio(cm.trace() as f64, total),
        per_class,
        macro_avg,
        weighted_avg,
        fpr,
        fnr,
        train_time: 0.0,
        test_time: 0.0,
        confusion: cm.clone(),
    }
}

/// Runs `action` and returns its result with the elapsed wall time in seconds.
pub fn time_block<R>(action: impl FnOnce() -> R) -> (R, f64) {
    let start = Instant::now();
    let out = action();
    (out, start.elapsed().as_secs_f64())
}
