//! Trainable classifiers with a shared train/predict contract.
//!
//! Labels are class indices in `0..n_classes`. None of the models draws random
//! numbers, so a fit is a pure function of data and hyperparameters.

mod knn;
mod logreg;
mod tree;

pub use knn::KnnModel;
pub use logreg::{gradient_check, LogRegModel};
pub use tree::{gini, DecisionTreeModel, Node};

use crate::metrics::time_block;
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("training data has {rows} rows but {labels} labels")]
    LabelCountMismatch { rows: usize, labels: usize },
    #[error("training data must contain at least two classes, found {0}")]
    SingleClass(usize),
    #[error("label {label} is outside 0..{n_classes}")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("model expects {expected} features, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("model JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Knn,
    Dtree,
    Logreg,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::Logreg,
        ClassifierKind::Dtree,
        ClassifierKind::Knn,
    ];

    /// Row label used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "KNN",
            ClassifierKind::Dtree => "D_Tree",
            ClassifierKind::Logreg => "LogReg",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::Dtree => "dtree",
            ClassifierKind::Logreg => "logreg",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" => Ok(ClassifierKind::Knn),
            "dtree" | "tree" | "decision_tree" => Ok(ClassifierKind::Dtree),
            "logreg" | "lr" | "logistic" => Ok(ClassifierKind::Logreg),
            other => Err(ClassifierError::InvalidParam(format!(
                "unknown classifier {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierParams {
    pub knn_k: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            knn_k: 5,
            max_depth: None,
            min_samples_split: 2,
            learning_rate: 0.1,
            epochs: 200,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitReport {
    pub train_time: f64,
    pub predict_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Knn(KnnModel),
    Dtree(DecisionTreeModel),
    Logreg(LogRegModel),
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SavedModel {
    format_version: u32,
    #[serde(flatten)]
    model: Model,
}

impl Model {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Model::Knn(_) => ClassifierKind::Knn,
            Model::Dtree(_) => ClassifierKind::Dtree,
            Model::Logreg(_) => ClassifierKind::Logreg,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Knn(m) => m.n_features(),
            Model::Dtree(m) => m.n_features(),
            Model::Logreg(m) => m.n_features(),
        }
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>, ClassifierError> {
        if x.ncols() != self.n_features() {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.n_features(),
                got: x.ncols(),
            });
        }
        Ok(match self {
            Model::Knn(m) => m.predict(x),
            Model::Dtree(m) => m.predict(x),
            Model::Logreg(m) => m.predict(x),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SavedModel {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })
        .expect("models serialize")
    }

    pub fn from_json(text: &str) -> Result<Model, ClassifierError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ClassifierError::Json(e.to_string()))?;
        let version = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| ClassifierError::Json("missing format_version".into()))?;
        if version != u64::from(MODEL_FORMAT_VERSION) {
            return Err(ClassifierError::UnsupportedVersion(version as u32));
        }
        let saved: SavedModel =
            serde_json::from_value(value).map_err(|e| ClassifierError::Json(e.to_string()))?;
        Ok(saved.model)
    }
}

fn validate_training(
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    n_classes: usize,
) -> Result<(), ClassifierError> {
    if x.ncols() == 0 {
        return Err(ClassifierError::InvalidParam("no feature columns".into()));
    }
    if x.nrows() != labels.len() {
        return Err(ClassifierError::LabelCountMismatch {
            rows: x.nrows(),
            labels: labels.len(),
        });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(ClassifierError::LabelOutOfRange { label, n_classes });
    }
    let mut present = vec![false; n_classes];
    labels.iter().for_each(|&l| present[l] = true);
    let distinct = present.iter().filter(|&&p| p).count();
    if distinct < 2 {
        return Err(ClassifierError::SingleClass(distinct));
    }
    for ((row, col), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(ClassifierError::NonFinite { row, col });
        }
    }
    Ok(())
}

/// Fits a model of the given kind and records the wall time spent.
pub fn train(
    kind: ClassifierKind,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    n_classes: usize,
    params: &ClassifierParams,
) -> Result<(Model, FitReport), ClassifierError> {
    validate_training(x, labels, n_classes)?;
    let (model, train_time) = time_block(|| -> Result<Model, ClassifierError> {
        Ok(match kind {
            ClassifierKind::Knn => Model::Knn(KnnModel::fit(x, labels, n_classes, params.knn_k)?),
            ClassifierKind::Dtree => Model::Dtree(DecisionTreeModel::fit(
                x,
                labels,
                n_classes,
                params.max_depth,
                params.min_samples_split,
            )?),
            ClassifierKind::Logreg => Model::Logreg(LogRegModel::fit(
                x,
                labels,
                n_classes,
                params.learning_rate,
                params.epochs,
                params.l2,
            )?),
        })
    });
    Ok((
        model?,
        FitReport {
            train_time,
            predict_time: 0.0,
        },
    ))
}

/// Predicts every row and returns the labels with the elapsed seconds.
pub fn predict(
    model: &Model,
    x: ArrayView2<'_, f64>,
) -> Result<(Vec<usize>, f64), ClassifierError> {
    let (labels, secs) = time_block(|| model.predict(x));
    Ok((labels?, secs))
}

/// Index of the largest count; ties go to the lower index.
pub(crate) fn argmax_count(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}
