//! Wrapper feature selection: EVO positions are decoded into feature masks and
//! each mask is scored by training a classifier on the selected columns.

use crate::classifiers::{self, ClassifierError, ClassifierKind, ClassifierParams};
use crate::data::{split_indices, ClassLabel, DataError, Dataset};
use crate::evo::{self, BoxError, EvoConfig, EvoError, Objective, RunHistory};
use crate::metrics::{build_confusion, classification_report, MetricsError, MetricsReport};
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FsError {
    #[error("invalid feature-selection config: {0}")]
    InvalidConfig(String),
    #[error("a feature mask must select at least one feature")]
    EmptyMask,
    #[error("mask has {got} entries but the dataset has {expected} features")]
    MaskLength { expected: usize, got: usize },
    #[error("invalid mask bit string {0:?}")]
    BadBits(String),
    #[error("the validation split contains no {0} rows")]
    MissingValidationClass(&'static str),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Evo(#[from] EvoError),
}

/// Non-empty selection over a dataset's predictive columns. Serializes as a
/// bit string such as `"0110"`, one character per column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureMask {
    selected: Vec<bool>,
}

impl FeatureMask {
    pub fn new(selected: Vec<bool>) -> Result<Self, FsError> {
        if !selected.iter().any(|&s| s) {
            return Err(FsError::EmptyMask);
        }
        Ok(Self { selected })
    }

    pub fn all(len: usize) -> Self {
        Self::new(vec![true; len]).expect("len > 0")
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self, FsError> {
        let mut selected = vec![false; len];
        for &i in indices {
            if i >= len {
                return Err(FsError::MaskLength {
                    expected: len,
                    got: i + 1,
                });
            }
            selected[i] = true;
        }
        Self::new(selected)
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.selected
    }

    pub fn count(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.selected[i]).collect()
    }

    pub fn names<'a>(&self, feature_names: &'a [String]) -> Vec<&'a str> {
        self.indices()
            .into_iter()
            .map(|i| feature_names[i].as_str())
            .collect()
    }

    pub fn bit_string(&self) -> String {
        self.selected
            .iter()
            .map(|&s| if s { '1' } else { '0' })
            .collect()
    }
}

impl FromStr for FeatureMask {
    type Err = FsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let selected = s
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                _ => Err(FsError::BadBits(s.to_string())),
            })
            .collect::<Result<Vec<bool>, FsError>>()?;
        Self::new(selected)
    }
}

impl TryFrom<String> for FeatureMask {
    type Error = FsError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<FeatureMask> for String {
    fn from(m: FeatureMask) -> String {
        m.bit_string()
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bit_string())
    }
}

/// Decodes a position by thresholding. If nothing clears the threshold the
/// largest coordinate (lowest index on ties) is selected alone.
pub fn binarize(position: &[f64], threshold: f64) -> FeatureMask {
    let mut selected: Vec<bool> = position.iter().map(|&v| v >= threshold).collect();
    if !selected.iter().any(|&s| s) {
        let mut best = 0;
        for (i, &v) in position.iter().enumerate() {
            if v > position[best] {
                best = i;
            }
        }
        selected[best] = true;
    }
    FeatureMask { selected }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FsConfig {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub classifier: ClassifierKind,
    pub params: ClassifierParams,
    pub validation_fraction: f64,
    pub binarize_threshold: f64,
}

impl Default for FsConfig {
    fn default() -> Self {
        Self {
            w1: 0.7,
            w2: 0.15,
            w3: 0.15,
            classifier: ClassifierKind::Dtree,
            params: ClassifierParams::default(),
            validation_fraction: 0.2,
            binarize_threshold: 0.5,
        }
    }
}

impl FsConfig {
    pub fn validate(&self) -> Result<(), FsError> {
        let w = [self.w1, self.w2, self.w3];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) || w.iter().sum::<f64>() <= 0.0 {
            return Err(FsError::InvalidConfig(format!(
                "weights must be finite, non-negative and not all zero, got {w:?}"
            )));
        }
        for (name, v) in [
            ("validation_fraction", self.validation_fraction),
            ("binarize_threshold", self.binarize_threshold),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(FsError::InvalidConfig(format!(
                    "{name} must lie in (0,1), got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// `w1·(1 − accuracy) + w2·fpr + w3·fnr`.
pub fn cost_function(accuracy: f64, fpr: f64, fnr: f64, config: &FsConfig) -> f64 {
    config.w1 * (1.0 - accuracy) + config.w2 * fpr + config.w3 * fnr
}

/// Fixed fit/validation partition of a training set with binary labels.
#[derive(Debug, Clone)]
pub struct Fold {
    fit_x: Array2<f64>,
    fit_y: Vec<usize>,
    val_x: Array2<f64>,
    val_y: Vec<usize>,
}

impl Fold {
    /// Stratified by the 5-class label so rare attack types reach both sides.
    pub fn new(train: &Dataset, validation_fraction: f64, seed: u64) -> Result<Self, FsError> {
        let (fit, val) = split_indices(&train.labels5, 1.0 - validation_fraction, seed)?;
        let val_y: Vec<usize> = val.iter().map(|&i| train.labels2[i]).collect();
        for (class, name) in ClassLabel::BINARY_NAMES.iter().enumerate() {
            if !val_y.contains(&class) {
                return Err(FsError::MissingValidationClass(name));
            }
        }
        Ok(Self {
            fit_x: train.matrix.select(Axis(0), &fit),
            fit_y: fit.iter().map(|&i| train.labels2[i]).collect(),
            val_x: train.matrix.select(Axis(0), &val),
            val_y,
        })
    }

    pub fn n_features(&self) -> usize {
        self.fit_x.ncols()
    }

    pub fn evaluate(
        &self,
        mask: &FeatureMask,
        config: &FsConfig,
    ) -> Result<(f64, MetricsReport), FsError> {
        if mask.len() != self.n_features() {
            return Err(FsError::MaskLength {
                expected: self.n_features(),
                got: mask.len(),
            });
        }
        let cols = mask.indices();
        let fit_x = self.fit_x.select(Axis(1), &cols);
        let val_x = self.val_x.select(Axis(1), &cols);
        let (model, fit) = classifiers::train(
            config.classifier,
            fit_x.view(),
            &self.fit_y,
            2,
            &config.params,
        )?;
        let (pred, test_time) = classifiers::predict(&model, val_x.view())?;
        let names: Vec<String> = ClassLabel::BINARY_NAMES
            .iter()
            .map(|s| s.to_string())
            .collect();
        let cm = build_confusion(&self.val_y, &pred, &names)?;
        let mut report = classification_report(&cm);
        report.train_time = fit.train_time;
        report.test_time = test_time;
        let cost = cost_function(report.accuracy, report.fpr, report.fnr, config);
        Ok((cost, report))
    }
}

/// Scores one mask on a freshly drawn fold.
pub fn evaluate_mask(
    mask: &FeatureMask,
    train: &Dataset,
    config: &FsConfig,
    seed: u64,
) -> Result<(f64, MetricsReport), FsError> {
    config.validate()?;
    Fold::new(train, config.validation_fraction, seed)?.evaluate(mask, config)
}

/// EVO objective: binarize, then score on a shared fold. Costs are memoized
/// per mask since nearby positions often decode identically.
pub struct MaskObjective<'a> {
    fold: Fold,
    config: &'a FsConfig,
    cache: Mutex<HashMap<FeatureMask, f64>>,
}

impl<'a> MaskObjective<'a> {
    pub fn new(fold: Fold, config: &'a FsConfig) -> Self {
        Self {
            fold,
            config,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn distinct_masks(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }
}

impl Objective for MaskObjective<'_> {
    fn evaluate(&self, position: &[f64]) -> Result<f64, BoxError> {
        let mask = binarize(position, self.config.binarize_threshold);
        if let Some(&cost) = self.cache.lock().expect("cache lock").get(&mask) {
            return Ok(cost);
        }
        let (cost, _) = self.fold.evaluate(&mask, self.config)?;
        self.cache.lock().expect("cache lock").insert(mask, cost);
        Ok(cost)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsResult {
    pub mask: FeatureMask,
    pub selected_features: Vec<String>,
    pub selected_count: usize,
    pub cost: f64,
    pub best_position: Vec<f64>,
    pub history: RunHistory,
    /// Decoded best mask after each history entry.
    pub per_iteration_masks: Vec<FeatureMask>,
}

/// Runs EVO over the dataset's feature columns. The validation fold is drawn
/// once from `evo_config.rng_seed` and shared by every evaluation.
pub fn select_features(
    train: &Dataset,
    evo_config: &EvoConfig,
    fs_config: &FsConfig,
) -> Result<FsResult, FsError> {
    fs_config.validate()?;
    let fold = Fold::new(train, fs_config.validation_fraction, evo_config.rng_seed)?;
    let objective = MaskObjective::new(fold, fs_config);
    let history = evo::run(evo_config, train.n_features(), &objective)?;
    log::info!(
        "{} evaluations, {} distinct masks scored",
        history
            .evaluations_per_iteration
            .last()
            .copied()
            .unwrap_or(0),
        objective.distinct_masks()
    );

    let threshold = fs_config.binarize_threshold;
    let best_position = history.final_best.position.clone();
    let mask = binarize(&best_position, threshold);
    let per_iteration_masks = history
        .best_position_per_iteration
        .iter()
        .map(|p| binarize(p, threshold))
        .collect();
    Ok(FsResult {
        selected_features: mask
            .names(&train.feature_names)
            .into_iter()
            .map(String::from)
            .collect(),
        selected_count: mask.count(),
        cost: history.final_best.cost,
        mask,
        best_position,
        history,
        per_iteration_masks,
    })
}

#[cfg(test)]
mod tests;
