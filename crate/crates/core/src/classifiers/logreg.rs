use super::ClassifierError;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

/// One-vs-rest logistic regression trained by full-batch gradient descent.
///
/// Head `c` scores `σ(x·w_c + b_c)` for "class c vs the rest". The training
/// loss is the sum over heads of mean log-loss plus `l2/2 · |w_c|²` (biases
/// are not penalized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    /// `n_features × n_classes`, one column per head.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn one_hot(labels: &[usize], n_classes: usize) -> Array2<f64> {
    let mut y = Array2::zeros((labels.len(), n_classes));
    for (i, &l) in labels.iter().enumerate() {
        y[[i, l]] = 1.0;
    }
    y
}

impl LogRegModel {
    pub fn zeros(
        n_features: usize,
        n_classes: usize,
        learning_rate: f64,
        epochs: usize,
        l2: f64,
    ) -> Self {
        Self {
            weights: Array2::zeros((n_features, n_classes)),
            bias: Array1::zeros(n_classes),
            learning_rate,
            epochs,
            l2,
        }
    }

    pub fn fit(
        x: ArrayView2<'_, f64>,
        labels: &[usize],
        n_classes: usize,
        learning_rate: f64,
        epochs: usize,
        l2: f64,
    ) -> Result<Self, ClassifierError> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) || l2.is_nan() || l2 < 0.0 {
            return Err(ClassifierError::InvalidParam(format!(
                "learning_rate {learning_rate} / l2 {l2} out of range"
            )));
        }
        let mut model = Self::zeros(x.ncols(), n_classes, learning_rate, epochs, l2);
        let y = one_hot(labels, n_classes);
        for _ in 0..epochs {
            let (gw, gb) = model.gradient(x, &y);
            model.weights.scaled_add(-learning_rate, &gw);
            model.bias.scaled_add(-learning_rate, &gb);
        }
        Ok(model)
    }

    pub fn n_features(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.weights.ncols()
    }

    /// Raw head scores `x·W + b`.
    pub fn decision_function(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.weights) + &self.bias
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        self.decision_function(x).mapv(sigmoid)
    }

    /// Head with the highest sigmoid score per row (the sigmoid is monotone, so
    /// the raw score is compared); ties go to the lower class index.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        self.decision_function(x)
            .rows()
            .into_iter()
            .map(|scores| {
                let mut best = 0;
                for (c, &s) in scores.iter().enumerate() {
                    if s > scores[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }

    /// Training objective for one-hot targets `y`.
    pub fn loss(&self, x: ArrayView2<'_, f64>, y: &Array2<f64>) -> f64 {
        let n = x.nrows() as f64;
        let z = self.decision_function(x);
        let data: f64 = z
            .iter()
            .zip(y.iter())
            .map(|(&z, &t)| softplus(z) - t * z)
            .sum::<f64>()
            / n;
        data + 0.5 * self.l2 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Analytic gradient of [`LogRegModel::loss`] w.r.t. weights and biases.
    pub fn gradient(&self, x: ArrayView2<'_, f64>, y: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
        let n = x.nrows() as f64;
        let residual = self.predict_proba(x) - y;
        let gw = x.t().dot(&residual) / n + &(&self.weights * self.l2);
        let gb = residual.sum_axis(Axis(0)) / n;
        (gw, gb)
    }
}

/// Floor on the relative-error denominator; below it differences are
/// indistinguishable from finite-difference round-off.
const RELATIVE_FLOOR: f64 = 1e-6;

/// Maximum relative error between the analytic gradient and central finite
/// differences (step `h`) over every weight and bias.
pub fn gradient_check(
    model: &LogRegModel,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    h: f64,
) -> f64 {
    let y = one_hot(labels, model.n_classes());
    let (gw, gb) = model.gradient(x, &y);
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(RELATIVE_FLOOR);

    for idx in ndarray::indices_of(&model.weights) {
        let orig = probe.weights[idx];
        probe.weights[idx] = orig + h;
        let up = probe.loss(x, &y);
        probe.weights[idx] = orig - h;
        let down = probe.loss(x, &y);
        probe.weights[idx] = orig;
        worst = worst.max(rel(gw[idx], (up - down) / (2.0 * h)));
    }
    for c in 0..model.n_classes() {
        let orig = probe.bias[c];
        probe.bias[c] = orig + h;
        let up = probe.loss(x, &y);
        probe.bias[c] = orig - h;
        let down = probe.loss(x, &y);
        probe.bias[c] = orig;
        worst = worst.max(rel(gb[c], (up - down) / (2.0 * h)));
    }
    worst
}
