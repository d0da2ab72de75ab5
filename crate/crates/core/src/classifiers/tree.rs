use super::{argmax_count, ClassifierError};
use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Leaf {
        class: usize,
        /// Training samples per class that reached this leaf.
        distribution: Vec<usize>,
    },
    /// Rows with `x[feature] < threshold` descend left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART classification tree grown greedily on Gini impurity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub n_classes: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

/// Gini impurity of a class-count vector.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    feature: usize,
    threshold: f64,
    /// Σ c²/n over both children; larger means lower weighted impurity.
    purity: f64,
}

fn purity_term(counts: &[usize], n: usize) -> f64 {
    counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / n as f64
}

/// Threshold strictly above `lo` and at most `hi`, so `lo` goes left and `hi` right.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo {
        mid
    } else {
        hi
    }
}

/// Best split of one feature over `rows`; ties keep the smaller threshold.
fn best_split_for_feature(
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    rows: &[usize],
    feature: usize,
    n_classes: usize,
    totals: &[usize],
) -> Option<Candidate> {
    let mut sorted: Vec<(f64, usize)> =
        rows.iter().map(|&r| (x[[r, feature]], labels[r])).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len();
    let mut left = vec![0usize; n_classes];
    let mut right = totals.to_vec();
    let mut best: Option<Candidate> = None;
    for i in 0..n - 1 {
        let (v, l) = sorted[i];
        left[l] += 1;
        right[l] -= 1;
        let next = sorted[i + 1].0;
        if next <= v {
            continue;
        }
        let purity = purity_term(&left, i + 1) + purity_term(&right, n - i - 1);
        if best.is_none_or(|b| purity > b.purity) {
            best = Some(Candidate {
                feature,
                threshold: midpoint(v, next),
                purity,
            });
        }
    }
    best
}

struct Pending {
    node: usize,
    rows: Vec<usize>,
    depth: usize,
}

impl DecisionTreeModel {
    pub fn fit(
        x: ArrayView2<'_, f64>,
        labels: &[usize],
        n_classes: usize,
        max_depth: Option<usize>,
        min_samples_split: usize,
    ) -> Result<Self, ClassifierError> {
        if min_samples_split < 2 {
            return Err(ClassifierError::InvalidParam(format!(
                "min_samples_split must be >= 2, got {min_samples_split}"
            )));
        }
        let mut model = Self {
            nodes: vec![Node::Leaf {
                class: 0,
                distribution: Vec::new(),
            }],
            n_features: x.ncols(),
            n_classes,
            max_depth,
            min_samples_split,
        };
        let mut stack = vec![Pending {
            node: 0,
            rows: (0..x.nrows()).collect(),
            depth: 0,
        }];
        while let Some(Pending { node, rows, depth }) = stack.pop() {
            let mut counts = vec![0usize; n_classes];
            rows.iter().for_each(|&r| counts[labels[r]] += 1);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_reached = max_depth.is_some_and(|d| depth >= d);
            let split = if pure || depth_reached || rows.len() < min_samples_split {
                None
            } else {
                model.best_split(x, labels, &rows, &counts)
            };
            let Some(split) = split else {
                model.nodes[node] = Node::Leaf {
                    class: argmax_count(&counts),
                    distribution: counts,
                };
                continue;
            };
            let (go_left, go_right): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| x[[r, split.feature]] < split.threshold);
            let left = model.nodes.len();
            let right = left + 1;
            let placeholder = Node::Leaf {
                class: 0,
                distribution: Vec::new(),
            };
            model.nodes.push(placeholder.clone());
            model.nodes.push(placeholder);
            model.nodes[node] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            stack.push(Pending {
                node: right,
                rows: go_right,
                depth: depth + 1,
            });
            stack.push(Pending {
                node: left,
                rows: go_left,
                depth: depth + 1,
            });
        }
        Ok(model)
    }

    /// Lowest weighted-Gini split over all features; ties keep the lower feature index.
    fn best_split(
        &self,
        x: ArrayView2<'_, f64>,
        labels: &[usize],
        rows: &[usize],
        totals: &[usize],
    ) -> Option<Candidate> {
        let per_feature =
            |f: usize| best_split_for_feature(x, labels, rows, f, self.n_classes, totals);
        let candidates: Vec<Option<Candidate>> = if rows.len() >= 2048 {
            (0..self.n_features)
                .into_par_iter()
                .map(per_feature)
                .collect()
        } else {
            (0..self.n_features).map(per_feature).collect()
        };
        candidates
            .into_iter()
            .flatten()
            .fold(None, |best: Option<Candidate>, c| match best {
                Some(b) if b.purity >= c.purity => Some(b),
                _ => Some(c),
            })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Length of the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { class, .. } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature] < *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        x.rows()
            .into_iter()
            .map(|r| match r.as_slice() {
                Some(row) => self.predict_row(row),
                None => self.predict_row(&r.to_vec()),
            })
            .collect()
    }
}
