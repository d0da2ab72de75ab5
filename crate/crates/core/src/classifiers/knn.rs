use super::{argmax_count, ClassifierError};
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Exact brute-force k-nearest-neighbors classifier (Euclidean distance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub n_classes: usize,
    pub data: Array2<f64>,
    pub labels: Vec<usize>,
}

impl KnnModel {
    pub fn fit(
        x: ArrayView2<'_, f64>,
        labels: &[usize],
        n_classes: usize,
        k: usize,
    ) -> Result<Self, ClassifierError> {
        if k == 0 || k > x.nrows() {
            return Err(ClassifierError::InvalidParam(format!(
                "knn k must be in 1..={}, got {k}",
                x.nrows()
            )));
        }
        Ok(Self {
            k,
            n_classes,
            data: x.as_standard_layout().into_owned(),
            labels: labels.to_vec(),
        })
    }

    pub fn n_features(&self) -> usize {
        self.data.ncols()
    }

    /// Training-row indices of the `k` nearest points, nearest first; equal
    /// distances keep the lower row index.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let train = self.data.as_slice().expect("standard layout");
        let d = self.n_features();
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(self.k + 1);
        for (i, row) in train.chunks_exact(d).enumerate() {
            let dist: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.len() == self.k && dist >= best[self.k - 1].0 {
                continue;
            }
            let pos = best.partition_point(|&(bd, _)| bd <= dist);
            best.insert(pos, (dist, i));
            best.truncate(self.k);
        }
        best.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        let x = x.as_standard_layout();
        let d = x.ncols();
        let rows: Vec<&[f64]> = x
            .as_slice()
            .expect("standard layout")
            .chunks_exact(d)
            .collect();
        rows.par_iter()
            .map(|q| {
                let mut votes = vec![0usize; self.n_classes];
                for i in self.neighbors(q) {
                    votes[self.labels[i]] += 1;
                }
                argmax_count(&votes)
            })
            .collect()
    }
}
