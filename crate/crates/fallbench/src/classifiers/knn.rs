//! k-nearest-neighbor classifier, Euclidean distance, odd k.
//!
//! Neighbor search is a blocked brute-force scan parallelized over query
//! rows; output order always equals input order. Distance ties are broken
//! by the lower training-row index, so results are independent of any
//! acceleration and must match an exhaustive O(n^2) search exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ModelError, TrainConfig};
use crate::features::LabeledDataset;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel<T> {
    pub train_rows: Matrix<T>,
    pub train_labels: Vec<u8>,
    pub k: usize,
}

impl<T: Scalar> KnnModel<T> {
    pub fn train(data: &LabeledDataset<T>, cfg: &TrainConfig) -> Result<Self, ModelError> {
        let k = cfg.knn_k;
        if k % 2 == 0 {
            return Err(ModelError::DegenerateData(format!("k must be odd, got {k}")));
        }
        if k > data.len() {
            return Err(ModelError::DegenerateData(format!(
                "k = {k} exceeds {} training rows",
                data.len()
            )));
        }
        Ok(KnnModel {
            train_rows: data.rows.clone(),
            train_labels: data.labels.clone(),
            k,
        })
    }

    /// Indices of the k nearest training rows to `query`, ties by lower index.
    fn neighbors(&self, query: &[T]) -> Vec<usize> {
        // max-heap of the current k best, keyed (distance, index) descending
        let mut heap: Vec<(T, usize)> = Vec::with_capacity(self.k + 1);
        let worse = |a: &(T, usize), b: &(T, usize)| -> bool {
            a.0 > b.0 || (a.0 == b.0 && a.1 > b.1)
        };
        for (i, row) in self.train_rows.iter_rows().enumerate() {
            let dist = crate::matrix::euclidean_sq(query, row);
            let cand = (dist, i);
            if heap.len() < self.k {
                heap.push(cand);
                let mut j = heap.len() - 1;
                while j > 0 {
                    let parent = (j - 1) / 2;
                    if worse(&heap[j], &heap[parent]) {
                        heap.swap(j, parent);
                        j = parent;
                    } else {
                        break;
                    }
                }
            } else if worse(&heap[0], &cand) {
                heap[0] = cand;
                let mut j = 0;
                loop {
                    let (l, r) = (2 * j + 1, 2 * j + 2);
                    let mut largest = j;
                    if l < heap.len() && worse(&heap[l], &heap[largest]) {
                        largest = l;
                    }
                    if r < heap.len() && worse(&heap[r], &heap[largest]) {
                        largest = r;
                    }
                    if largest == j {
                        break;
                    }
                    heap.swap(j, largest);
                    j = largest;
                }
            }
        }
        heap.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict_proba(&self, rows: &Matrix<T>) -> Vec<T> {
        let k = T::from_usize_(self.k);
        (0..rows.rows())
            .into_par_iter()
            .map(|q| {
                let votes = self
                    .neighbors(rows.row(q))
                    .iter()
                    .filter(|&&i| self.train_labels[i] == 1)
                    .count();
                T::from_usize_(votes) / k
            })
            .collect()
    }
}
