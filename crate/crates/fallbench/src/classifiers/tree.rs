//! CART decision tree with Gini impurity. Candidate thresholds are the
//! midpoints between consecutive sorted distinct feature values; splits
//! must strictly decrease weighted impurity. Equal-gain ties go to the
//! lowest feature index, then the lowest threshold.

use serde::{Deserialize, Serialize};

use super::{decide, ModelError, TrainConfig};
use crate::features::LabeledDataset;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TreeNode<T> {
    Split {
        feature: usize,
        threshold: T,
        left: Box<TreeNode<T>>,
        right: Box<TreeNode<T>>,
    },
    Leaf {
        /// Fraction of training rows at this leaf with label 1.
        proba: T,
        samples: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionTreeModel<T> {
    pub root: TreeNode<T>,
    pub width: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
}

fn gini(n0: usize, n1: usize) -> f64 {
    let n = (n0 + n1) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = n0 as f64 / n;
    let p1 = n1 as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

struct BestSplit<T> {
    feature: usize,
    threshold: T,
    weighted_gini: f64,
}

/// Scans every feature for the threshold minimizing the weighted child
/// impurity over the rows in `idx`.
fn best_split<T: Scalar>(
    rows: &Matrix<T>,
    labels: &[u8],
    idx: &[usize],
) -> Option<BestSplit<T>> {
    let total1 = idx.iter().filter(|&&i| labels[i] == 1).count();
    let total0 = idx.len() - total1;
    let n = idx.len() as f64;
    let mut best: Option<BestSplit<T>> = None;
    let mut order: Vec<usize> = idx.to_vec();
    for feature in 0..rows.cols() {
        order.sort_by(|&a, &b| {
            rows.row(a)[feature]
                .partial_cmp(&rows.row(b)[feature])
                .unwrap()
        });
        let mut left0 = 0usize;
        let mut left1 = 0usize;
        for w in 0..order.len() - 1 {
            let i = order[w];
            if labels[i] == 1 {
                left1 += 1;
            } else {
                left0 += 1;
            }
            let v = rows.row(i)[feature];
            let v_next = rows.row(order[w + 1])[feature];
            if v == v_next {
                continue;
            }
            let threshold = (v + v_next) / T::from_f64_(2.0);
            if !threshold.is_finite() {
                continue;
            }
            let right0 = total0 - left0;
            let right1 = total1 - left1;
            let left_n = (left0 + left1) as f64;
            let right_n = (right0 + right1) as f64;
            let weighted =
                left_n / n * gini(left0, left1) + right_n / n * gini(right0, right1);
            let better = match &best {
                None => true,
                // strict improvement only; scan order already visits lower
                // features and lower thresholds first
                Some(b) => weighted < b.weighted_gini,
            };
            if better {
                best = Some(BestSplit {
                    feature,
                    threshold,
                    weighted_gini: weighted,
                });
            }
        }
    }
    best
}

fn build<T: Scalar>(
    rows: &Matrix<T>,
    labels: &[u8],
    idx: &[usize],
    depth: usize,
    cfg: &TrainConfig,
) -> TreeNode<T> {
    let n1 = idx.iter().filter(|&&i| labels[i] == 1).count();
    let n0 = idx.len() - n1;
    let leaf = || TreeNode::Leaf {
        proba: T::from_f64_(n1 as f64 / idx.len() as f64),
        samples: idx.len(),
    };
    if n0 == 0 || n1 == 0 || depth >= cfg.tree_max_depth || idx.len() < cfg.tree_min_samples_split
    {
        return leaf();
    }
    let parent = gini(n0, n1);
    let split = match best_split(rows, labels, idx) {
        Some(s) if s.weighted_gini < parent => s,
        _ => return leaf(),
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| rows.row(i)[split.feature] <= split.threshold);
    if left_idx.is_empty() || right_idx.is_empty() {
        return leaf();
    }
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(build(rows, labels, &left_idx, depth + 1, cfg)),
        right: Box::new(build(rows, labels, &right_idx, depth + 1, cfg)),
    }
}

impl<T: Scalar> DecisionTreeModel<T> {
    pub fn train(data: &LabeledDataset<T>, cfg: &TrainConfig) -> Result<Self, ModelError> {
        let idx: Vec<usize> = (0..data.len()).collect();
        let root = build(&data.rows, &data.labels, &idx, 0, cfg);
        Ok(DecisionTreeModel {
            root,
            width: data.width(),
            max_depth: cfg.tree_max_depth,
            min_samples_split: cfg.tree_min_samples_split,
        })
    }

    fn leaf_proba(&self, row: &[T]) -> T {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { proba, .. } => return *proba,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn predict_proba(&self, rows: &Matrix<T>) -> Vec<T> {
        rows.iter_rows().map(|row| self.leaf_proba(row)).collect()
    }

    pub fn predict(&self, rows: &Matrix<T>) -> Vec<u8> {
        self.predict_proba(rows).into_iter().map(decide).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_util::dataset;
    use super::super::{train, ClassifierKind, TrainConfig, TrainedModel};
    use super::*;

    fn cfg() -> TrainConfig {
        TrainConfig::new(ClassifierKind::DecisionTree)
    }

    #[test]
    fn single_threshold_rule_reproduced() {
        let ds = dataset(
            &[vec![-2.0], vec![-1.0], vec![0.5], vec![1.0], vec![2.0]],
            &[0, 0, 1, 1, 1],
        );
        let m = train(&ds, &cfg()).unwrap();
        assert_eq!(m.predict(&ds.rows).unwrap(), vec![0, 0, 1, 1, 1]);
        if let TrainedModel::DecisionTree(t) = &m {
            match &t.root {
                TreeNode::Split { feature, threshold, .. } => {
                    assert_eq!(*feature, 0);
                    assert_eq!(*threshold, (-1.0 + 0.5) / 2.0);
                }
                _ => panic!("expected one split"),
            }
        }
    }

    #[test]
    fn consistent_data_fit_exactly() {
        // label-consistent 2-D data, unlimited depth within default 12
        let rows: Vec<Vec<f64>> = (0..32)
            .map(|i| vec![(i % 8) as f64, (i / 8) as f64])
            .collect();
        let labels: Vec<u8> = (0..32).map(|i| ((i * 5 + 3) % 7 % 2) as u8).collect();
        let ds = dataset(&rows, &labels);
        let m = train(&ds, &cfg()).unwrap();
        assert_eq!(m.predict(&ds.rows).unwrap(), labels);
    }

    #[test]
    fn pure_node_is_leaf() {
        let ds = dataset(&[vec![1.0], vec![2.0], vec![3.0]], &[1, 1, 1]);
        let m = train(&ds, &cfg()).unwrap();
        if let TrainedModel::DecisionTree(t) = &m {
            assert!(matches!(t.root, TreeNode::Leaf { .. }));
        }
        assert_eq!(m.predict(&ds.rows).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn every_split_strictly_decreases_gini() {
        fn check(node: &TreeNode<f64>, rows: &Matrix<f64>, labels: &[u8], idx: &[usize]) {
            if let TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } = node
            {
                let n1 = idx.iter().filter(|&&i| labels[i] == 1).count();
                let parent = gini(idx.len() - n1, n1);
                let (li, ri): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| rows.row(i)[*feature] <= *threshold);
                let l1 = li.iter().filter(|&&i| labels[i] == 1).count();
                let r1 = ri.iter().filter(|&&i| labels[i] == 1).count();
                let weighted = li.len() as f64 / idx.len() as f64 * gini(li.len() - l1, l1)
                    + ri.len() as f64 / idx.len() as f64 * gini(ri.len() - r1, r1);
                assert!(weighted < parent, "split did not decrease impurity");
                check(left, rows, labels, &li);
                check(right, rows, labels, &ri);
            }
        }
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()])
            .collect();
        let labels: Vec<u8> = (0..40).map(|i| ((i * 11 + 2) % 5 % 2) as u8).collect();
        let ds = dataset(&rows, &labels);
        let m = train(&ds, &cfg()).unwrap();
        if let TrainedModel::DecisionTree(t) = &m {
            let idx: Vec<usize> = (0..40).collect();
            check(&t.root, &ds.rows, &ds.labels, &idx);
        }
    }

    #[test]
    fn single_class_predicts_constantly() {
        let ds = dataset(&[vec![1.0], vec![2.0]], &[0, 0]);
        let m = train(&ds, &cfg()).unwrap();
        let q = Matrix::from_rows(&[vec![-100.0], vec![100.0]]);
        assert_eq!(m.predict(&q).unwrap(), vec![0, 0]);
    }
}
