//! Splitting, k-fold cross-validation, confusion-matrix metrics, and
//! CV-based model selection. All plans are seeded and fully deterministic.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{self, ClassifierKind, TrainConfig};
use crate::features::LabeledDataset;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("truth and prediction lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty confusion matrix")]
    EmptyMatrix,
    #[error("invalid fold count {k} for {n} rows")]
    BadK { k: usize, n: usize },
    #[error("split ratio {0} outside (0, 1)")]
    BadRatio(f64),
    #[error("stratum for class {0} has no rows")]
    DegenerateStratum(u8),
    #[error("training failed for {kind:?}: {source}")]
    Training {
        kind: ClassifierKind,
        #[source]
        source: classifiers::ModelError,
    },
}

/// Binary confusion counts; the positive class is Fall = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Swaps the positive class.
    pub fn flipped(&self) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True when a zero denominator forced precision, recall, or F1 to 0.
    pub undefined: bool,
}

pub fn confusion(truth: &[u8], pred: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if truth.len() != pred.len() {
        return Err(EvalError::LengthMismatch(truth.len(), pred.len()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in truth.iter().zip(pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fp += 1,
            _ => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricSet, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let mut undefined = false;
    let mut ratio = |num: usize, den: usize| -> f64 {
        if den == 0 {
            undefined = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = if precision + recall == 0.0 {
        undefined = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(MetricSet {
        accuracy,
        precision,
        recall,
        f1,
        undefined,
    })
}

/// Metrics with each class taken as positive in turn: (class 0, class 1).
pub fn per_class_metrics(truth: &[u8], pred: &[u8]) -> Result<(MetricSet, MetricSet), EvalError> {
    let cm = confusion(truth, pred)?;
    Ok((metrics(&cm.flipped())?, metrics(&cm)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

fn strata_of(n: usize, strata: Option<&[u8]>) -> Result<Vec<Vec<usize>>, EvalError> {
    match strata {
        None => Ok(vec![(0..n).collect()]),
        Some(labels) => {
            let mut s0 = Vec::new();
            let mut s1 = Vec::new();
            for (i, &l) in labels.iter().enumerate() {
                if l == 0 {
                    s0.push(i)
                } else {
                    s1.push(i)
                }
            }
            if s0.is_empty() {
                return Err(EvalError::DegenerateStratum(0));
            }
            if s1.is_empty() {
                return Err(EvalError::DegenerateStratum(1));
            }
            Ok(vec![s0, s1])
        }
    }
}

/// Stratified shuffled split; per stratum the train size is
/// floor(ratio * stratum size).
pub fn train_test_split(
    n: usize,
    ratio: f64,
    seed: u64,
    strata: Option<&[u8]>,
) -> Result<SplitPlan, EvalError> {
    if !(0.0..1.0).contains(&ratio) || ratio == 0.0 {
        return Err(EvalError::BadRatio(ratio));
    }
    if n < 2 {
        return Err(EvalError::BadK { k: 2, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut stratum in strata_of(n, strata)? {
        stratum.shuffle(&mut rng);
        let cut = (ratio * stratum.len() as f64).floor() as usize;
        train.extend_from_slice(&stratum[..cut]);
        test.extend_from_slice(&stratum[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan {
        train,
        test,
        seed,
        ratio,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

/// Stratified folds with sizes differing by at most one; the dealing
/// cursor runs across strata so overall fold sizes stay balanced too.
pub fn k_fold(n: usize, k: usize, seed: u64, strata: Option<&[u8]>) -> Result<FoldPlan, EvalError> {
    if k < 2 || k > n {
        return Err(EvalError::BadK { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut cursor = 0usize;
    for mut stratum in strata_of(n, strata)? {
        stratum.shuffle(&mut rng);
        for i in stratum {
            folds[cursor % k].push(i);
            cursor += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan { folds, seed })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvResult {
    pub kind: ClassifierKind,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

/// Mean held-out accuracy over K folds, per config. A config whose
/// training fails on any fold is reported as an error entry.
pub fn cross_validate<T: Scalar>(
    data: &LabeledDataset<T>,
    cfgs: &[TrainConfig],
    k: usize,
    seed: u64,
    stratify: bool,
) -> Result<Vec<Result<CvResult, EvalError>>, EvalError> {
    let strata = stratify.then_some(data.labels.as_slice());
    let plan = k_fold(data.len(), k, seed, strata)?;
    let results = cfgs
        .iter()
        .map(|cfg| {
            let mut fold_accuracies = Vec::with_capacity(k);
            // fixed iteration order over fold index keeps sums deterministic
            for held_out in 0..k {
                let test_idx = &plan.folds[held_out];
                let train_idx: Vec<usize> = (0..k)
                    .filter(|&f| f != held_out)
                    .flat_map(|f| plan.folds[f].iter().copied())
                    .collect();
                let train_set = data.select(&train_idx);
                let model = classifiers::train(&train_set, cfg).map_err(|e| EvalError::Training {
                    kind: cfg.kind,
                    source: e,
                })?;
                let test_set = data.select(test_idx);
                let pred = model.predict(&test_set.rows).map_err(|e| EvalError::Training {
                    kind: cfg.kind,
                    source: e,
                })?;
                let cm = confusion(&test_set.labels, &pred)?;
                fold_accuracies.push(metrics(&cm)?.accuracy);
            }
            let mean_accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
            Ok(CvResult {
                kind: cfg.kind,
                fold_accuracies,
                mean_accuracy,
            })
        })
        .collect();
    Ok(results)
}

/// Highest mean CV accuracy; ties go to the earlier kind in enum order.
pub fn select_best(results: &[Result<CvResult, EvalError>]) -> Option<(ClassifierKind, f64)> {
    let mut best: Option<(ClassifierKind, f64)> = None;
    for r in results.iter().flatten() {
        let replace = match best {
            None => true,
            Some((bk, ba)) => {
                r.mean_accuracy > ba || (r.mean_accuracy == ba && r.kind < bk)
            }
        };
        if replace {
            best = Some((r.kind, r.mean_accuracy));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_enumeration() {
        let cm = confusion(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!(
            cm,
            ConfusionMatrix {
                tp: 1,
                fn_: 1,
                tn: 1,
                fp: 1
            }
        );
    }

    #[test]
    fn perfect_and_inverted() {
        let t = [1, 0, 1, 0, 1];
        let cm = confusion(&t, &t).unwrap();
        assert_eq!((cm.fp, cm.fn_), (0, 0));
        let inv: Vec<u8> = t.iter().map(|&x| 1 - x).collect();
        let cm = confusion(&t, &inv).unwrap();
        assert_eq!((cm.tp, cm.tn), (0, 0));
    }

    #[test]
    fn metric_arithmetic() {
        let cm = ConfusionMatrix {
            tp: 95,
            fn_: 5,
            fp: 3,
            tn: 97,
        };
        let m = metrics(&cm).unwrap();
        assert!((m.recall - 0.95).abs() < 1e-4);
        assert!((m.precision - 0.9694).abs() < 1e-4);
        assert!((m.accuracy - 0.96).abs() < 1e-4);
        assert!((m.f1 - 0.9596).abs() < 1e-4);
        assert!(!m.undefined);
    }

    #[test]
    fn zero_denominator_flagged() {
        let cm = ConfusionMatrix {
            tp: 0,
            fp: 0,
            tn: 5,
            fn_: 5,
        };
        let m = metrics(&cm).unwrap();
        assert_eq!(m.precision, 0.0);
        assert!(m.undefined);
    }

    #[test]
    fn per_class_symmetry() {
        // symmetric matrix: class-0 and class-1 metrics coincide
        let truth = [0, 0, 0, 1, 1, 1];
        let pred = [0, 0, 1, 1, 1, 0];
        let (c0, c1) = per_class_metrics(&truth, &pred).unwrap();
        assert_eq!(c0, c1);
    }

    #[test]
    fn per_class_perfect() {
        let t = [0, 1, 0, 1];
        let (c0, c1) = per_class_metrics(&t, &t).unwrap();
        for m in [c0, c1] {
            assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn split_80_20_balanced() {
        let labels: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let plan = train_test_split(100, 0.8, 7, Some(&labels)).unwrap();
        assert_eq!(plan.train.len(), 80);
        assert_eq!(plan.test.len(), 20);
        let mut all: Vec<usize> = plan.train.iter().chain(&plan.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn split_floor_rule_unstratified() {
        let plan = train_test_split(10, 0.8, 1, None).unwrap();
        assert_eq!((plan.train.len(), plan.test.len()), (8, 2));
    }

    #[test]
    fn split_deterministic() {
        let labels: Vec<u8> = (0..50).map(|i| (i % 3 == 0) as u8).collect();
        let a = train_test_split(50, 0.8, 42, Some(&labels)).unwrap();
        let b = train_test_split(50, 0.8, 42, Some(&labels)).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        let c = train_test_split(50, 0.8, 43, Some(&labels)).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn folds_partition() {
        let plan = k_fold(10, 5, 3, None).unwrap();
        assert_eq!(plan.folds.len(), 5);
        assert!(plan.folds.iter().all(|f| f.len() == 2));
        let mut all: Vec<usize> = plan.folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn fold_sizes_balanced_remainder() {
        let plan = k_fold(7, 3, 0, None).unwrap();
        let mut sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 3]);
    }

    #[test]
    fn bad_k_rejected() {
        assert!(k_fold(5, 1, 0, None).is_err());
        assert!(k_fold(5, 6, 0, None).is_err());
    }

    #[test]
    fn degenerate_stratum_rejected() {
        let labels = vec![0u8; 10];
        assert!(train_test_split(10, 0.8, 0, Some(&labels)).is_err());
    }

    #[test]
    fn selection_tiebreak_uses_enum_order() {
        let results = vec![
            Ok(CvResult {
                kind: ClassifierKind::Knn,
                fold_accuracies: vec![0.9],
                mean_accuracy: 0.9,
            }),
            Ok(CvResult {
                kind: ClassifierKind::LogReg,
                fold_accuracies: vec![0.9],
                mean_accuracy: 0.9,
            }),
        ];
        assert_eq!(select_best(&results), Some((ClassifierKind::LogReg, 0.9)));
    }
}
