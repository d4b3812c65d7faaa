//! From-scratch binary classifiers behind a single train/predict contract:
//! logistic regression, linear discriminant analysis, k-nearest neighbors,
//! a CART decision tree, and Gaussian naive Bayes.

mod knn;
mod lda;
mod logreg;
mod nb;
mod tree;

pub use knn::KnnModel;
pub use lda::LdaModel;
pub use logreg::{logreg_loss_and_grad, LogRegModel};
pub use nb::GaussianNbModel;
pub use tree::{DecisionTreeModel, TreeNode};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::LabeledDataset;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
    #[error("width mismatch: model expects {expected}, rows have {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("non-finite loss during optimization")]
    NonFiniteLoss,
}

/// The five supported methods. Enum order is the documented tie-break
/// order for cross-validated model selection.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LogReg,
    Lda,
    Knn,
    DecisionTree,
    GaussianNb,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::LogReg,
        ClassifierKind::Lda,
        ClassifierKind::Knn,
        ClassifierKind::DecisionTree,
        ClassifierKind::GaussianNb,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            ClassifierKind::LogReg => "LR",
            ClassifierKind::Lda => "LDA",
            ClassifierKind::Knn => "KNN",
            ClassifierKind::DecisionTree => "DT",
            ClassifierKind::GaussianNb => "NB",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "logreg" | "lr" => Ok(ClassifierKind::LogReg),
            "lda" => Ok(ClassifierKind::Lda),
            "knn" => Ok(ClassifierKind::Knn),
            "tree" | "dt" | "decision_tree" => Ok(ClassifierKind::DecisionTree),
            "nb" | "gaussian_nb" | "naive_bayes" => Ok(ClassifierKind::GaussianNb),
            _ => Err(format!("unknown classifier kind '{s}'")),
        }
    }
}

/// Hyperparameters and the seed fixing any stochastic choice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ClassifierKind,
    pub knn_k: usize,
    pub logreg_learning_rate: f64,
    pub logreg_epochs: usize,
    pub tree_max_depth: usize,
    pub tree_min_samples_split: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(kind: ClassifierKind) -> Self {
        TrainConfig {
            kind,
            knn_k: 5,
            logreg_learning_rate: 0.1,
            logreg_epochs: 500,
            tree_max_depth: 12,
            tree_min_samples_split: 2,
            seed: 0,
        }
    }
}

/// A trained classifier: kind tag plus the kind-specific parameter bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel<T> {
    LogReg(LogRegModel<T>),
    Lda(LdaModel<T>),
    Knn(KnnModel<T>),
    DecisionTree(DecisionTreeModel<T>),
    GaussianNb(GaussianNbModel<T>),
}

impl<T: Scalar> TrainedModel<T> {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::LogReg(_) => ClassifierKind::LogReg,
            TrainedModel::Lda(_) => ClassifierKind::Lda,
            TrainedModel::Knn(_) => ClassifierKind::Knn,
            TrainedModel::DecisionTree(_) => ClassifierKind::DecisionTree,
            TrainedModel::GaussianNb(_) => ClassifierKind::GaussianNb,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            TrainedModel::LogReg(m) => m.weights.len(),
            TrainedModel::Lda(m) => m.mean0.len(),
            TrainedModel::Knn(m) => m.train_rows.cols(),
            TrainedModel::DecisionTree(m) => m.width,
            TrainedModel::GaussianNb(m) => m.width,
        }
    }

    /// Per-row class-1 probability, in [0, 1].
    pub fn predict_proba(&self, rows: &Matrix<T>) -> Result<Vec<T>, ModelError> {
        if rows.cols() != self.width() {
            return Err(ModelError::WidthMismatch {
                expected: self.width(),
                got: rows.cols(),
            });
        }
        Ok(match self {
            TrainedModel::LogReg(m) => m.predict_proba(rows),
            TrainedModel::Lda(m) => m.predict_proba(rows),
            TrainedModel::Knn(m) => m.predict_proba(rows),
            TrainedModel::DecisionTree(m) => m.predict_proba(rows),
            TrainedModel::GaussianNb(m) => m.predict_proba(rows),
        })
    }

    /// Binary labels; class 1 iff probability strictly exceeds 0.5, so an
    /// exact 0.5 maps to class 0.
    pub fn predict(&self, rows: &Matrix<T>) -> Result<Vec<u8>, ModelError> {
        Ok(self
            .predict_proba(rows)?
            .into_iter()
            .map(decide)
            .collect())
    }
}

pub(crate) fn decide<T: Scalar>(proba: T) -> u8 {
    let half = T::from_f64_(0.5);
    u8::from(proba > half)
}

/// Trains a model of the configured kind. Deterministic given (data, cfg).
pub fn train<T: Scalar>(
    data: &LabeledDataset<T>,
    cfg: &TrainConfig,
) -> Result<TrainedModel<T>, ModelError> {
    if data.len() < 2 {
        return Err(ModelError::DegenerateData(format!(
            "need at least 2 rows, got {}",
            data.len()
        )));
    }
    match cfg.kind {
        ClassifierKind::LogReg => LogRegModel::train(data, cfg).map(TrainedModel::LogReg),
        ClassifierKind::Lda => LdaModel::train(data).map(TrainedModel::Lda),
        ClassifierKind::Knn => KnnModel::train(data, cfg).map(TrainedModel::Knn),
        ClassifierKind::DecisionTree => {
            DecisionTreeModel::train(data, cfg).map(TrainedModel::DecisionTree)
        }
        ClassifierKind::GaussianNb => GaussianNbModel::train(data).map(TrainedModel::GaussianNb),
    }
}


#[cfg(test)]
mod tests {
    use super::test_util::dataset;
    use super::*;

    #[test]
    fn kind_order_is_tiebreak_order() {
        assert!(ClassifierKind::LogReg < ClassifierKind::Lda);
        assert!(ClassifierKind::Lda < ClassifierKind::Knn);
        assert!(ClassifierKind::Knn < ClassifierKind::DecisionTree);
        assert!(ClassifierKind::DecisionTree < ClassifierKind::GaussianNb);
    }

    #[test]
    fn decision_threshold_maps_half_to_zero() {
        assert_eq!(decide(0.5f64), 0);
        assert_eq!(decide(0.5f64 + 1e-9), 1);
        assert_eq!(decide(0.0f64), 0);
        assert_eq!(decide(1.0f64), 1);
    }

    #[test]
    fn too_few_rows_rejected() {
        let ds = dataset(&[vec![1.0]], &[0]);
        let cfg = TrainConfig::new(ClassifierKind::Knn);
        assert!(train(&ds, &cfg).is_err());
    }

    #[test]
    fn model_json_roundtrip() {
        let ds = dataset(
            &[vec![0.0, 0.0], vec![0.1, 0.0], vec![5.0, 5.0], vec![5.1, 5.0]],
            &[0, 0, 1, 1],
        );
        for kind in ClassifierKind::ALL {
            let mut cfg = TrainConfig::new(kind);
            cfg.knn_k = 1;
            let model = train(&ds, &cfg).unwrap();
            let json = serde_json::to_string(&model).unwrap();
            let back: TrainedModel<f64> = serde_json::from_str(&json).unwrap();
            assert_eq!(
                model.predict(&ds.rows).unwrap(),
                back.predict(&ds.rows).unwrap()
            );
        }
    }
}
