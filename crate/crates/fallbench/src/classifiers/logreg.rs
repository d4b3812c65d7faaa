//! Logistic regression trained by full-batch gradient descent on the mean
//! log-loss. Features are standardized internally for optimization; the
//! learned coefficients are folded back to the original feature space.

use serde::{Deserialize, Serialize};

use super::{ModelError, TrainConfig};
use crate::features::{standardize_fit, LabeledDataset};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRegModel<T> {
    pub weights: Vec<T>,
    pub bias: T,
    pub learning_rate: f64,
    pub epochs: usize,
}

fn sigmoid<T: Scalar>(z: T) -> T {
    let one = T::one();
    if z >= T::zero() {
        one / (one + (-z).exp())
    } else {
        let e = z.exp();
        e / (one + e)
    }
}

/// Mean log-loss and its analytic gradient at (weights, bias).
/// Exposed so tests can check the gradient against finite differences.
pub fn logreg_loss_and_grad<T: Scalar>(
    rows: &Matrix<T>,
    labels: &[u8],
    weights: &[T],
    bias: T,
) -> (T, Vec<T>, T) {
    let n = T::from_usize_(rows.rows());
    let one = T::one();
    let mut loss = T::zero();
    let mut grad_w = vec![T::zero(); weights.len()];
    let mut grad_b = T::zero();
    for (row, &label) in rows.iter_rows().zip(labels) {
        let z = row
            .iter()
            .zip(weights)
            .fold(bias, |acc, (&x, &w)| acc + x * w);
        let p = sigmoid(z);
        let y = T::from_f64_(label as f64);
        // per-row log-loss is softplus(z) - y*z, computed stably
        let softplus = z.max(T::zero()) + (one + (-z.abs()).exp()).ln();
        loss += softplus - y * z;
        let delta = p - y;
        for (g, &x) in grad_w.iter_mut().zip(row) {
            *g += delta * x;
        }
        grad_b += delta;
    }
    loss /= n;
    for g in &mut grad_w {
        *g /= n;
    }
    grad_b /= n;
    (loss, grad_w, grad_b)
}

impl<T: Scalar> LogRegModel<T> {
    pub fn train(data: &LabeledDataset<T>, cfg: &TrainConfig) -> Result<Self, ModelError> {
        if !data.labels.contains(&0) || !data.labels.contains(&1) {
            return Err(ModelError::DegenerateData(
                "logistic regression needs both classes".into(),
            ));
        }
        let params = standardize_fit(&data.rows)
            .map_err(|e| ModelError::DegenerateData(e.to_string()))?;
        let scales: Vec<T> = params
            .stddevs
            .iter()
            .map(|&s| if s > T::zero() { s } else { T::one() })
            .collect();
        let mut scaled = data.rows.clone();
        for i in 0..scaled.rows() {
            let row = scaled.row_mut(i);
            for ((x, &m), &s) in row.iter_mut().zip(&params.means).zip(&scales) {
                *x = (*x - m) / s;
            }
        }

        let lr = T::from_f64_(cfg.logreg_learning_rate);
        let mut weights = vec![T::zero(); data.width()];
        let mut bias = T::zero();
        for _ in 0..cfg.logreg_epochs {
            let (loss, grad_w, grad_b) = logreg_loss_and_grad(&scaled, &data.labels, &weights, bias);
            if !loss.is_finite() {
                return Err(ModelError::NonFiniteLoss);
            }
            for (w, g) in weights.iter_mut().zip(&grad_w) {
                *w -= lr * *g;
            }
            bias -= lr * grad_b;
        }

        // Fold the standardization into the coefficients:
        // w.x_std + b = sum w_j (x_j - m_j)/s_j + b.
        let mut bias_orig = bias;
        let mut weights_orig = Vec::with_capacity(weights.len());
        for ((&w, &m), &s) in weights.iter().zip(&params.means).zip(&scales) {
            weights_orig.push(w / s);
            bias_orig -= w * m / s;
        }
        Ok(LogRegModel {
            weights: weights_orig,
            bias: bias_orig,
            learning_rate: cfg.logreg_learning_rate,
            epochs: cfg.logreg_epochs,
        })
    }

    pub fn predict_proba(&self, rows: &Matrix<T>) -> Vec<T> {
        rows.iter_rows()
            .map(|row| {
                let z = row
                    .iter()
                    .zip(&self.weights)
                    .fold(self.bias, |acc, (&x, &w)| acc + x * w);
                sigmoid(z)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_util::dataset;
    use super::super::{train, ClassifierKind, TrainConfig, TrainedModel};
    use super::*;

    #[test]
    fn zero_model_gives_half() {
        let m = LogRegModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            learning_rate: 0.1,
            epochs: 0,
        };
        let rows = Matrix::from_rows(&[vec![3.0, -7.0], vec![0.0, 0.0]]);
        assert_eq!(m.predict_proba(&rows), vec![0.5, 0.5]);
    }

    #[test]
    fn separable_blobs_reach_full_training_accuracy() {
        // two well-separated 2-D blobs; lr 0.1, 500 epochs
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            let j = i as f64 * 0.1;
            rows.push(vec![j, j + 0.3]);
            labels.push(0u8);
            rows.push(vec![5.0 + j, 5.3 - j]);
            labels.push(1u8);
        }
        let ds = dataset(&rows, &labels);
        let cfg = TrainConfig::new(ClassifierKind::LogReg);
        let model = train(&ds, &cfg).unwrap();
        let pred = model.predict(&ds.rows).unwrap();
        assert_eq!(pred, labels);
    }

    #[test]
    fn single_class_rejected() {
        let ds = dataset(&[vec![1.0], vec![2.0]], &[0, 0]);
        let cfg = TrainConfig::new(ClassifierKind::LogReg);
        assert!(train(&ds, &cfg).is_err());
    }

    #[test]
    fn fold_back_matches_standardized_path() {
        let ds = dataset(
            &[
                vec![100.0, 0.001],
                vec![200.0, 0.002],
                vec![300.0, 0.013],
                vec![400.0, 0.014],
            ],
            &[0, 0, 1, 1],
        );
        let cfg = TrainConfig::new(ClassifierKind::LogReg);
        let model = train(&ds, &cfg).unwrap();
        // predictions on raw features must separate despite the scale gap
        if let TrainedModel::LogReg(m) = &model {
            assert!(m.weights.iter().all(|w| w.is_finite()));
        }
        assert_eq!(model.predict(&ds.rows).unwrap(), vec![0, 0, 1, 1]);
    }
}
