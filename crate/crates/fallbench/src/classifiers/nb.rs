//! Gaussian naive Bayes with per-class per-feature mean and variance.
//! Variances are floored at a fraction of the largest overall feature
//! variance so constant features cannot produce infinite densities.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::features::LabeledDataset;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

const VAR_FLOOR_FACTOR: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianNbModel<T> {
    /// Per class: (means, variances), indexed by label.
    pub class_stats: [Option<ClassStats<T>>; 2],
    pub log_priors: [T; 2],
    pub var_floor: T,
    pub width: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassStats<T> {
    pub means: Vec<T>,
    pub variances: Vec<T>,
}

fn class_stats<T: Scalar>(
    rows: &Matrix<T>,
    labels: &[u8],
    class: u8,
    floor: T,
) -> Option<ClassStats<T>> {
    let idx: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == class)
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return None;
    }
    let d = rows.cols();
    let n = T::from_usize_(idx.len());
    let mut means = vec![T::zero(); d];
    for &i in &idx {
        for (m, &x) in means.iter_mut().zip(rows.row(i)) {
            *m += x;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut variances = vec![T::zero(); d];
    for &i in &idx {
        for ((v, &x), &m) in variances.iter_mut().zip(rows.row(i)).zip(&means) {
            let dlt = x - m;
            *v += dlt * dlt;
        }
    }
    for v in &mut variances {
        *v = (*v / n).max(floor);
    }
    Some(ClassStats { means, variances })
}

impl<T: Scalar> GaussianNbModel<T> {
    pub fn train(data: &LabeledDataset<T>) -> Result<Self, ModelError> {
        let n = data.len();
        let n1 = data.labels.iter().filter(|&&l| l == 1).count();
        let n0 = n - n1;

        // overall per-feature variance determines the floor
        let overall = class_stats(&data.rows, &vec![0u8; n], 0, T::zero())
            .expect("n >= 2 guaranteed by train()");
        let max_var = overall
            .variances
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v));
        let floor = (T::from_f64_(VAR_FLOOR_FACTOR) * max_var).max(T::from_f64_(1e-300));

        let stats0 = class_stats(&data.rows, &data.labels, 0, floor);
        let stats1 = class_stats(&data.rows, &data.labels, 1, floor);
        let log_prior = |k: usize| {
            if k == 0 {
                T::neg_infinity()
            } else {
                T::from_f64_((k as f64 / n as f64).ln())
            }
        };
        Ok(GaussianNbModel {
            class_stats: [stats0, stats1],
            log_priors: [log_prior(n0), log_prior(n1)],
            var_floor: floor,
            width: data.width(),
        })
    }

    fn log_joint(&self, row: &[T], class: usize) -> T {
        let stats = match &self.class_stats[class] {
            Some(s) => s,
            None => return T::neg_infinity(),
        };
        let two = T::from_f64_(2.0);
        let two_pi = T::from_f64_(std::f64::consts::TAU);
        let mut acc = self.log_priors[class];
        for ((&x, &m), &v) in row.iter().zip(&stats.means).zip(&stats.variances) {
            let dlt = x - m;
            acc -= (two_pi * v).ln() / two + dlt * dlt / (two * v);
        }
        acc
    }

    pub fn predict_proba(&self, rows: &Matrix<T>) -> Vec<T> {
        let one = T::one();
        rows.iter_rows()
            .map(|row| {
                let l0 = self.log_joint(row, 0);
                let l1 = self.log_joint(row, 1);
                if l1 == T::neg_infinity() {
                    return T::zero();
                }
                if l0 == T::neg_infinity() {
                    return one;
                }
                // posterior via the log-odds, numerically stable
                let z = l1 - l0;
                if z >= T::zero() {
                    one / (one + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (one + e)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_util::dataset;
    use super::*;

    #[test]
    fn single_class_predicts_it_everywhere() {
        let ds = dataset(&[vec![1.0], vec![2.0], vec![3.0]], &[1, 1, 1]);
        let m = GaussianNbModel::train(&ds).unwrap();
        let q = Matrix::from_rows(&[vec![-50.0], vec![50.0]]);
        let p = m.predict_proba(&q);
        assert_eq!(p, vec![1.0, 1.0]);
    }

    #[test]
    fn identical_likelihoods_follow_priors() {
        // identical class-conditional stats, skewed priors -> always class 0
        let pattern = [0.0, 1.0, 2.0];
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for _ in 0..10 {
            rows.extend(pattern.iter().map(|&v| vec![v]));
        }
        let mut labels = vec![0u8; 27];
        labels.extend([1, 1, 1]);
        let ds = dataset(&rows, &labels);
        let m = GaussianNbModel::train(&ds).unwrap();
        let q = Matrix::from_rows(&[vec![0.0], vec![1.5], vec![2.0]]);
        for p in m.predict_proba(&q) {
            assert!(p < 0.5, "posterior must equal the prior, favoring class 0");
        }
    }

    #[test]
    fn hand_computed_log_posterior() {
        // 2 features, 4 points: class 0 at (0,0),(2,0); class 1 at (10,4),(12,4)
        // class 0: mean (1,0), var (1, floored); class 1: mean (11,4), var (1, floored)
        let ds = dataset(
            &[
                vec![0.0, 0.0],
                vec![2.0, 0.0],
                vec![10.0, 4.0],
                vec![12.0, 4.0],
            ],
            &[0, 0, 1, 1],
        );
        let m = GaussianNbModel::train(&ds).unwrap();
        let q = Matrix::from_rows(&[vec![1.0, 0.0], vec![11.0, 4.0]]);
        // at the class-0 mean: log-odds = l1 - l0 with both feature-2 terms
        // floored identically; feature 1 contributes -(1-11)^2/2 vs 0
        let p = m.predict_proba(&q);
        assert!(p[0] < 1e-9);
        assert!(p[1] > 1.0 - 1e-9);

        // independent hand computation of the feature-1 log-odds at x = 5.5:
        // -(5.5-11)^2/2 + (5.5-1)^2/2 = (20.25 - 30.25)/2 = -5
        // feature-2 at 2.0 (floored var f): -(2-4)^2/(2f) + (2-0)^2/(2f) = 0
        let probe = Matrix::from_rows(&[vec![5.5, 2.0]]);
        let expected = 1.0 / (1.0 + 5.0f64.exp());
        assert!((m.predict_proba(&probe)[0] - expected).abs() < 1e-9);
    }

    #[test]
    fn posteriors_normalize() {
        let ds = dataset(
            &[vec![0.0, 1.0], vec![1.0, 2.0], vec![5.0, 5.0], vec![6.0, 7.0]],
            &[0, 0, 1, 1],
        );
        let m = GaussianNbModel::train(&ds).unwrap();
        // probability of class 1 plus probability of class 0 is 1 by
        // construction of the log-odds sigmoid; spot-check finiteness
        let q = Matrix::from_rows(&[vec![3.0, 3.0], vec![-2.0, 9.0]]);
        for p in m.predict_proba(&q) {
            assert!((0.0..=1.0).contains(&p));
        }
    }
}
