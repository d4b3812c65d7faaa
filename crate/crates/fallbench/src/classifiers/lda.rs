//! Linear discriminant analysis with a pooled within-class covariance.
//! A small ridge proportional to the trace keeps the pooled matrix
//! invertible when decimated cohorts produce constant columns.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::features::LabeledDataset;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

const RIDGE_FACTOR: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaModel<T> {
    pub mean0: Vec<T>,
    pub mean1: Vec<T>,
    /// Inverse of the (ridged) pooled covariance, row-major d x d.
    pub cov_inv: Vec<T>,
    pub log_prior0: T,
    pub log_prior1: T,
}

/// In-place Gauss-Jordan inverse of a row-major d x d matrix.
fn invert<T: Scalar>(mat: &mut [T], d: usize) -> Result<Vec<T>, ModelError> {
    let mut inv = vec![T::zero(); d * d];
    for i in 0..d {
        inv[i * d + i] = T::one();
    }
    for col in 0..d {
        let mut pivot = col;
        for r in col + 1..d {
            if mat[r * d + col].abs() > mat[pivot * d + col].abs() {
                pivot = r;
            }
        }
        let p = mat[pivot * d + col];
        if p.abs() <= T::from_f64_(1e-300) {
            return Err(ModelError::DegenerateData(
                "singular pooled covariance".into(),
            ));
        }
        if pivot != col {
            for c in 0..d {
                mat.swap(col * d + c, pivot * d + c);
                inv.swap(col * d + c, pivot * d + c);
            }
        }
        let p = mat[col * d + col];
        for c in 0..d {
            mat[col * d + c] /= p;
            inv[col * d + c] /= p;
        }
        for r in 0..d {
            if r == col {
                continue;
            }
            let f = mat[r * d + col];
            if f == T::zero() {
                continue;
            }
            for c in 0..d {
                let m = mat[col * d + c];
                let i_ = inv[col * d + c];
                mat[r * d + c] -= f * m;
                inv[r * d + c] -= f * i_;
            }
        }
    }
    Ok(inv)
}

impl<T: Scalar> LdaModel<T> {
    pub fn train(data: &LabeledDataset<T>) -> Result<Self, ModelError> {
        let d = data.width();
        let n = data.len();
        let n1 = data.labels.iter().filter(|&&l| l == 1).count();
        let n0 = n - n1;
        if n0 == 0 || n1 == 0 {
            return Err(ModelError::DegenerateData(
                "LDA needs both classes present".into(),
            ));
        }

        let mut mean0 = vec![T::zero(); d];
        let mut mean1 = vec![T::zero(); d];
        for (row, &label) in data.rows.iter_rows().zip(&data.labels) {
            let target = if label == 0 { &mut mean0 } else { &mut mean1 };
            for (m, &x) in target.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut mean0 {
            *m /= T::from_usize_(n0);
        }
        for m in &mut mean1 {
            *m /= T::from_usize_(n1);
        }

        // pooled within-class scatter / (n - 2)
        let mut cov = vec![T::zero(); d * d];
        for (row, &label) in data.rows.iter_rows().zip(&data.labels) {
            let mean = if label == 0 { &mean0 } else { &mean1 };
            for i in 0..d {
                let di = row[i] - mean[i];
                for j in i..d {
                    let dj = row[j] - mean[j];
                    cov[i * d + j] += di * dj;
                }
            }
        }
        let denom = T::from_usize_(n.saturating_sub(2).max(1));
        for i in 0..d {
            for j in i..d {
                let v = cov[i * d + j] / denom;
                cov[i * d + j] = v;
                cov[j * d + i] = v;
            }
        }
        let trace = (0..d).fold(T::zero(), |acc, i| acc + cov[i * d + i]);
        let ridge = T::from_f64_(RIDGE_FACTOR) * trace / T::from_usize_(d);
        let ridge = if ridge > T::zero() {
            ridge
        } else {
            T::from_f64_(1e-12)
        };
        for i in 0..d {
            cov[i * d + i] += ridge;
        }
        let cov_inv = invert(&mut cov, d)?;

        Ok(LdaModel {
            mean0,
            mean1,
            cov_inv,
            log_prior0: T::from_f64_((n0 as f64 / n as f64).ln()),
            log_prior1: T::from_f64_((n1 as f64 / n as f64).ln()),
        })
    }

    /// Linear discriminant score for one class:
    /// x . S^-1 mu - mu . S^-1 mu / 2 + log prior.
    fn score(&self, row: &[T], mean: &[T], log_prior: T) -> T {
        let d = mean.len();
        let mut sinv_mu = vec![T::zero(); d];
        for i in 0..d {
            let mut acc = T::zero();
            for j in 0..d {
                acc += self.cov_inv[i * d + j] * mean[j];
            }
            sinv_mu[i] = acc;
        }
        let x_term = row
            .iter()
            .zip(&sinv_mu)
            .fold(T::zero(), |acc, (&x, &s)| acc + x * s);
        let mu_term = mean
            .iter()
            .zip(&sinv_mu)
            .fold(T::zero(), |acc, (&m, &s)| acc + m * s);
        x_term - mu_term / T::from_f64_(2.0) + log_prior
    }

    pub fn predict_proba(&self, rows: &Matrix<T>) -> Vec<T> {
        let one = T::one();
        rows.iter_rows()
            .map(|row| {
                let d0 = self.score(row, &self.mean0, self.log_prior0);
                let d1 = self.score(row, &self.mean1, self.log_prior1);
                let z = d1 - d0;
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
