//! Feature views over parsed trials: the 9-attribute raw view and the
//! 3-magnitude sum-vector-magnitude view (one magnitude per sensor triplet).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{calibrate, label_of, ActivityCode, SubjectId, TrialRecord, CHANNELS};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("non-finite input to magnitude: ({0}, {1}, {2})")]
    NonFinite(f64, f64, f64),
    #[error("empty input")]
    EmptyInput,
    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    /// All nine per-row sensor attributes in file order.
    Raw9,
    /// One Euclidean magnitude per sensor triplet.
    Svm3,
}

impl FeatureMode {
    pub fn width(self) -> usize {
        match self {
            FeatureMode::Raw9 => 9,
            FeatureMode::Svm3 => 3,
        }
    }
}

/// Where a dataset row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub subject: SubjectId,
    pub activity: ActivityCode,
    pub trial: u32,
    pub row: usize,
}

/// Feature matrix plus binary labels and per-row provenance.
#[derive(Debug, Clone)]
pub struct LabeledDataset<T> {
    pub rows: Matrix<T>,
    pub labels: Vec<u8>,
    pub provenance: Vec<Provenance>,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.rows.cols()
    }

    pub fn select(&self, idx: &[usize]) -> LabeledDataset<T> {
        LabeledDataset {
            rows: self.rows.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            provenance: idx.iter().map(|&i| self.provenance[i]).collect(),
        }
    }
}

/// Euclidean magnitude sqrt(x^2 + y^2 + z^2).
pub fn svm_magnitude<T: Scalar>(x: T, y: T, z: T) -> Result<T, FeatureError> {
    if !(x.is_finite() && y.is_finite() && z.is_finite()) {
        return Err(FeatureError::NonFinite(
            x.to_f64().unwrap_or(f64::NAN),
            y.to_f64().unwrap_or(f64::NAN),
            z.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok((x * x + y * y + z * z).sqrt())
}

fn sample_to_row<T: Scalar>(
    channels: &[T; CHANNELS],
    mode: FeatureMode,
) -> Result<Vec<T>, FeatureError> {
    match mode {
        FeatureMode::Raw9 => Ok(channels.to_vec()),
        FeatureMode::Svm3 => (0..3)
            .map(|s| svm_magnitude(channels[3 * s], channels[3 * s + 1], channels[3 * s + 2]))
            .collect(),
    }
}

/// Builds the labeled dataset: one row per retained sample, in trial order
/// then sample order. `calibrated` selects physical units vs raw counts.
pub fn build_dataset<T: Scalar>(
    trials: &[TrialRecord],
    mode: FeatureMode,
    calibrated: bool,
) -> Result<LabeledDataset<T>, FeatureError> {
    if trials.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let total: usize = trials.iter().map(|t| t.samples.len()).sum();
    let mut rows = Matrix::zeros(total, mode.width());
    let mut labels = Vec::with_capacity(total);
    let mut provenance = Vec::with_capacity(total);
    let mut out_idx = 0usize;
    for trial in trials {
        let label = label_of(trial.activity);
        for (i, sample) in trial.samples.iter().enumerate() {
            let channels: [T; CHANNELS] = if calibrated {
                calibrate(sample)
            } else {
                let mut c = [T::zero(); CHANNELS];
                for (slot, &v) in c.iter_mut().zip(sample) {
                    *slot = T::from_f64_(v as f64);
                }
                c
            };
            let row = sample_to_row(&channels, mode)?;
            rows.row_mut(out_idx).copy_from_slice(&row);
            labels.push(label);
            provenance.push(Provenance {
                subject: trial.subject,
                activity: trial.activity,
                trial: trial.trial,
                row: i,
            });
            out_idx += 1;
        }
    }
    Ok(LabeledDataset {
        rows,
        labels,
        provenance,
    })
}

/// Per-column standardization parameters fit on training rows only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StandardizeParams<T> {
    pub means: Vec<T>,
    pub stddevs: Vec<T>,
}

pub fn standardize_fit<T: Scalar>(train: &Matrix<T>) -> Result<StandardizeParams<T>, FeatureError> {
    if train.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let n = T::from_usize_(train.rows());
    let d = train.cols();
    let mut means = vec![T::zero(); d];
    for row in train.iter_rows() {
        for (m, &v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut vars = vec![T::zero(); d];
    for row in train.iter_rows() {
        for ((v, &x), &m) in vars.iter_mut().zip(row).zip(&means) {
            let dlt = x - m;
            *v += dlt * dlt;
        }
    }
    let stddevs = vars.into_iter().map(|v| (v / n).sqrt()).collect();
    Ok(StandardizeParams { means, stddevs })
}

/// Column-wise z-score; zero-stddev columns pass through unchanged.
pub fn standardize_apply<T: Scalar>(
    params: &StandardizeParams<T>,
    data: &Matrix<T>,
) -> Result<Matrix<T>, FeatureError> {
    if data.cols() != params.means.len() {
        return Err(FeatureError::WidthMismatch {
            expected: params.means.len(),
            got: data.cols(),
        });
    }
    let mut out = data.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        for ((x, &m), &s) in row.iter_mut().zip(&params.means).zip(&params.stddevs) {
            if s > T::zero() {
                *x = (*x - m) / s;
            }
        }
    }
    Ok(out)
}
