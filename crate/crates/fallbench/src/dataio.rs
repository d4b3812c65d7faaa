//! Flat CSV formats: the per-cohort raw-sample cache, the feature-matrix
//! dump for external cross-checking, and the train/predict row format.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::features::{LabeledDataset, Provenance};
use crate::ingest::{RawSample, TrialRecord, CHANNELS};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum DataIoError {
    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> DataIoError {
    DataIoError::Io {
        path: path.to_string_lossy().into_owned(),
        source,
    }
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> DataIoError {
    DataIoError::Malformed {
        path: path.to_string_lossy().into_owned(),
        line,
        reason: reason.into(),
    }
}

/// Cohort cache: `subject,activity,trial,row,c1..c9,label`, bit-exact integers.
pub fn write_cohort_cache(path: &Path, trials: &[TrialRecord]) -> Result<(), DataIoError> {
    let mut out = String::from("subject,activity,trial,row,c1,c2,c3,c4,c5,c6,c7,c8,c9,label\n");
    for t in trials {
        let label = crate::ingest::label_of(t.activity);
        for (row, sample) in t.samples.iter().enumerate() {
            write!(out, "{},{},{},{}", t.subject, t.activity, t.trial, row).unwrap();
            for v in sample {
                write!(out, ",{v}").unwrap();
            }
            writeln!(out, ",{label}").unwrap();
        }
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Reads a cohort cache back into trial records, preserving order.
pub fn read_cohort_cache(path: &Path) -> Result<Vec<TrialRecord>, DataIoError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut trials: Vec<TrialRecord> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 + CHANNELS + 1 {
            return Err(malformed(path, i + 1, "wrong field count"));
        }
        let subject = fields[0]
            .parse()
            .map_err(|_| malformed(path, i + 1, "bad subject"))?;
        let activity = fields[1]
            .parse()
            .map_err(|_| malformed(path, i + 1, "bad activity"))?;
        let trial: u32 = fields[2]
            .parse()
            .map_err(|_| malformed(path, i + 1, "bad trial"))?;
        let mut sample: RawSample = [0; CHANNELS];
        for (slot, tok) in sample.iter_mut().zip(&fields[4..4 + CHANNELS]) {
            *slot = tok
                .parse()
                .map_err(|_| malformed(path, i + 1, "bad count"))?;
        }
        let same_trial = trials
            .last()
            .is_some_and(|t| t.subject == subject && t.activity == activity && t.trial == trial);
        if same_trial {
            trials.last_mut().unwrap().samples.push(sample);
        } else {
            trials.push(TrialRecord {
                subject,
                activity,
                trial,
                samples: vec![sample],
                source_path: path.to_string_lossy().into_owned(),
            });
        }
    }
    Ok(trials)
}

/// Feature dump: `f1..fd,label`.
pub fn write_dataset_csv<T: Scalar>(
    path: &Path,
    data: &LabeledDataset<T>,
) -> Result<(), DataIoError> {
    let mut out = String::new();
    let header: Vec<String> = (1..=data.width()).map(|i| format!("f{i}")).collect();
    writeln!(out, "{},label", header.join(",")).unwrap();
    for (row, &label) in data.rows.iter_rows().zip(&data.labels) {
        for v in row {
            write!(out, "{v},").unwrap();
        }
        writeln!(out, "{label}").unwrap();
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Reads `f1..fd[,label]` rows; the labels are None when the header has
/// no label column.
pub fn read_dataset_csv<T: Scalar>(
    path: &Path,
) -> Result<(Matrix<T>, Option<Vec<u8>>), DataIoError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(path, 1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let has_label = cols.last() == Some(&"label");
    let width = if has_label { cols.len() - 1 } else { cols.len() };
    if width == 0 {
        return Err(malformed(path, 1, "no feature columns"));
    }
    let mut rows = Matrix::zeros(0, width);
    let mut labels = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(malformed(path, i + 1, "wrong field count"));
        }
        let mut row = Vec::with_capacity(width);
        for tok in &fields[..width] {
            let v: f64 = tok
                .parse()
                .map_err(|_| malformed(path, i + 1, format!("bad number '{tok}'")))?;
            row.push(T::from_f64_(v));
        }
        rows.push_row(&row);
        if has_label {
            let l: u8 = fields[width]
                .parse()
                .map_err(|_| malformed(path, i + 1, "bad label"))?;
            if l > 1 {
                return Err(malformed(path, i + 1, "label must be 0 or 1"));
            }
            labels.push(l);
        }
    }
    Ok((rows, has_label.then_some(labels)))
}

/// Dataset read as a `LabeledDataset` with placeholder provenance, for
/// the standalone train subcommand.
pub fn read_labeled_csv<T: Scalar>(path: &Path) -> Result<LabeledDataset<T>, DataIoError> {
    let (rows, labels) = read_dataset_csv(path)?;
    let labels = labels.ok_or_else(|| malformed(path, 1, "missing label column"))?;
    let prov = Provenance {
        subject: crate::ingest::SubjectId::new(crate::ingest::SubjectGroup::Adult, 1).unwrap(),
        activity: crate::ingest::ActivityCode::new(crate::ingest::ActivityKind::Adl, 1).unwrap(),
        trial: 1,
        row: 0,
    };
    Ok(LabeledDataset {
        provenance: vec![prov; labels.len()],
        rows,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{build_dataset, FeatureMode};
    use crate::ingest::{ActivityCode, ActivityKind, SubjectGroup, SubjectId};

    fn trial() -> TrialRecord {
        TrialRecord {
            subject: SubjectId::new(SubjectGroup::Adult, 2).unwrap(),
            activity: ActivityCode::new(ActivityKind::Fall, 3).unwrap(),
            trial: 4,
            samples: vec![[1, -2, 3, 4, -5, 6, 7, -8, 9], [10; 9]],
            source_path: "t".into(),
        }
    }

    #[test]
    fn cohort_cache_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.csv");
        let trials = vec![trial()];
        write_cohort_cache(&path, &trials).unwrap();
        let back = read_cohort_cache(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].samples, trials[0].samples);
        assert_eq!(back[0].subject, trials[0].subject);
    }

    #[test]
    fn dataset_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let ds: LabeledDataset<f64> =
            build_dataset(&[trial()], FeatureMode::Raw9, false).unwrap();
        write_dataset_csv(&path, &ds).unwrap();
        let (rows, labels) = read_dataset_csv::<f64>(&path).unwrap();
        assert_eq!(rows.rows(), 2);
        assert_eq!(rows.row(0), ds.rows.row(0));
        assert_eq!(labels.unwrap(), ds.labels);
    }

    #[test]
    fn unlabeled_rows_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        std::fs::write(&path, "f1,f2\n1.5,2.5\n-3,4\n").unwrap();
        let (rows, labels) = read_dataset_csv::<f64>(&path).unwrap();
        assert_eq!(rows.rows(), 2);
        assert!(labels.is_none());
    }

    #[test]
    fn malformed_csv_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "f1,label\n1.0\n").unwrap();
        assert!(read_dataset_csv::<f64>(&path).is_err());
    }
}
