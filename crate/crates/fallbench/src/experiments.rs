//! The six benchmark experiments: three subject cohorts crossed with the
//! two feature views, plus the accuracy-drop summary across cohorts and
//! modes.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{self, ClassifierKind, TrainConfig};
use crate::evaluation::{
    self, confusion, per_class_metrics, select_best, ConfusionMatrix, EvalError, MetricSet,
};
use crate::features::{
    build_dataset, standardize_apply, standardize_fit, FeatureError, FeatureMode, LabeledDataset,
};
use crate::ingest::{load_cohort, scan_catalog, Catalog, IngestError, SubjectId};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Model(#[from] classifiers::ModelError),
    #[error("no cohort subjects present in the catalog")]
    EmptyCohort,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad experiment id {0}, expected 1..=6")]
    BadId(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cohort {
    One,
    Ten,
    All,
}

impl Cohort {
    pub fn label(self) -> &'static str {
        match self {
            Cohort::One => "1 subject",
            Cohort::Ten => "10 subjects",
            Cohort::All => "All subjects",
        }
    }
}

/// Declared cohort convention: One = SA01, Ten = SA01..SA10, All = all 38.
pub fn cohort_subjects(cohort: Cohort) -> Vec<SubjectId> {
    let all = SubjectId::all();
    match cohort {
        Cohort::One => all[..1].to_vec(),
        Cohort::Ten => all[..10].to_vec(),
        Cohort::All => all,
    }
}

/// Full definition of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: u8,
    pub cohort: Cohort,
    pub mode: FeatureMode,
    pub seed: u64,
    pub decimation: usize,
    pub calibrated: bool,
    pub standardize: bool,
    pub tune_k: bool,
    pub stratify: bool,
    pub split_by_trial: bool,
    pub folds: usize,
    pub knn_k: usize,
    /// Overrides the cohort convention when non-empty.
    pub subjects_override: Vec<SubjectId>,
}

impl ExperimentSpec {
    /// Standard definition for ids 1..=6: odd ids use the raw view,
    /// even ids the magnitude view; cohorts grow with the id pair.
    pub fn standard(id: u8, base_seed: u64) -> Result<Self, ExperimentError> {
        if !(1..=6).contains(&id) {
            return Err(ExperimentError::BadId(id));
        }
        let cohort = match id {
            1 | 2 => Cohort::One,
            3 | 4 => Cohort::Ten,
            _ => Cohort::All,
        };
        let mode = if id % 2 == 1 {
            FeatureMode::Raw9
        } else {
            FeatureMode::Svm3
        };
        Ok(ExperimentSpec {
            id,
            cohort,
            mode,
            seed: base_seed + id as u64,
            decimation: 1,
            calibrated: true,
            standardize: false,
            tune_k: false,
            stratify: true,
            split_by_trial: false,
            folds: 10,
            knn_k: 5,
            subjects_override: Vec::new(),
        })
    }

    fn subjects(&self, catalog: &Catalog) -> Result<Vec<SubjectId>, ExperimentError> {
        let wanted = if self.subjects_override.is_empty() {
            cohort_subjects(self.cohort)
        } else {
            self.subjects_override.clone()
        };
        let present = catalog.subjects();
        let chosen: Vec<SubjectId> = wanted
            .into_iter()
            .filter(|s| present.contains(s))
            .collect();
        if chosen.is_empty() {
            return Err(ExperimentError::EmptyCohort);
        }
        Ok(chosen)
    }

    fn config_for(&self, kind: ClassifierKind, knn_k: usize) -> TrainConfig {
        let mut cfg = TrainConfig::new(kind);
        cfg.knn_k = knn_k;
        cfg.seed = self.seed;
        cfg
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    /// Held-out test accuracy per method, keyed by short name order of
    /// `ClassifierKind::ALL`.
    pub test_accuracy: BTreeMap<ClassifierKind, f64>,
    /// Mean k-fold CV accuracy per method.
    pub cv_accuracy: BTreeMap<ClassifierKind, f64>,
    pub selected: ClassifierKind,
    pub selected_cv_accuracy: f64,
    /// Per-class metrics of the selected model on the test rows: (ADL, Fall).
    pub class_metrics: (MetricSet, MetricSet),
    pub confusion: ConfusionMatrix,
    pub rows_total: usize,
    pub rows_train: usize,
    pub rows_test: usize,
    pub knn_k_used: usize,
    pub wall_clock_secs: f64,
}

/// Runs one experiment over an already scanned catalog.
pub fn run_experiment(
    spec: &ExperimentSpec,
    catalog: &Catalog,
) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let subjects = spec.subjects(catalog)?;
    let trials = load_cohort(catalog, &subjects, spec.decimation)?;
    let data: LabeledDataset<f64> = build_dataset(&trials, spec.mode, spec.calibrated)?;

    let strata = spec.stratify.then_some(data.labels.as_slice());
    let plan = if spec.split_by_trial {
        grouped_split(&data, 0.8, spec.seed)?
    } else {
        evaluation::train_test_split(data.len(), 0.8, spec.seed, strata)?
    };
    let mut train_set = data.select(&plan.train);
    let mut test_set = data.select(&plan.test);
    if spec.standardize {
        let params = standardize_fit(&train_set.rows)?;
        train_set.rows = standardize_apply(&params, &train_set.rows)?;
        test_set.rows = standardize_apply(&params, &test_set.rows)?;
    }

    let knn_k = if spec.tune_k {
        tune_knn_k(&train_set, spec)?
    } else {
        spec.knn_k
    };

    let mut test_accuracy = BTreeMap::new();
    for kind in ClassifierKind::ALL {
        let cfg = spec.config_for(kind, knn_k);
        let model = classifiers::train(&train_set, &cfg)?;
        let pred = model.predict(&test_set.rows)?;
        let cm = confusion(&test_set.labels, &pred)?;
        test_accuracy.insert(kind, evaluation::metrics(&cm)?.accuracy);
    }

    let cfgs: Vec<TrainConfig> = ClassifierKind::ALL
        .iter()
        .map(|&k| spec.config_for(k, knn_k))
        .collect();
    let cv = evaluation::cross_validate(&data, &cfgs, spec.folds, spec.seed, spec.stratify)?;
    let mut cv_accuracy = BTreeMap::new();
    for r in cv.iter().flatten() {
        cv_accuracy.insert(r.kind, r.mean_accuracy);
    }
    let (selected, selected_cv_accuracy) =
        select_best(&cv).ok_or(ExperimentError::EmptyCohort)?;

    let selected_model = classifiers::train(&train_set, &spec.config_for(selected, knn_k))?;
    let pred = selected_model.predict(&test_set.rows)?;
    let cm = confusion(&test_set.labels, &pred)?;
    let class_metrics = per_class_metrics(&test_set.labels, &pred)?;

    Ok(ExperimentReport {
        spec: spec.clone(),
        test_accuracy,
        cv_accuracy,
        selected,
        selected_cv_accuracy,
        class_metrics,
        confusion: cm,
        rows_total: data.len(),
        rows_train: train_set.len(),
        rows_test: test_set.len(),
        knn_k_used: knn_k,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// Leakage-free alternative split: whole trials land on one side.
fn grouped_split(
    data: &LabeledDataset<f64>,
    ratio: f64,
    seed: u64,
) -> Result<evaluation::SplitPlan, ExperimentError> {
    let mut group_ids: Vec<(SubjectId, crate::ingest::ActivityCode, u32)> = Vec::new();
    let mut group_of = Vec::with_capacity(data.len());
    let mut group_labels: Vec<u8> = Vec::new();
    for (p, &label) in data.provenance.iter().zip(&data.labels) {
        let key = (p.subject, p.activity, p.trial);
        let gid = match group_ids.iter().position(|k| *k == key) {
            Some(g) => g,
            None => {
                group_ids.push(key);
                group_labels.push(label);
                group_ids.len() - 1
            }
        };
        group_of.push(gid);
    }
    let gp = evaluation::train_test_split(group_ids.len(), ratio, seed, Some(&group_labels))?;
    let in_train: Vec<bool> = {
        let mut v = vec![false; group_ids.len()];
        for &g in &gp.train {
            v[g] = true;
        }
        v
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, &g) in group_of.iter().enumerate() {
        if in_train[g] {
            train.push(i);
        } else {
            test.push(i);
        }
    }
    Ok(evaluation::SplitPlan {
        train,
        test,
        seed,
        ratio,
    })
}

/// Odd-k grid search by CV on the training rows; ties go to the smaller k.
fn tune_knn_k(
    train_set: &LabeledDataset<f64>,
    spec: &ExperimentSpec,
) -> Result<usize, ExperimentError> {
    let grid = [1usize, 3, 5, 7, 9];
    let cfgs: Vec<TrainConfig> = grid
        .iter()
        .map(|&k| spec.config_for(ClassifierKind::Knn, k))
        .collect();
    let results =
        evaluation::cross_validate(train_set, &cfgs, spec.folds, spec.seed, spec.stratify)?;
    let mut best = (spec.knn_k, f64::NEG_INFINITY);
    for (k, r) in grid.iter().zip(&results) {
        if let Ok(r) = r {
            if r.mean_accuracy > best.1 {
                best = (*k, r.mean_accuracy);
            }
        }
    }
    Ok(best.0)
}

/// One accuracy drop, in percentage points of KNN CV accuracy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Delta {
    pub from: f64,
    pub to: f64,
    pub drop_pp: f64,
}

impl Delta {
    fn new(from: f64, to: f64) -> Self {
        Delta {
            from,
            to,
            drop_pp: (from - to) * 100.0,
        }
    }
}

/// KNN accuracy drops across cohorts (both views) and across views
/// (both decompositions of the cohort steps).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DeltaReport {
    pub raw9_one_to_ten: Option<Delta>,
    pub raw9_ten_to_all: Option<Delta>,
    pub raw9_one_to_all: Option<Delta>,
    pub svm3_one_to_ten: Option<Delta>,
    pub svm3_ten_to_all: Option<Delta>,
    pub svm3_one_to_all: Option<Delta>,
    pub mode_gap_one: Option<Delta>,
    pub mode_gap_ten: Option<Delta>,
    pub mode_gap_all: Option<Delta>,
}

fn knn_value(reports: &[ExperimentReport], id: u8) -> Option<f64> {
    reports
        .iter()
        .find(|r| r.spec.id == id)
        .and_then(|r| r.cv_accuracy.get(&ClassifierKind::Knn).copied())
}

pub fn delta_report(reports: &[ExperimentReport]) -> DeltaReport {
    let v = |id| knn_value(reports, id);
    let pair = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(x), Some(y)) => Some(Delta::new(x, y)),
        _ => None,
    };
    DeltaReport {
        raw9_one_to_ten: pair(v(1), v(3)),
        raw9_ten_to_all: pair(v(3), v(5)),
        raw9_one_to_all: pair(v(1), v(5)),
        svm3_one_to_ten: pair(v(2), v(4)),
        svm3_ten_to_all: pair(v(4), v(6)),
        svm3_one_to_all: pair(v(2), v(6)),
        mode_gap_one: pair(v(1), v(2)),
        mode_gap_ten: pair(v(3), v(4)),
        mode_gap_all: pair(v(5), v(6)),
    }
}

/// Outcome of one experiment inside a full run; failures are recorded,
/// not fatal.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunOutcome {
    pub id: u8,
    pub report: Option<ExperimentReport>,
    pub error: Option<String>,
}

/// Runs the given experiment ids over one catalog scan. Each experiment
/// gets the derived seed `base_seed + id`. A failed experiment is marked
/// failed and the run continues.
pub fn run_all(
    root: &Path,
    ids: &[u8],
    base: &ExperimentSpec,
) -> Result<(Vec<RunOutcome>, DeltaReport), ExperimentError> {
    let catalog = scan_catalog(root)?;
    let mut outcomes = Vec::new();
    for &id in ids {
        let mut spec = ExperimentSpec::standard(id, base.seed)?;
        spec.decimation = base.decimation;
        spec.calibrated = base.calibrated;
        spec.standardize = base.standardize;
        spec.tune_k = base.tune_k;
        spec.stratify = base.stratify;
        spec.split_by_trial = base.split_by_trial;
        spec.folds = base.folds;
        spec.knn_k = base.knn_k;
        spec.subjects_override = base.subjects_override.clone();
        match run_experiment(&spec, &catalog) {
            Ok(report) => outcomes.push(RunOutcome {
                id,
                report: Some(report),
                error: None,
            }),
            Err(e) => outcomes.push(RunOutcome {
                id,
                report: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let reports: Vec<ExperimentReport> = outcomes
        .iter()
        .filter_map(|o| o.report.clone())
        .collect();
    let deltas = delta_report(&reports);
    Ok((outcomes, deltas))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cohort_convention() {
        assert_eq!(
            cohort_subjects(Cohort::One)
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>(),
            vec!["SA01"]
        );
        let ten = cohort_subjects(Cohort::Ten);
        assert_eq!(ten.len(), 10);
        assert_eq!(ten[9].to_string(), "SA10");
        assert_eq!(cohort_subjects(Cohort::All).len(), 38);
    }

    #[test]
    fn standard_specs_follow_table_layout() {
        for id in 1..=6u8 {
            let s = ExperimentSpec::standard(id, 42).unwrap();
            assert_eq!(s.seed, 42 + id as u64);
            let expect_mode = if id % 2 == 1 {
                FeatureMode::Raw9
            } else {
                FeatureMode::Svm3
            };
            assert_eq!(s.mode, expect_mode);
        }
        assert!(ExperimentSpec::standard(0, 42).is_err());
        assert!(ExperimentSpec::standard(7, 42).is_err());
    }

    #[test]
    fn delta_arithmetic() {
        let d = Delta::new(0.9653, 0.8301);
        assert!((d.drop_pp - 13.52).abs() < 1e-9);
    }
}
