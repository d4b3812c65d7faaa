//! Property tests for the spec-level invariants that hold for all inputs.

use proptest::prelude::*;

use fallbench::classifiers::{self, ClassifierKind, TrainConfig};
use fallbench::evaluation::{confusion, k_fold, train_test_split};
use fallbench::features::{build_dataset, svm_magnitude, FeatureMode, LabeledDataset, Provenance};
use fallbench::ingest::{
    calibrate, ActivityCode, ActivityKind, SubjectGroup, SubjectId, TrialRecord,
};
use fallbench::matrix::Matrix;

fn sample_strategy() -> impl Strategy<Value = [i32; 9]> {
    // within each sensor's signed range
    let a1 = -4096i32..=4096;
    let gy = -32768i32..=32768;
    let a2 = -8192i32..=8192;
    [
        a1.clone(),
        a1.clone(),
        a1,
        gy.clone(),
        gy.clone(),
        gy,
        a2.clone(),
        a2.clone(),
        a2,
    ]
}

fn trial(kind: ActivityKind, samples: Vec<[i32; 9]>) -> TrialRecord {
    TrialRecord {
        subject: SubjectId::new(SubjectGroup::Adult, 1).unwrap(),
        activity: ActivityCode::new(kind, 1).unwrap(),
        trial: 1,
        samples,
        source_path: "prop".into(),
    }
}

proptest! {
    #[test]
    fn fold_partition_laws(n in 2usize..200, k_raw in 2usize..20, seed: u64) {
        let k = k_raw.min(n);
        let plan = k_fold(n, k, seed, None).unwrap();
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        let (min, max) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        prop_assert!(max - min <= 1);
        let mut all: Vec<usize> = plan.folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn split_partition_and_determinism(n in 2usize..200, seed: u64) {
        let a = train_test_split(n, 0.8, seed, None).unwrap();
        let b = train_test_split(n, 0.8, seed, None).unwrap();
        prop_assert_eq!(&a.train, &b.train);
        prop_assert_eq!(&a.test, &b.test);
        let mut all: Vec<usize> = a.train.iter().chain(&a.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn confusion_is_permutation_invariant(
        pairs in prop::collection::vec((0u8..=1, 0u8..=1), 1..50),
        seed: u64,
    ) {
        let truth: Vec<u8> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<u8> = pairs.iter().map(|p| p.1).collect();
        let cm = confusion(&truth, &pred).unwrap();
        // deterministic pseudo-shuffle of the joint pairs
        let mut idx: Vec<usize> = (0..pairs.len()).collect();
        idx.sort_by_key(|&i| (i as u64).wrapping_mul(seed | 1).rotate_left(17));
        let truth_p: Vec<u8> = idx.iter().map(|&i| truth[i]).collect();
        let pred_p: Vec<u8> = idx.iter().map(|&i| pred[i]).collect();
        prop_assert_eq!(cm, confusion(&truth_p, &pred_p).unwrap());
    }

    #[test]
    fn magnitude_never_negative(sample in sample_strategy()) {
        let t = trial(ActivityKind::Fall, vec![sample]);
        let ds: LabeledDataset<f64> = build_dataset(&[t], FeatureMode::Svm3, true).unwrap();
        for &v in ds.rows.row(0) {
            prop_assert!(v >= 0.0);
        }
    }

    #[test]
    fn calibration_linearity(a in sample_strategy(), b in sample_strategy()) {
        // halve to stay in range after summing
        let a: Vec<i32> = a.iter().map(|v| v / 2).collect();
        let b: Vec<i32> = b.iter().map(|v| v / 2).collect();
        let mut sum = [0i32; 9];
        for i in 0..9 {
            sum[i] = a[i] + b[i];
        }
        let ca: [f64; 9] = calibrate(&a.clone().try_into().unwrap());
        let cb: [f64; 9] = calibrate(&b.clone().try_into().unwrap());
        let cs: [f64; 9] = calibrate(&sum);
        for i in 0..9 {
            prop_assert!((cs[i] - (ca[i] + cb[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn decimation_monotonicity(len in 1usize..100, d1 in 1usize..10, d2 in 1usize..10) {
        let (lo, hi) = (d1.min(d2), d1.max(d2));
        let count = |d: usize| (0..len).step_by(d).count();
        prop_assert!(count(hi) <= count(lo));
        prop_assert_eq!(count(1), len);
    }

    #[test]
    fn row_count_conservation(
        lens in prop::collection::vec(1usize..20, 1..6),
    ) {
        let trials: Vec<TrialRecord> = lens
            .iter()
            .enumerate()
            .map(|(i, &len)| {
                let kind = if i % 2 == 0 { ActivityKind::Adl } else { ActivityKind::Fall };
                trial(kind, vec![[1; 9]; len])
            })
            .collect();
        let total: usize = lens.iter().sum();
        for mode in [FeatureMode::Raw9, FeatureMode::Svm3] {
            let ds: LabeledDataset<f64> = build_dataset(&trials, mode, true).unwrap();
            prop_assert_eq!(ds.len(), total);
            prop_assert_eq!(ds.rows.cols(), mode.width());
        }
    }

    #[test]
    fn magnitude_permutation_and_sign(x in -50.0f64..50.0, y in -50.0f64..50.0, z in -50.0f64..50.0) {
        let m = svm_magnitude(x, y, z).unwrap();
        prop_assert!((m - svm_magnitude(y, z, x).unwrap()).abs() <= 1e-9);
        prop_assert!((m - svm_magnitude(-x, y, -z).unwrap()).abs() <= 1e-9);
    }
}

/// Shuffling training rows changes nothing for the order-independent
/// estimators (KNN, LDA, naive Bayes).
#[test]
fn row_permutation_leaves_predictions_unchanged() {
    let rows: Vec<Vec<f64>> = (0..30)
        .map(|i| vec![(i as f64 * 1.3).sin() * 4.0, (i as f64 * 0.7).cos() * 4.0])
        .collect();
    let labels: Vec<u8> = (0..30).map(|i| ((i * 7 + 1) % 3 % 2) as u8).collect();
    let prov = Provenance {
        subject: SubjectId::new(SubjectGroup::Adult, 1).unwrap(),
        activity: ActivityCode::new(ActivityKind::Adl, 1).unwrap(),
        trial: 1,
        row: 0,
    };
    let ds = LabeledDataset {
        rows: Matrix::from_rows(&rows),
        labels: labels.clone(),
        provenance: vec![prov; 30],
    };
    let perm: Vec<usize> = (0..30).map(|i| (i * 11 + 5) % 30).collect();
    let shuffled = ds.select(&perm);

    let queries = Matrix::from_rows(
        &(0..10)
            .map(|i| vec![(i as f64).sin() * 3.0, (i as f64).cos() * 3.0])
            .collect::<Vec<_>>(),
    );
    for kind in [ClassifierKind::Knn, ClassifierKind::Lda, ClassifierKind::GaussianNb] {
        let cfg = TrainConfig::new(kind);
        let a = classifiers::train(&ds, &cfg).unwrap().predict(&queries).unwrap();
        let b = classifiers::train(&shuffled, &cfg)
            .unwrap()
            .predict(&queries)
            .unwrap();
        assert_eq!(a, b, "{kind:?} depends on row order");
    }
}

/// Identical (data, cfg) must give identical predictions across runs.
#[test]
fn training_is_deterministic() {
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| vec![(i % 5) as f64, (i % 7) as f64, (i % 3) as f64])
        .collect();
    let labels: Vec<u8> = (0..40).map(|i| ((i * 13 + 4) % 5 % 2) as u8).collect();
    let prov = Provenance {
        subject: SubjectId::new(SubjectGroup::Adult, 1).unwrap(),
        activity: ActivityCode::new(ActivityKind::Adl, 1).unwrap(),
        trial: 1,
        row: 0,
    };
    let ds = LabeledDataset {
        rows: Matrix::from_rows(&rows),
        labels,
        provenance: vec![prov; 40],
    };
    for kind in ClassifierKind::ALL {
        let cfg = TrainConfig::new(kind);
        let a = classifiers::train(&ds, &cfg).unwrap().predict(&ds.rows).unwrap();
        let b = classifiers::train(&ds, &cfg).unwrap().predict(&ds.rows).unwrap();
        assert_eq!(a, b, "{kind:?} is not deterministic");
    }
}
