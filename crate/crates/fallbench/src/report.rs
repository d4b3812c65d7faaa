//! Table rendering: machine CSV plus aligned Markdown per table, with
//! percentages rounded half-up to two decimals.

use std::fs;
use std::path::Path;

use crate::classifiers::ClassifierKind;
use crate::evaluation::MetricSet;
use crate::experiments::{DeltaReport, ExperimentReport, RunOutcome};

/// Rounds a fraction to a percentage with exactly two decimals, half-up.
pub fn fmt_pct(fraction: f64) -> String {
    let pct = fraction * 100.0;
    // round-half-away-from-zero; inputs are non-negative so this is half-up
    let rounded = (pct * 100.0).round() / 100.0;
    format!("{rounded:.2}")
}

const MISSING: &str = "\u{2014}"; // em dash for empty optional cells

fn report_for(outcomes: &[RunOutcome], id: u8) -> Option<&ExperimentReport> {
    outcomes
        .iter()
        .find(|o| o.id == id)
        .and_then(|o| o.report.as_ref())
}

fn markdown_table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let fmt_row = |cells: &[String]| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut out = fmt_row(header);
    let sep: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    out.push_str(&fmt_row(&sep));
    for row in rows {
        debug_assert_eq!(row.len(), cols);
        out.push_str(&fmt_row(row));
    }
    out
}

fn csv_line(cells: &[String]) -> String {
    let escaped: Vec<String> = cells
        .iter()
        .map(|c| {
            if c.contains(',') || c.contains('"') {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.clone()
            }
        })
        .collect();
    format!("{}\n", escaped.join(","))
}

/// Per-method accuracies and the CV-selected model, one row per experiment.
pub fn table2(outcomes: &[RunOutcome]) -> (String, String) {
    let header: Vec<String> = [
        "s_no",
        "experiment",
        "lr_acc",
        "lda_acc",
        "knn_acc",
        "dt_acc",
        "nb_acc",
        "selected_model",
        "selected_cv_acc",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::new();
    for o in outcomes {
        let mut cells = vec![o.id.to_string()];
        match &o.report {
            Some(r) => {
                let suffix = match r.spec.mode {
                    crate::features::FeatureMode::Raw9 => "",
                    crate::features::FeatureMode::Svm3 => " with SVM",
                };
                cells.push(format!("{}{}", r.spec.cohort.label(), suffix));
                for kind in ClassifierKind::ALL {
                    cells.push(
                        r.test_accuracy
                            .get(&kind)
                            .map(|&a| fmt_pct(a))
                            .unwrap_or_else(|| MISSING.into()),
                    );
                }
                cells.push(r.selected.short_name().into());
                cells.push(fmt_pct(r.selected_cv_accuracy));
            }
            None => {
                cells.push(format!(
                    "failed: {}",
                    o.error.as_deref().unwrap_or("unknown")
                ));
                cells.extend(std::iter::repeat(MISSING.to_string()).take(7));
            }
        }
        rows.push(cells);
    }
    let mut csv = csv_line(&header);
    for row in &rows {
        csv.push_str(&csv_line(row));
    }
    (csv, markdown_table(&header, &rows))
}

/// Per-class precision/recall/F1 for the raw-view experiments (cohort columns).
pub fn table3(outcomes: &[RunOutcome]) -> (String, String) {
    let header: Vec<String> = [
        "class",
        "measure",
        "one_subject",
        "ten_subjects",
        "all_subjects",
    ]
    .map(String::from)
    .to_vec();
    let cohort_ids = [1u8, 3, 5];
    let value = |class: usize, pick: fn(&MetricSet) -> f64, id: u8| -> String {
        report_for(outcomes, id)
            .map(|r| {
                let m = if class == 0 {
                    &r.class_metrics.0
                } else {
                    &r.class_metrics.1
                };
                fmt_pct(pick(m))
            })
            .unwrap_or_else(|| MISSING.into())
    };
    let mut rows = Vec::new();
    for (class, class_name) in [(0usize, "ADLs=0"), (1usize, "Falls=1")] {
        for (measure, pick) in [
            ("precision", (|m: &MetricSet| m.precision) as fn(&MetricSet) -> f64),
            ("recall", |m: &MetricSet| m.recall),
            ("f1", |m: &MetricSet| m.f1),
        ] {
            let mut cells = vec![class_name.to_string(), measure.to_string()];
            for id in cohort_ids {
                cells.push(value(class, pick, id));
            }
            rows.push(cells);
        }
    }
    let mut csv = csv_line(&header);
    for row in &rows {
        csv.push_str(&csv_line(row));
    }
    (csv, markdown_table(&header, &rows))
}

/// KNN with and without the magnitude view across cohorts.
pub fn table4(outcomes: &[RunOutcome]) -> (String, String) {
    let header: Vec<String> = ["model", "one_subject", "ten_subjects", "all_subjects"]
        .map(String::from)
        .to_vec();
    let knn_cv = |id: u8| -> String {
        report_for(outcomes, id)
            .and_then(|r| r.cv_accuracy.get(&ClassifierKind::Knn))
            .map(|&a| fmt_pct(a))
            .unwrap_or_else(|| MISSING.into())
    };
    let rows = vec![
        vec![
            "KNN (without magnitude)".to_string(),
            knn_cv(1),
            knn_cv(3),
            knn_cv(5),
        ],
        vec![
            "KNN (with magnitude)".to_string(),
            knn_cv(2),
            knn_cv(4),
            knn_cv(6),
        ],
    ];
    let mut csv = csv_line(&header);
    for row in &rows {
        csv.push_str(&csv_line(row));
    }
    (csv, markdown_table(&header, &rows))
}

pub fn deltas_csv(deltas: &DeltaReport) -> String {
    let header = ["comparison", "from_pct", "to_pct", "drop_pp"].map(String::from);
    let mut out = csv_line(&header);
    let rows: [(&str, &Option<crate::experiments::Delta>); 9] = [
        ("raw9_one_to_ten", &deltas.raw9_one_to_ten),
        ("raw9_ten_to_all", &deltas.raw9_ten_to_all),
        ("raw9_one_to_all", &deltas.raw9_one_to_all),
        ("svm3_one_to_ten", &deltas.svm3_one_to_ten),
        ("svm3_ten_to_all", &deltas.svm3_ten_to_all),
        ("svm3_one_to_all", &deltas.svm3_one_to_all),
        ("mode_gap_one", &deltas.mode_gap_one),
        ("mode_gap_ten", &deltas.mode_gap_ten),
        ("mode_gap_all", &deltas.mode_gap_all),
    ];
    for (name, d) in rows {
        let cells = match d {
            Some(d) => vec![
                name.to_string(),
                fmt_pct(d.from),
                fmt_pct(d.to),
                format!("{:.2}", (d.drop_pp * 100.0).round() / 100.0),
            ],
            None => vec![
                name.to_string(),
                MISSING.into(),
                MISSING.into(),
                MISSING.into(),
            ],
        };
        out.push_str(&csv_line(&cells));
    }
    out
}

/// Writes every table artifact of a run into `out_dir`.
pub fn write_run_outputs(
    out_dir: &Path,
    outcomes: &[RunOutcome],
    deltas: &DeltaReport,
    config_json: &str,
    log: &str,
) -> std::io::Result<()> {
    fs::create_dir_all(out_dir)?;
    let (t2_csv, t2_md) = table2(outcomes);
    let (t3_csv, t3_md) = table3(outcomes);
    let (t4_csv, t4_md) = table4(outcomes);
    fs::write(out_dir.join("table2.csv"), t2_csv)?;
    fs::write(out_dir.join("table2.md"), t2_md)?;
    fs::write(out_dir.join("table3.csv"), t3_csv)?;
    fs::write(out_dir.join("table3.md"), t3_md)?;
    fs::write(out_dir.join("table4.csv"), t4_csv)?;
    fs::write(out_dir.join("table4.md"), t4_md)?;
    fs::write(out_dir.join("deltas.csv"), deltas_csv(deltas))?;
    fs::write(out_dir.join("config.json"), config_json)?;
    fs::write(out_dir.join("log.txt"), log)?;
    let reports = serde_json::to_string_pretty(outcomes).expect("outcomes serialize");
    fs::write(out_dir.join("reports.json"), reports)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_rounding_half_up() {
        assert_eq!(fmt_pct(0.9298), "92.98");
        // 1/32 = 3.125%: an exactly-representable half case rounds up, not to even
        assert_eq!(fmt_pct(0.03125), "3.13");
        assert_eq!(fmt_pct(1.0), "100.00");
        assert_eq!(fmt_pct(0.0), "0.00");
        assert_eq!(fmt_pct(0.123456), "12.35");
    }

    #[test]
    fn empty_cells_render_em_dash() {
        let outcomes = vec![RunOutcome {
            id: 5,
            report: None,
            error: Some("boom".into()),
        }];
        let (csv, md) = table2(&outcomes);
        assert!(csv.contains(MISSING));
        assert!(md.contains(MISSING));
        let (csv3, _) = table3(&outcomes);
        assert!(csv3.contains(MISSING));
    }

    #[test]
    fn table4_shape() {
        let (csv, _) = table4(&[]);
        let lines: Vec<&str> = csv.lines().collect();
        // header + 2 model rows x 3 cohort columns
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split(',').count(), 4);
    }

    #[test]
    fn markdown_is_aligned() {
        let header = vec!["a".to_string(), "bb".to_string()];
        let rows = vec![vec!["xxx".to_string(), "y".to_string()]];
        let md = markdown_table(&header, &rows);
        let widths: Vec<usize> = md.lines().map(str::len).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]));
    }
}
