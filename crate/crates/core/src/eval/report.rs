//! CSV, JSON and aligned-text renderings of evaluation results.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::protocol::{BaselineComparison, EvalReport, GridEntry, Summary};
use crate::learn::ModelKind;

/// CSV header of the performance table.
pub const PERFORMANCE_COLUMNS: [&str; 11] = [
    "algorithm",
    "dimension",
    "feature_set",
    "useful_precision",
    "useful_recall",
    "non_useful_precision",
    "non_useful_recall",
    "precision",
    "recall",
    "f1",
    "accuracy",
];

/// CSV header of the baseline comparison table.
pub const COMPARISON_COLUMNS: [&str; 14] = [
    "classifier",
    "test_useful_precision",
    "test_useful_recall",
    "test_non_useful_precision",
    "test_non_useful_recall",
    "test_f1",
    "test_accuracy",
    "validation_useful_precision",
    "validation_useful_recall",
    "validation_non_useful_precision",
    "validation_non_useful_recall",
    "validation_f1",
    "validation_accuracy",
    "significance",
];

pub fn algorithm_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::GaussianNb => "Naive Bayes (NB)",
        ModelKind::LogisticRegression => "Logistic Regression (LR)",
        ModelKind::RandomForest => "Random Forest (RF)",
        ModelKind::Cart => "CART",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRow {
    pub algorithm: String,
    pub dimension: String,
    pub feature_set: String,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PerformanceTable {
    pub rows: Vec<PerformanceRow>,
}

fn pct(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn summary_cells(s: &Summary) -> [f64; 8] {
    [
        s.useful_precision,
        s.useful_recall,
        s.non_useful_precision,
        s.non_useful_recall,
        s.precision,
        s.recall,
        s.f1,
        s.accuracy,
    ]
}

impl PerformanceTable {
    pub fn from_report(report: &EvalReport, dimension: &str) -> Self {
        let mut fs = report.feature_set.clone();
        if report.pca {
            fs.push_str("_PCA");
        }
        PerformanceTable {
            rows: vec![PerformanceRow {
                algorithm: algorithm_name(report.model).into(),
                dimension: dimension.into(),
                feature_set: fs,
                summary: report.headline(),
            }],
        }
    }

    pub fn from_grid(results: &[(GridEntry, EvalReport)]) -> Self {
        let rows = results
            .iter()
            .flat_map(|(entry, report)| {
                let mut t = PerformanceTable::from_report(report, entry.feature_set.dimension());
                t.rows[0].feature_set = entry.feature_set.display() + if entry.pca { "_PCA" } else { "" };
                t.rows
            })
            .collect();
        PerformanceTable { rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = PERFORMANCE_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            write!(out, "{},{},{}", quote(&r.algorithm), quote(&r.dimension), quote(&r.feature_set)).unwrap();
            for v in summary_cells(&r.summary) {
                write!(out, ",{v:.6}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serialization is infallible")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:<26} {:<22} {:<28} | {:^19} | {:^19} | {:^39}",
            "", "", "", "Useful Comments", "Non-useful Comments", "All Comments"
        )
        .unwrap();
        writeln!(
            out,
            "{:<26} {:<22} {:<28} | {:>9} {:>9} | {:>9} {:>9} | {:>9} {:>9} {:>9} {:>9}",
            "Learning Algorithm",
            "Dimension",
            "Feature Set",
            "Precision",
            "Recall",
            "Precision",
            "Recall",
            "Precision",
            "Recall",
            "F1-score",
            "Accuracy"
        )
        .unwrap();
        for r in &self.rows {
            let c = summary_cells(&r.summary).map(pct);
            writeln!(
                out,
                "{:<26} {:<22} {:<28} | {:>9} {:>9} | {:>9} {:>9} | {:>9} {:>9} {:>9} {:>9}",
                r.algorithm, r.dimension, r.feature_set, c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]
            )
            .unwrap();
        }
        out
    }
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    /// Per-fold or per-run breakdown in the performance-table column layout.
    pub fn units_csv(&self) -> String {
        let mut out = String::from("unit,n_train,n_test");
        for c in &PERFORMANCE_COLUMNS[3..] {
            write!(out, ",{c}").unwrap();
        }
        out.push_str(",auc\n");
        for u in &self.units {
            write!(out, "{},{},{}", u.index, u.n_train, u.n_test).unwrap();
            for v in summary_cells(&Summary::from_metrics(&u.metrics, u.auc)) {
                write!(out, ",{v:.6}").unwrap();
            }
            writeln!(out, ",{}", u.auc.map(|a| format!("{a:.6}")).unwrap_or_default()).unwrap();
        }
        out
    }
}

fn significance_cell(row: &super::protocol::ComparisonRow) -> String {
    match &row.significance {
        None => "--".into(),
        Some(s) => format!(
            "{}{:.4}{}0.05 & {}",
            if s.significant { "*" } else { "" },
            s.p_value,
            if s.p_value < 0.05 { "<" } else { ">" },
            s.cohens_d.map_or("--".into(), |d| format!("{:.2}", d.abs()))
        ),
    }
}

impl BaselineComparison {
    pub fn to_csv(&self) -> String {
        let mut out = COMPARISON_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&quote(&r.classifier));
            for v in [test_cells(&r.test), test_cells(&r.validation)].concat() {
                write!(out, ",{v:.6}").unwrap();
            }
            writeln!(out, ",{}", quote(&significance_cell(r))).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serialization is infallible")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:<16} | {:^59} | {:^59} | {}",
            "", "Test Dataset", "Validation Dataset", "Significance"
        )
        .unwrap();
        let head = format!(
            "{:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "U-Prec", "U-Rec", "NU-Prec", "NU-Rec", "F1-score", "Accuracy"
        );
        writeln!(out, "{:<16} | {head} | {head} | p-value & Cohen's D", "Classifier").unwrap();
        for r in &self.rows {
            let t = test_cells(&r.test).map(pct);
            let v = test_cells(&r.validation).map(pct);
            writeln!(
                out,
                "{:<16} | {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} | {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} | {}",
                r.classifier,
                t[0],
                t[1],
                t[2],
                t[3],
                t[4],
                t[5],
                v[0],
                v[1],
                v[2],
                v[3],
                v[4],
                v[5],
                significance_cell(r)
            )
            .unwrap();
        }
        writeln!(out, "* = significantly higher accuracy than the best baseline ({})", self.best_baseline).unwrap();
        out
    }
}

fn test_cells(s: &Summary) -> [f64; 6] {
    [
        s.useful_precision,
        s.useful_recall,
        s.non_useful_precision,
        s.non_useful_recall,
        s.f1,
        s.accuracy,
    ]
}
