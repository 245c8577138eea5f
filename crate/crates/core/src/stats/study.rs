use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cohens_d, kruskal_wallis, mann_whitney_u, median, paired_t_test, quartile_partition, TestResult};
use crate::error::{Error, Result};
use crate::features::Dataset;

/// Rows required per class before the study runs.
pub const MIN_ROWS_PER_CLASS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuartileTest {
    pub quartile: String,
    pub n_useful: usize,
    pub n_non_useful: usize,
    pub test: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureComparison {
    pub feature: String,
    pub median_useful: Option<f64>,
    pub median_non_useful: Option<f64>,
    pub mann_whitney: TestResult,
    pub cohens_d: Option<f64>,
    pub kruskal_wallis: TestResult,
    pub quartiles: Vec<QuartileTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub system: String,
    pub useful: usize,
    pub non_useful: usize,
    pub total: usize,
    pub useful_share: f64,
    pub non_useful_share: f64,
}

/// Comments with (CC) and without (CWC) code elements, per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeElementRow {
    pub system: String,
    pub total: usize,
    pub useful_cc: usize,
    pub useful_cwc: usize,
    pub non_useful_cc: usize,
    pub non_useful_cwc: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub classes: Vec<ClassSummary>,
    pub code_elements: Vec<CodeElementRow>,
    /// Paired t-test of per-system CC shares, useful vs non-useful.
    pub code_element_share_test: Option<TestResult>,
    pub features: Vec<FeatureComparison>,
}

fn summary(system: &str, useful: usize, non_useful: usize) -> ClassSummary {
    let total = useful + non_useful;
    ClassSummary {
        system: system.to_string(),
        useful,
        non_useful,
        total,
        useful_share: useful as f64 / total.max(1) as f64,
        non_useful_share: non_useful as f64 / total.max(1) as f64,
    }
}

/// Rows read from CSV carry no system name.
fn system_name(s: &str) -> &str {
    if s.is_empty() {
        "all"
    } else {
        s
    }
}

/// Compares useful and non-useful comments on every column of `ds`.
pub fn run_comparative_study(ds: &Dataset) -> Result<StudyReport> {
    let (useful, non_useful) = ds.class_counts();
    if useful == 0 || non_useful == 0 {
        return Err(Error::contract(format!(
            "study needs both classes (useful={useful}, non_useful={non_useful})"
        )));
    }
    if useful < MIN_ROWS_PER_CLASS || non_useful < MIN_ROWS_PER_CLASS {
        return Err(Error::contract(format!(
            "study needs at least {MIN_ROWS_PER_CLASS} rows per class (useful={useful}, non_useful={non_useful})"
        )));
    }

    let mut per_system: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in &ds.rows {
        let e = per_system.entry(system_name(&r.system)).or_default();
        if r.label.is_useful() {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    let mut classes: Vec<ClassSummary> = per_system.iter().map(|(s, (u, n))| summary(s, *u, *n)).collect();
    if classes.len() > 1 {
        classes.push(summary("Total", useful, non_useful));
    }

    let (code_elements, code_element_share_test) = match ds.column_index("CEP") {
        Ok(idx) => code_element_table(ds, idx),
        Err(_) => (Vec::new(), None),
    };

    let features = ds
        .feature_names
        .par_iter()
        .enumerate()
        .map(|(j, name)| compare_feature(ds, j, name))
        .collect::<Result<Vec<_>>>()?;

    Ok(StudyReport {
        classes,
        code_elements,
        code_element_share_test,
        features,
    })
}

fn code_element_table(ds: &Dataset, idx: usize) -> (Vec<CodeElementRow>, Option<TestResult>) {
    let mut by_system: BTreeMap<&str, CodeElementRow> = BTreeMap::new();
    for r in &ds.rows {
        let Some(cep) = r.values[idx] else { continue };
        let row = by_system.entry(system_name(&r.system)).or_insert_with(|| CodeElementRow {
            system: system_name(&r.system).to_string(),
            total: 0,
            useful_cc: 0,
            useful_cwc: 0,
            non_useful_cc: 0,
            non_useful_cwc: 0,
        });
        row.total += 1;
        match (r.label.is_useful(), cep > 0.5) {
            (true, true) => row.useful_cc += 1,
            (true, false) => row.useful_cwc += 1,
            (false, true) => row.non_useful_cc += 1,
            (false, false) => row.non_useful_cwc += 1,
        }
    }
    let rows: Vec<CodeElementRow> = by_system.into_values().collect();
    let share = |cc: usize, cwc: usize| cc as f64 / (cc + cwc).max(1) as f64;
    let useful: Vec<f64> = rows.iter().map(|r| share(r.useful_cc, r.useful_cwc)).collect();
    let non: Vec<f64> = rows.iter().map(|r| share(r.non_useful_cc, r.non_useful_cwc)).collect();
    let test = paired_t_test(&useful, &non).ok();
    (rows, test)
}

fn compare_feature(ds: &Dataset, j: usize, name: &str) -> Result<FeatureComparison> {
    let mut useful = Vec::new();
    let mut non = Vec::new();
    for r in &ds.rows {
        if let Some(v) = r.values[j] {
            if r.label.is_useful() {
                useful.push(v);
            } else {
                non.push(v);
            }
        }
    }
    if useful.is_empty() || non.is_empty() {
        return Err(Error::contract(format!("feature {name} has no observed values in one class")));
    }
    let mann_whitney = mann_whitney_u(&useful, &non)?;
    let kw = kruskal_wallis(&[useful.clone(), non.clone()])?;
    let quartiles = match (quartile_partition(&useful), quartile_partition(&non)) {
        (Ok(qu), Ok(qn)) => qu
            .iter()
            .zip(qn.iter())
            .enumerate()
            .map(|(i, (a, b))| QuartileTest {
                quartile: format!("Q{}", i + 1),
                n_useful: a.len(),
                n_non_useful: b.len(),
                test: mann_whitney_u(a, b).ok(),
            })
            .collect(),
        _ => (1..=4)
            .map(|i| QuartileTest {
                quartile: format!("Q{i}"),
                n_useful: 0,
                n_non_useful: 0,
                test: None,
            })
            .collect(),
    };
    Ok(FeatureComparison {
        feature: name.to_string(),
        median_useful: median(&useful),
        median_non_useful: median(&non),
        cohens_d: cohens_d(&useful, &non).ok(),
        mann_whitney,
        kruskal_wallis: kw,
        quartiles,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl StudyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    /// One row per feature.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,median_useful,median_non_useful,U,p_mwu,cohens_d,H,p_kw");
        for q in 1..=4 {
            write!(out, ",Q{q}_U,Q{q}_p,Q{q}_d").unwrap();
        }
        out.push('\n');
        for f in &self.features {
            write!(
                out,
                "{},{},{},{:.6},{:.6},{},{:.6},{:.6}",
                f.feature,
                opt(f.median_useful),
                opt(f.median_non_useful),
                f.mann_whitney.statistic,
                f.mann_whitney.p_value,
                opt(f.cohens_d),
                f.kruskal_wallis.statistic,
                f.kruskal_wallis.p_value
            )
            .unwrap();
            for q in &f.quartiles {
                let t = q.test.as_ref();
                write!(
                    out,
                    ",{},{},{}",
                    opt(t.map(|t| t.statistic)),
                    opt(t.map(|t| t.p_value)),
                    opt(t.and_then(|t| t.effect_size))
                )
                .unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str("Dataset\n");
        writeln!(out, "{:<12} {:>10} {:>18} {:>18} {:>8}", "System", "", "Useful", "Non-useful", "Total").unwrap();
        for c in &self.classes {
            writeln!(
                out,
                "{:<12} {:>10} {:>9} ({:>5.2}%) {:>9} ({:>5.2}%) {:>8}",
                c.system,
                "",
                c.useful,
                100.0 * c.useful_share,
                c.non_useful,
                100.0 * c.non_useful_share,
                c.total
            )
            .unwrap();
        }
        if !self.code_elements.is_empty() {
            out.push_str("\nCode elements (CC = with, CWC = without)\n");
            writeln!(
                out,
                "{:<12} {:>6} {:>16} {:>6} {:>16} {:>6}",
                "System", "All", "Useful CC", "CWC", "Non-useful CC", "CWC"
            )
            .unwrap();
            for r in &self.code_elements {
                let pct = |cc: usize, cwc: usize| 100.0 * cc as f64 / (cc + cwc).max(1) as f64;
                writeln!(
                    out,
                    "{:<12} {:>6} {:>7} ({:>5.2}%) {:>6} {:>7} ({:>5.2}%) {:>6}",
                    r.system,
                    r.total,
                    r.useful_cc,
                    pct(r.useful_cc, r.useful_cwc),
                    r.useful_cwc,
                    r.non_useful_cc,
                    pct(r.non_useful_cc, r.non_useful_cwc),
                    r.non_useful_cwc
                )
                .unwrap();
            }
            if let Some(t) = &self.code_element_share_test {
                writeln!(out, "paired t-test on CC shares: t={:.3}, p={:.4}", t.statistic, t.p_value).unwrap();
            }
        }
        out.push_str("\nFeature comparison (useful vs non-useful)\n");
        writeln!(
            out,
            "{:<12} {:>10} {:>10} {:>10} {:>8} {:>8} {:>8} {:>8}  {}",
            "Feature", "Med(U)", "Med(NU)", "U", "p", "D", "H", "p(KW)", "Q1..Q4 p (D)"
        )
        .unwrap();
        for f in &self.features {
            let quart: Vec<String> = f
                .quartiles
                .iter()
                .map(|q| match &q.test {
                    Some(t) => format!(
                        "{}={:.2}({})",
                        q.quartile,
                        t.p_value,
                        t.effect_size.map_or("-".into(), |d| format!("{:.2}", d.abs()))
                    ),
                    None => format!("{}=-", q.quartile),
                })
                .collect();
            writeln!(
                out,
                "{:<12} {:>10} {:>10} {:>10.1} {:>8.4} {:>8} {:>8.3} {:>8.4}  {}",
                f.feature,
                f.median_useful.map_or("-".into(), |m| format!("{m:.3}")),
                f.median_non_useful.map_or("-".into(), |m| format!("{m:.3}")),
                f.mann_whitney.statistic,
                f.mann_whitney.p_value,
                f.cohens_d.map_or("-".into(), |d| format!("{:.3}", d.abs())),
                f.kruskal_wallis.statistic,
                f.kruskal_wallis.p_value,
                quart.join(" ")
            )
            .unwrap();
        }
        out
    }
}
