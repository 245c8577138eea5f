//! Per-comment feature vectors and model-ready datasets.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{InlineComment, PullRequest, ReviewCorpus, Usefulness};
use crate::error::{Error, Result};
use crate::experience::{
    authorship_counts, external_library_experience, reviewership_counts, ExperienceIndex, HistorySidecar,
};
use crate::text::{self, Lexicons, TokenizedComment};

/// Layout version of the 15 predictor variables below.
pub const FEATURE_SET_VERSION: &str = "v1";

pub const FEATURE_NAMES: [&str; 15] = [
    "RE_full",
    "RE_prose",
    "SWR",
    "SKWR",
    "QR",
    "CEP",
    "STR",
    "CS",
    "CA_file",
    "CA_sys",
    "CA_presence",
    "CR_file",
    "CR_commits",
    "CR_prs",
    "ELE",
];

pub const TEXTUAL_FEATURES: [&str; 8] = ["RE_full", "RE_prose", "SWR", "SKWR", "QR", "CEP", "STR", "CS"];
pub const EXPERIENCE_FEATURES: [&str; 7] =
    ["CA_file", "CA_sys", "CA_presence", "CR_file", "CR_commits", "CR_prs", "ELE"];

/// Auxiliary columns used only by the baseline classifiers.
pub const BASELINE_COLUMNS: [&str; 3] = ["KW_COUNT", "SENT_GROUP", "SENT_SCORE"];

/// Features whose values are ratios in [0, 1].
pub fn is_ratio_feature(name: &str) -> bool {
    matches!(name, "SWR" | "SKWR" | "QR" | "CEP" | "STR" | "CS" | "CA_presence" | "ELE")
}

/// The 15 predictors of one comment; `None` marks a missing value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: [Option<f64>; 15],
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        let idx = FEATURE_NAMES.iter().position(|n| *n == name)?;
        self.values[idx]
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, Option<f64>)> + '_ {
        FEATURE_NAMES.iter().copied().zip(self.values.iter().copied())
    }
}

/// Knobs that influence feature computation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureConfig {
    pub ele_window_days: Option<u32>,
}

impl FeatureConfig {
    fn ele_window_secs(&self) -> Option<i64> {
        self.ele_window_days.map(|d| i64::from(d) * 86_400)
    }
}

/// Textual predictors computable from the comment text and candidate lines.
pub fn textual_features<'a>(
    body: &str,
    candidate_lines: impl IntoIterator<Item = &'a str>,
    lex: &Lexicons,
) -> [Option<f64>; 8] {
    let tok = TokenizedComment::new(body);
    [
        text::reading_ease(&tok, false),
        text::reading_ease(&tok, true),
        Some(text::stop_word_ratio(&tok, false, lex)),
        Some(text::stop_word_ratio(&tok, true, lex)),
        Some(text::question_ratio(&tok)),
        Some(if tok.code_elements.is_empty() { 0.0 } else { 1.0 }),
        Some(text::source_token_ratio(&tok)),
        Some(text::max_line_similarity(body, candidate_lines, lex)),
    ]
}

pub fn build_feature_vector(
    comment: &InlineComment,
    pr: &PullRequest,
    index: &ExperienceIndex,
    lex: &Lexicons,
    cfg: &FeatureConfig,
) -> FeatureVector {
    let textual = textual_features(&comment.body, text::candidate_lines(comment, pr), lex);
    let hist = index.history(&comment.reviewer);
    let at = comment.timestamp;
    let ca = authorship_counts(&comment.anchor_path, at, hist);
    let cr = reviewership_counts(&comment.anchor_path, at, hist);
    let target = index.target_imports(&comment.anchor_path, at);
    let ele = external_library_experience(&target, at, hist, cfg.ele_window_secs());
    let mut values = [None; 15];
    values[..8].copy_from_slice(&textual);
    values[8..].copy_from_slice(&[
        Some(ca.file_commits as f64),
        Some(ca.system_commits as f64),
        Some(if ca.changed_file_before { 1.0 } else { 0.0 }),
        Some(cr.file_reviewed as f64),
        Some(cr.commits_reviewed_total as f64),
        Some(cr.prs_reviewed_total as f64),
        ele,
    ]);
    FeatureVector { values }
}

pub fn baseline_features(body: &str, lex: &Lexicons) -> [f64; 3] {
    let (score, group) = text::sentiment_score(body, lex);
    [text::keyword_count(body, lex) as f64, group.as_f64(), score]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    #[serde(default)]
    pub id: String,
    #[serde(default)]
    pub system: String,
    pub values: Vec<Option<f64>>,
    pub label: Usefulness,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub config_hash: String,
}

/// A table of labeled rows with a fixed column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Row>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, rows: Vec<Row>) -> Self {
        Dataset {
            feature_names,
            rows,
            provenance: Provenance::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::contract(format!("dataset has no column {name}")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let idx = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r.values[idx]).collect())
    }

    pub fn labels(&self) -> Vec<Usefulness> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let useful = self.rows.iter().filter(|r| r.label.is_useful()).count();
        (useful, self.rows.len() - useful)
    }

    /// Projection onto the named columns, in the given order.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            feature_names: names.iter().map(|n| n.as_ref().to_string()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| Row {
                    id: r.id.clone(),
                    system: r.system.clone(),
                    values: idx.iter().map(|&i| r.values[i]).collect(),
                    label: r.label,
                })
                .collect(),
            provenance: self.provenance.clone(),
        })
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Dense matrix; errors on any missing or non-finite value.
    pub fn matrix(&self) -> Result<Vec<Vec<f64>>> {
        self.rows
            .iter()
            .map(|r| {
                r.values
                    .iter()
                    .zip(&self.feature_names)
                    .map(|(v, name)| match v {
                        Some(x) if x.is_finite() => Ok(*x),
                        Some(x) => Err(Error::contract(format!("row {} feature {name} is non-finite ({x})", r.id))),
                        None => Err(Error::contract(format!("row {} feature {name} is missing", r.id))),
                    })
                    .collect()
            })
            .collect()
    }

    pub fn missing_row_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        let n = self.rows.iter().filter(|r| r.values.iter().any(Option::is_none)).count();
        n as f64 / self.rows.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.feature_names.join(",");
        out.push_str(",label\n");
        for r in &self.rows {
            for v in &r.values {
                if let Some(x) = v {
                    write!(out, "{x}").unwrap();
                }
                out.push(',');
            }
            out.push_str(r.label.as_str());
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Dataset> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::contract("empty dataset CSV"))?;
        let mut names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        if names.last().map(String::as_str) != Some("label") {
            return Err(Error::contract("dataset CSV header must end with 'label'"));
        }
        names.pop();
        let mut rows = Vec::new();
        for (lineno, line) in lines {
            let offset = line.as_ptr() as usize - text.as_ptr() as usize;
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != names.len() + 1 {
                return Err(Error::Parse {
                    offset,
                    message: format!("line {} has {} cells, expected {}", lineno + 1, cells.len(), names.len() + 1),
                });
            }
            let values = cells[..names.len()]
                .iter()
                .map(|c| {
                    let c = c.trim();
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>().map(Some).map_err(|e| Error::Parse {
                            offset,
                            message: format!("line {}: {c:?}: {e}", lineno + 1),
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(Row {
                id: format!("row{}", rows.len()),
                system: String::new(),
                values,
                label: cells[names.len()].parse()?,
            });
        }
        Ok(Dataset::new(names, rows))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let features: serde_json::Map<String, serde_json::Value> = self
                .feature_names
                .iter()
                .zip(&r.values)
                .map(|(n, v)| (n.clone(), v.map_or(serde_json::Value::Null, |x| serde_json::json!(x))))
                .collect();
            let obj = serde_json::json!({
                "id": r.id,
                "system": r.system,
                "features": features,
                "label": r.label,
            });
            out.push_str(&obj.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Dataset> {
        #[derive(Deserialize)]
        struct Line {
            #[serde(default)]
            id: String,
            #[serde(default)]
            system: String,
            features: serde_json::Map<String, serde_json::Value>,
            label: Usefulness,
        }
        let mut names: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let start = offset;
            offset += line.len();
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(line).map_err(|e| Error::Parse {
                offset: start + e.column().saturating_sub(1),
                message: e.to_string(),
            })?;
            let cols = names.get_or_insert_with(|| parsed.features.keys().cloned().collect());
            let values = cols
                .iter()
                .map(|n| match parsed.features.get(n) {
                    Some(serde_json::Value::Number(x)) => Ok(x.as_f64()),
                    Some(serde_json::Value::Null) => Ok(None),
                    _ => Err(Error::Parse {
                        offset: start,
                        message: format!("row {} lacks numeric feature {n}", parsed.id),
                    }),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(Row {
                id: parsed.id,
                system: parsed.system,
                values,
                label: parsed.label,
            });
        }
        Ok(Dataset::new(names.unwrap_or_default(), rows))
    }

    /// Reads `.jsonl` as JSON lines and anything else as CSV.
    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.extension().and_then(|e| e.to_str()) == Some("jsonl"))
    }

    pub fn parse(text: &str, jsonl: bool) -> Result<Dataset> {
        if jsonl || text.trim_start().starts_with('{') {
            Dataset::from_jsonl(text)
        } else {
            Dataset::from_csv(text)
        }
    }
}

/// Builds the labeled dataset of a corpus: every labeled comment of every
/// non-scaffolding pull request, in corpus order. Columns are the 15
/// predictors followed by the baseline columns.
pub fn build_dataset(
    corpus: &ReviewCorpus,
    lex: &Lexicons,
    cfg: &FeatureConfig,
    sidecar: Option<&HistorySidecar>,
) -> Dataset {
    let mut rows = Vec::new();
    for system in &corpus.systems {
        let mut index = ExperienceIndex::from_system(system);
        if let Some(extra) = sidecar {
            index.merge_sidecar(extra.clone());
        }
        let work: Vec<(&PullRequest, &InlineComment, Usefulness)> = system
            .pull_requests
            .iter()
            .filter(|pr| !pr.scaffolding)
            .flat_map(|pr| {
                pr.comments
                    .iter()
                    .filter_map(move |c| c.label.as_ref().map(|l| (pr, c, l.value)))
            })
            .collect();
        let built: Vec<Row> = work
            .par_iter()
            .map(|(pr, c, label)| {
                let fv = build_feature_vector(c, pr, &index, lex, cfg);
                let mut values = fv.values.to_vec();
                values.extend(baseline_features(&c.body, lex).map(Some));
                Row {
                    id: c.id.clone(),
                    system: system.name.clone(),
                    values,
                    label: *label,
                }
            })
            .collect();
        rows.extend(built);
    }
    let names = FEATURE_NAMES.iter().chain(BASELINE_COLUMNS.iter()).map(|s| s.to_string()).collect();
    let mut ds = Dataset::new(names, rows);
    ds.provenance.config_hash = config_hash(lex, cfg);
    ds
}

fn config_hash(lex: &Lexicons, cfg: &FeatureConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(FEATURE_SET_VERSION.as_bytes());
    for set in [
        &lex.stop_words,
        &lex.prog_keywords,
        &lex.sentiment_positive,
        &lex.sentiment_negative,
        &lex.baseline_keywords,
    ] {
        let mut words: Vec<&String> = set.iter().collect();
        words.sort();
        for w in words {
            hasher.update(w.as_bytes());
            hasher.update(b"\n");
        }
        hasher.update(b"--\n");
    }
    hasher.update(format!("{cfg:?}").as_bytes());
    hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImputeStrategy {
    Mean,
    Drop,
}

impl std::str::FromStr for ImputeStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(ImputeStrategy::Mean),
            "drop" => Ok(ImputeStrategy::Drop),
            other => Err(Error::contract(format!("unknown imputation strategy {other:?}"))),
        }
    }
}

/// Per-column means over observed values.
pub fn column_means(ds: &Dataset) -> Result<Vec<f64>> {
    (0..ds.feature_names.len())
        .map(|j| {
            let observed: Vec<f64> = ds.rows.iter().filter_map(|r| r.values[j]).collect();
            if observed.is_empty() {
                Err(Error::Imputation {
                    feature: ds.feature_names[j].clone(),
                })
            } else {
                Ok(observed.iter().sum::<f64>() / observed.len() as f64)
            }
        })
        .collect()
}

pub fn fill_missing(ds: &Dataset, means: &[f64]) -> Dataset {
    let mut out = ds.clone();
    for r in &mut out.rows {
        for (v, m) in r.values.iter_mut().zip(means) {
            if v.is_none() {
                *v = Some(*m);
            }
        }
    }
    out
}

pub fn impute_missing(ds: &Dataset, strategy: ImputeStrategy) -> Result<Dataset> {
    if ds.is_empty() {
        return Err(Error::contract("cannot impute an empty dataset"));
    }
    match strategy {
        ImputeStrategy::Mean => Ok(fill_missing(ds, &column_means(ds)?)),
        ImputeStrategy::Drop => {
            let mut out = ds.clone();
            out.rows.retain(|r| r.values.iter().all(Option::is_some));
            Ok(out)
        }
    }
}

/// Named column subsets used for training and reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureSet {
    All,
    Textual,
    Experience,
    /// CS, CA, CR, ELE and SWR.
    Selected,
    Custom(Vec<String>),
}

impl FeatureSet {
    pub fn columns(&self) -> Vec<String> {
        let names: Vec<&str> = match self {
            FeatureSet::All => FEATURE_NAMES.to_vec(),
            FeatureSet::Textual => TEXTUAL_FEATURES.to_vec(),
            FeatureSet::Experience => EXPERIENCE_FEATURES.to_vec(),
            FeatureSet::Selected => vec![
                "CS",
                "CA_file",
                "CA_sys",
                "CA_presence",
                "CR_file",
                "CR_commits",
                "CR_prs",
                "ELE",
                "SWR",
            ],
            FeatureSet::Custom(v) => return v.clone(),
        };
        names.into_iter().map(String::from).collect()
    }

    pub fn name(&self) -> String {
        match self {
            FeatureSet::All => "all".into(),
            FeatureSet::Textual => "textual".into(),
            FeatureSet::Experience => "experience".into(),
            FeatureSet::Selected => "selected".into(),
            FeatureSet::Custom(v) => v.join("+"),
        }
    }

    /// Label in the style of the performance tables.
    pub fn display(&self) -> String {
        match self {
            FeatureSet::All => "{all features}".into(),
            FeatureSet::Textual => "{RE, SWR, QR, CER, CS}".into(),
            FeatureSet::Experience => "{CA, CR, ELE}".into(),
            FeatureSet::Selected => "{CS, CA, CR, ELE, SWR}".into(),
            FeatureSet::Custom(v) => format!("{{{}}}", v.join(", ")),
        }
    }

    pub fn dimension(&self) -> &'static str {
        match self {
            FeatureSet::Textual => "textual",
            FeatureSet::Experience => "experience",
            _ => "textual + experience",
        }
    }
}

impl std::str::FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => FeatureSet::All,
            "textual" | "txt" => FeatureSet::Textual,
            "experience" | "exp" => FeatureSet::Experience,
            "selected" | "best" => FeatureSet::Selected,
            list => {
                let cols: Vec<String> = list.split(',').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect();
                let known = |c: &String| FEATURE_NAMES.contains(&c.as_str()) || BASELINE_COLUMNS.contains(&c.as_str());
                if cols.is_empty() || !cols.iter().all(known) {
                    return Err(Error::contract(format!("unknown feature set {list:?}")));
                }
                FeatureSet::Custom(cols)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(values: &[Option<f64>]) -> Dataset {
        Dataset::new(
            vec!["x".into()],
            values
                .iter()
                .enumerate()
                .map(|(i, v)| Row {
                    id: i.to_string(),
                    system: String::new(),
                    values: vec![*v],
                    label: Usefulness::from_bool(i % 2 == 0),
                })
                .collect(),
        )
    }

    #[test]
    fn mean_imputation() {
        let out = impute_missing(&ds(&[Some(1.0), None, Some(3.0)]), ImputeStrategy::Mean).unwrap();
        assert_eq!(out.column("x").unwrap(), vec![Some(1.0), Some(2.0), Some(3.0)]);
    }

    #[test]
    fn drop_imputation() {
        let out = impute_missing(&ds(&[Some(1.0), None, Some(3.0)]), ImputeStrategy::Drop).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn imputation_identity_without_missing() {
        let d = ds(&[Some(1.0), Some(5.0)]);
        assert_eq!(impute_missing(&d, ImputeStrategy::Mean).unwrap(), d);
    }

    #[test]
    fn all_missing_is_error() {
        match impute_missing(&ds(&[None, None]), ImputeStrategy::Mean) {
            Err(Error::Imputation { feature }) => assert_eq!(feature, "x"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let d = ds(&[Some(0.1), None, Some(1e-17)]);
        let back = Dataset::from_csv(&d.to_csv()).unwrap();
        assert_eq!(back.column("x").unwrap(), d.column("x").unwrap());
        assert_eq!(back.labels(), d.labels());
        assert!(d.to_csv().starts_with("x,label\n"));
    }

    #[test]
    fn jsonl_round_trip() {
        let d = ds(&[Some(0.1), None]);
        let back = Dataset::from_jsonl(&d.to_jsonl()).unwrap();
        assert_eq!(back.rows, d.rows);
    }

    #[test]
    fn feature_set_parsing() {
        assert_eq!("all".parse::<FeatureSet>().unwrap().columns().len(), 15);
        assert_eq!("CS,ELE".parse::<FeatureSet>().unwrap().columns(), vec!["CS", "ELE"]);
        assert!("bogus".parse::<FeatureSet>().is_err());
    }
}
