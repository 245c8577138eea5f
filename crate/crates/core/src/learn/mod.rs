//! From-scratch classifiers: Gaussian naive Bayes, logistic regression,
//! CART and random forest, with optional PCA preprocessing.

pub mod forest;
pub mod importance;
pub mod logistic;
pub mod nb;
pub mod pca;
pub mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::stats::{median, quantile_sorted};

pub use forest::{ForestParams, RandomForest};
pub use importance::feature_importance;
pub use logistic::{log_loss_and_gradient, LogisticRegression, LrParams};
pub use nb::GaussianNb;
pub use pca::{pca_fit_transform, PcaTransform};
pub use tree::{DecisionTree, Node, TreeParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const CART_DEFAULT_MAX_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    GaussianNb,
    LogisticRegression,
    RandomForest,
    Cart,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::GaussianNb => "gaussian_nb",
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::RandomForest => "random_forest",
            ModelKind::Cart => "cart",
        }
    }

    /// Short tag used in report rows.
    pub fn short(self) -> &'static str {
        match self {
            ModelKind::GaussianNb => "NB",
            ModelKind::LogisticRegression => "LR",
            ModelKind::RandomForest => "RF",
            ModelKind::Cart => "CART",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "gaussian_nb" | "nb" => ModelKind::GaussianNb,
            "logistic_regression" | "lr" => ModelKind::LogisticRegression,
            "random_forest" | "rf" => ModelKind::RandomForest,
            "cart" => ModelKind::Cart,
            other => return Err(Error::contract(format!("unknown model kind {other:?}"))),
        })
    }
}

/// Hyperparameters for every learner; fields irrelevant to a kind are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub n_trees: usize,
    pub sample_fraction: f64,
    pub bootstrap: bool,
    /// `None` means the kind default (8 for CART, unlimited for RF).
    pub max_depth: Option<usize>,
    pub unlimited_depth: bool,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// `None` means floor(sqrt(p)) for RF and all features for CART.
    pub max_features: Option<usize>,
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Attach PCA retaining this explained-variance share.
    pub pca_variance: Option<f64>,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            n_trees: 2000,
            sample_fraction: 0.65,
            bootstrap: false,
            max_depth: None,
            unlimited_depth: false,
            min_samples_split: 2,
            min_samples_leaf: 2,
            max_features: None,
            l2: 0.0,
            max_iter: 10_000,
            tol: 1e-8,
            pca_variance: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::contract(format!("invalid value {value:?} for parameter {key}")))
}

impl Hyper {
    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n_trees" => self.n_trees = parse_num(key, value)?,
            "sample_fraction" => self.sample_fraction = parse_num(key, value)?,
            "bootstrap" => self.bootstrap = parse_num(key, value)?,
            "max_depth" => {
                if value == "none" {
                    self.max_depth = None;
                    self.unlimited_depth = true;
                } else {
                    self.max_depth = Some(parse_num(key, value)?);
                    self.unlimited_depth = false;
                }
            }
            "min_samples_split" => self.min_samples_split = parse_num(key, value)?,
            "min_samples_leaf" => self.min_samples_leaf = parse_num(key, value)?,
            "max_features" => self.max_features = if value == "all" { Some(usize::MAX) } else { Some(parse_num(key, value)?) },
            "l2" | "lambda" => self.l2 = parse_num(key, value)?,
            "max_iter" => self.max_iter = parse_num(key, value)?,
            "tol" => self.tol = parse_num(key, value)?,
            "pca" | "pca_variance" => self.pca_variance = if value == "none" { None } else { Some(parse_num(key, value)?) },
            _ => return Err(Error::contract(format!("unknown parameter {key}"))),
        }
        self.check()
    }

    /// Parses `key=value` pairs.
    pub fn from_pairs<S: AsRef<str>>(pairs: &[S]) -> Result<Self> {
        let mut h = Hyper::default();
        for p in pairs {
            let (k, v) = p
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::contract(format!("parameter {:?} is not key=value", p.as_ref())))?;
            h.set(k.trim(), v.trim())?;
        }
        Ok(h)
    }

    pub fn check(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::contract("n_trees must be at least 1"));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::contract("sample_fraction must be in (0, 1]"));
        }
        if self.l2 < 0.0 || !self.l2.is_finite() {
            return Err(Error::contract("l2 must be finite and non-negative"));
        }
        if let Some(v) = self.pca_variance {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::contract("pca variance target must be in (0, 1]"));
            }
        }
        Ok(())
    }

    fn tree_params(&self, kind: ModelKind, p: usize) -> TreeParams {
        let max_depth = match (self.max_depth, self.unlimited_depth, kind) {
            (Some(d), _, _) => Some(d),
            (None, false, ModelKind::Cart) => Some(CART_DEFAULT_MAX_DEPTH),
            _ => None,
        };
        let max_features = match (self.max_features, kind) {
            (Some(k), _) => Some(k.min(p)),
            (None, ModelKind::RandomForest) => Some(((p as f64).sqrt().floor() as usize).max(1)),
            (None, _) => None,
        };
        TreeParams {
            max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
            max_features,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelParams {
    GaussianNb(GaussianNb),
    LogisticRegression(LogisticRegression),
    RandomForest(RandomForest),
    Cart(DecisionTree),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub hyper: Hyper,
    pub n_rows: usize,
    pub n_useful: usize,
}

/// Training-set statistics used to explain predictions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub median_useful: Vec<f64>,
    pub median_non_useful: Vec<f64>,
    pub median_all: Vec<f64>,
    /// Third quartile within the useful class.
    pub q3_useful: Vec<f64>,
    /// Ranked permutation importance (RF only).
    #[serde(default)]
    pub importance: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub kind: ModelKind,
    /// Input columns, before any PCA projection.
    pub feature_names: Vec<String>,
    pub parameters: ModelParams,
    pub pca: Option<PcaTransform>,
    pub meta: TrainingMeta,
    #[serde(default)]
    pub summary: Option<TrainingSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: crate::corpus::Usefulness,
    pub score: f64,
}

/// Fits a classifier of `kind` on every column of `ds`.
pub fn train_classifier(ds: &Dataset, kind: ModelKind, hyper: &Hyper, seed: u64) -> Result<TrainedModel> {
    hyper.check()?;
    let (useful, non_useful) = ds.class_counts();
    if useful == 0 || non_useful == 0 {
        return Err(Error::contract(format!(
            "training needs both classes (useful={useful}, non_useful={non_useful})"
        )));
    }
    if ds.feature_names.is_empty() {
        return Err(Error::contract("training needs at least one feature"));
    }
    let raw = ds.matrix()?;
    let y: Vec<bool> = ds.rows.iter().map(|r| r.label.is_useful()).collect();
    let pca = match hyper.pca_variance {
        Some(v) => Some(PcaTransform::fit(&raw, ds.feature_names.clone(), v)?),
        None => None,
    };
    let x: Vec<Vec<f64>> = match &pca {
        Some(p) => raw.iter().map(|r| p.transform(r)).collect(),
        None => raw,
    };
    let p = x[0].len();
    let all_rows: Vec<usize> = (0..x.len()).collect();
    let parameters = match kind {
        ModelKind::GaussianNb => ModelParams::GaussianNb(GaussianNb::fit(&x, &y)),
        ModelKind::LogisticRegression => ModelParams::LogisticRegression(LogisticRegression::fit(
            &x,
            &y,
            LrParams {
                l2: hyper.l2,
                max_iter: hyper.max_iter,
                tol: hyper.tol,
            },
        )),
        ModelKind::Cart => ModelParams::Cart(DecisionTree::fit(&x, &y, &all_rows, hyper.tree_params(kind, p), None)),
        ModelKind::RandomForest => ModelParams::RandomForest(RandomForest::fit(
            &x,
            &y,
            ForestParams {
                n_trees: hyper.n_trees,
                sample_fraction: hyper.sample_fraction,
                bootstrap: hyper.bootstrap,
                tree: hyper.tree_params(kind, p),
            },
            seed,
        )),
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        feature_names: ds.feature_names.clone(),
        parameters,
        pca,
        meta: TrainingMeta {
            seed,
            hyper: hyper.clone(),
            n_rows: ds.len(),
            n_useful: useful,
        },
        summary: None,
    })
}

impl TrainedModel {
    /// Score for a row already in `feature_names` order, no validation.
    pub fn score_raw(&self, row: &[f64]) -> f64 {
        let projected;
        let x = match &self.pca {
            Some(p) => {
                projected = p.transform(row);
                &projected[..]
            }
            None => row,
        };
        match &self.parameters {
            ModelParams::GaussianNb(m) => m.posteriors(x)[1],
            ModelParams::LogisticRegression(m) => m.predict_score(x),
            ModelParams::RandomForest(m) => m.predict_score(x),
            ModelParams::Cart(t) => t.predict_score(x),
        }
    }

    /// Checks the shape invariants of a deserialized model.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::contract(format!("unsupported model format version {}", self.format_version)));
        }
        let p = match &self.pca {
            Some(pca) => {
                if pca.mean.len() != self.feature_names.len()
                    || pca.components.len() != pca.retained
                    || pca.components.iter().any(|c| c.len() != self.feature_names.len())
                {
                    return Err(Error::contract("PCA block does not match feature names"));
                }
                pca.retained
            }
            None => self.feature_names.len(),
        };
        let ok = match (&self.parameters, self.kind) {
            (ModelParams::GaussianNb(m), ModelKind::GaussianNb) => {
                m.means.iter().chain(&m.variances).all(|v| v.len() == p)
            }
            (ModelParams::LogisticRegression(m), ModelKind::LogisticRegression) => {
                m.weights.len() == p && m.feature_means.len() == p && m.feature_scales.len() == p
            }
            (ModelParams::RandomForest(f), ModelKind::RandomForest) => {
                !f.trees.is_empty() && f.trees.iter().all(|t| tree_ok(t, p))
            }
            (ModelParams::Cart(t), ModelKind::Cart) => tree_ok(t, p),
            _ => false,
        };
        if !ok {
            return Err(Error::contract(format!("{} parameters inconsistent with {} features", self.kind, p)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(text).map_err(|e| Error::Parse {
            offset: crate::corpus::byte_offset(text, e.line(), e.column()),
            message: e.to_string(),
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Records class medians, the useful-class Q3 and, when asked, RF
    /// permutation importance over `ds`.
    pub fn attach_summary(&mut self, ds: &Dataset, importance_seed: Option<u64>) -> Result<()> {
        let ds = ds.select(&self.feature_names)?;
        let mut summary = TrainingSummary::default();
        for j in 0..ds.feature_names.len() {
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
            let all: Vec<f64> = useful.iter().chain(&non).copied().collect();
            summary.median_useful.push(median(&useful).unwrap_or(f64::NAN));
            summary.median_non_useful.push(median(&non).unwrap_or(f64::NAN));
            summary.median_all.push(median(&all).unwrap_or(0.0));
            useful.sort_by(f64::total_cmp);
            summary
                .q3_useful
                .push(if useful.is_empty() { f64::NAN } else { quantile_sorted(&useful, 0.75) });
        }
        if let (Some(seed), ModelKind::RandomForest) = (importance_seed, self.kind) {
            summary.importance = feature_importance(self, &ds, seed)?;
        }
        // NaN is not representable in JSON; fall back to the pooled median
        for j in 0..summary.median_all.len() {
            for v in [
                &mut summary.median_useful[j],
                &mut summary.median_non_useful[j],
                &mut summary.q3_useful[j],
            ] {
                if v.is_nan() {
                    *v = summary.median_all[j];
                }
            }
        }
        self.summary = Some(summary);
        Ok(())
    }
}

fn tree_ok(t: &DecisionTree, p: usize) -> bool {
    let n = t.nodes.len();
    n > 0
        && t.nodes.iter().all(|node| match node {
            Node::Leaf { distribution, .. } => (distribution[0] + distribution[1] - 1.0).abs() < 1e-9,
            Node::Split { feature, left, right, .. } => *feature < p && *left < n && *right < n,
        })
}

/// Predicts one row given in the model's feature order.
pub fn predict(model: &TrainedModel, row: &[f64]) -> Result<Prediction> {
    if row.len() != model.feature_names.len() {
        return Err(Error::contract(format!(
            "row has {} values, model expects {}",
            row.len(),
            model.feature_names.len()
        )));
    }
    if let Some((name, v)) = model.feature_names.iter().zip(row).find(|(_, v)| !v.is_finite()) {
        return Err(Error::contract(format!("feature {name} is non-finite ({v})")));
    }
    let score = model.score_raw(row).clamp(0.0, 1.0);
    Ok(Prediction {
        label: crate::corpus::Usefulness::from_bool(score >= 0.5),
        score,
    })
}

/// Predicts a row given as `(name, value)` pairs, which must cover the
/// model's features exactly.
pub fn predict_named(model: &TrainedModel, names: &[String], values: &[f64]) -> Result<Prediction> {
    if names != model.feature_names.as_slice() {
        return Err(Error::contract(format!(
            "feature mismatch: model expects [{}], got [{}]",
            model.feature_names.join(", "),
            names.join(", ")
        )));
    }
    predict(model, values)
}

/// Scores every row of `ds`, selecting the model's columns by name.
pub fn predict_dataset(model: &TrainedModel, ds: &Dataset) -> Result<Vec<f64>> {
    let x = ds.select(&model.feature_names)?.matrix()?;
    Ok(x.iter().map(|r| model.score_raw(r).clamp(0.0, 1.0)).collect())
}
