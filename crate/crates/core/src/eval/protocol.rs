//! Evaluation protocols: k-fold cross-validation, repeated holdout runs for
//! the random forest, and the baseline comparison.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{classification_metrics, pr_points, rank_auc, roc_auc, Metrics, PrPoint, RocPoint};
use crate::corpus::Usefulness;
use crate::error::{Error, Result};
use crate::features::{column_means, fill_missing, Dataset, FeatureSet, BASELINE_COLUMNS};
use crate::learn::{predict_dataset, train_classifier, Hyper, ModelKind, TrainedModel};
use crate::rng;
use crate::stats::{cohens_d, mann_whitney_u, mean};

/// Share of rows used for training in each random-forest run.
pub const TRAIN_FRACTION: f64 = 0.65;

const CV_STREAM: u64 = 0x6376;
const RUN_SPLIT_STREAM: u64 = 0x7275_6e73;
const RUN_MODEL_STREAM: u64 = 0x7275_6e6d;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    CrossValidation,
    RepeatedHoldout,
    Holdout,
}

/// Metrics of one fold or run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitResult {
    pub index: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub metrics: Metrics,
    pub auc: Option<f64>,
}

/// Quantities of one performance-table row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub useful_precision: f64,
    pub useful_recall: f64,
    pub non_useful_precision: f64,
    pub non_useful_recall: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub auc: Option<f64>,
}

impl Summary {
    pub fn from_metrics(m: &Metrics, auc: Option<f64>) -> Self {
        Summary {
            useful_precision: m.useful.precision,
            useful_recall: m.useful.recall,
            non_useful_precision: m.non_useful.precision,
            non_useful_recall: m.non_useful.recall,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            accuracy: m.accuracy,
            auc,
        }
    }

    fn mean_of(units: &[UnitResult]) -> Self {
        let n = units.len() as f64;
        let avg = |f: &dyn Fn(&Metrics) -> f64| units.iter().map(|u| f(&u.metrics)).sum::<f64>() / n;
        let aucs: Vec<f64> = units.iter().filter_map(|u| u.auc).collect();
        Summary {
            useful_precision: avg(&|m| m.useful.precision),
            useful_recall: avg(&|m| m.useful.recall),
            non_useful_precision: avg(&|m| m.non_useful.precision),
            non_useful_recall: avg(&|m| m.non_useful.recall),
            precision: avg(&|m| m.precision),
            recall: avg(&|m| m.recall),
            f1: avg(&|m| m.f1),
            accuracy: avg(&|m| m.accuracy),
            auc: (aucs.len() == units.len()).then(|| mean(&aucs)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelKind,
    pub feature_set: String,
    pub protocol: Protocol,
    /// One confusion matrix over every held-out prediction.
    pub pooled: Metrics,
    pub pooled_auc: Option<f64>,
    /// Mean of the per-unit metrics.
    pub mean: Summary,
    pub units: Vec<UnitResult>,
    pub roc: Vec<RocPoint>,
    pub pr: Vec<PrPoint>,
    pub pca: bool,
}

impl EvalReport {
    /// Pooled metrics for cross-validation, per-run means otherwise.
    pub fn headline(&self) -> Summary {
        match self.protocol {
            Protocol::CrossValidation | Protocol::Holdout => Summary::from_metrics(&self.pooled, self.pooled_auc),
            Protocol::RepeatedHoldout => self.mean,
        }
    }

    /// Accuracy of every fold or run, for significance tests.
    pub fn unit_accuracies(&self) -> Vec<f64> {
        self.units.iter().map(|u| u.metrics.accuracy).collect()
    }
}

fn labels_of(ds: &Dataset) -> Vec<bool> {
    ds.rows.iter().map(|r| r.label.is_useful()).collect()
}

/// Fits on the `train` rows after imputing with their column means, and
/// scores the `test` rows imputed with the same means.
pub fn fit_and_score(
    ds: &Dataset,
    train: &[usize],
    test: &[usize],
    kind: ModelKind,
    hyper: &Hyper,
    seed: u64,
) -> Result<(TrainedModel, Vec<f64>)> {
    let train_ds = ds.subset(train);
    let means = column_means(&train_ds)?;
    let model = train_classifier(&fill_missing(&train_ds, &means), kind, hyper, seed)?;
    let scores = predict_dataset(&model, &fill_missing(&ds.subset(test), &means))?;
    Ok((model, scores))
}

fn unit_result(index: usize, n_train: usize, truth: &[bool], scores: &[f64]) -> Result<UnitResult> {
    let t: Vec<Usefulness> = truth.iter().map(|&b| Usefulness::from_bool(b)).collect();
    let p: Vec<Usefulness> = scores.iter().map(|&s| Usefulness::from_bool(s >= 0.5)).collect();
    let both = truth.iter().any(|&b| b) && truth.iter().any(|&b| !b);
    Ok(UnitResult {
        index,
        n_train,
        n_test: truth.len(),
        metrics: classification_metrics(&t, &p)?,
        auc: if both { Some(roc_auc(truth, scores)?.1) } else { None },
    })
}

fn assemble(
    kind: ModelKind,
    feature_set: String,
    protocol: Protocol,
    hyper: &Hyper,
    truth: &[bool],
    scores: &[f64],
    units: Vec<UnitResult>,
) -> Result<EvalReport> {
    let t: Vec<Usefulness> = truth.iter().map(|&b| Usefulness::from_bool(b)).collect();
    let p: Vec<Usefulness> = scores.iter().map(|&s| Usefulness::from_bool(s >= 0.5)).collect();
    let pooled = classification_metrics(&t, &p)?;
    let both = truth.iter().any(|&b| b) && truth.iter().any(|&b| !b);
    let (roc, pooled_auc, pr) = if both {
        let (roc, auc) = roc_auc(truth, scores)?;
        let check = rank_auc(truth, scores)?;
        if (auc - check).abs() > 1e-9 {
            return Err(Error::contract(format!("AUC cross-check failed: trapezoid {auc} vs rank {check}")));
        }
        (roc, Some(auc), pr_points(truth, scores)?)
    } else {
        (Vec::new(), None, Vec::new())
    };
    Ok(EvalReport {
        model: kind,
        feature_set,
        protocol,
        pooled,
        pooled_auc,
        mean: Summary::mean_of(&units),
        units,
        roc,
        pr,
        pca: hyper.pca_variance.is_some(),
    })
}

fn set_name(ds: &Dataset) -> String {
    FeatureSet::Custom(ds.feature_names.clone()).display()
}

/// Stratified k-fold cross-validation with pooled predictions.
pub fn cross_validate(ds: &Dataset, kind: ModelKind, hyper: &Hyper, k: usize, seed: u64) -> Result<EvalReport> {
    let labels = labels_of(ds);
    let folds = super::kfold_split(ds.len(), k, Some(&labels), seed)?;
    let results = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            let (_, scores) = fit_and_score(ds, &train, test, kind, hyper, rng::derive(seed, CV_STREAM, f as u64))?;
            let truth: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
            Ok((unit_result(f, train.len(), &truth, &scores)?, scores))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pooled_scores = vec![0.0; ds.len()];
    let mut units = Vec::with_capacity(k);
    for ((unit, scores), test) in results.into_iter().zip(&folds) {
        for (&i, s) in test.iter().zip(scores) {
            pooled_scores[i] = s;
        }
        units.push(unit);
    }
    assemble(kind, set_name(ds), Protocol::CrossValidation, hyper, &labels, &pooled_scores, units)
}

/// Stratified random split with `fraction` of each class in the first part.
pub fn train_test_split(labels: &[bool], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut r = rng::seeded(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut r);
        let cut = (fraction * idx.len() as f64).round() as usize;
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Repeated 65/35 holdout: a fresh split and model per run; the headline
/// is the mean over runs.
pub fn evaluate_runs(ds: &Dataset, kind: ModelKind, hyper: &Hyper, runs: usize, seed: u64) -> Result<EvalReport> {
    if runs == 0 {
        return Err(Error::contract("runs must be at least 1"));
    }
    let labels = labels_of(ds);
    let results = (0..runs)
        .into_par_iter()
        .map(|r| {
            let (train, test) = train_test_split(&labels, TRAIN_FRACTION, rng::derive(seed, RUN_SPLIT_STREAM, r as u64));
            if test.is_empty() {
                return Err(Error::contract("dataset too small for a holdout split"));
            }
            let (_, scores) = fit_and_score(ds, &train, &test, kind, hyper, rng::derive(seed, RUN_MODEL_STREAM, r as u64))?;
            let truth: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
            Ok((unit_result(r, train.len(), &truth, &scores)?, truth, scores))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut truth = Vec::new();
    let mut scores = Vec::new();
    let mut units = Vec::new();
    for (u, t, s) in results {
        units.push(u);
        truth.extend(t);
        scores.extend(s);
    }
    assemble(kind, set_name(ds), Protocol::RepeatedHoldout, hyper, &truth, &scores, units)
}

/// The random-forest protocol: [`evaluate_runs`] with a forest.
pub fn evaluate_random_forest_runs(ds: &Dataset, hyper: &Hyper, runs: usize, seed: u64) -> Result<EvalReport> {
    evaluate_runs(ds, ModelKind::RandomForest, hyper, runs, seed)
}

/// Trains on all of `train` and evaluates once on `test`.
pub fn evaluate_holdout(train: &Dataset, test: &Dataset, kind: ModelKind, hyper: &Hyper, seed: u64) -> Result<EvalReport> {
    let means = column_means(train)?;
    let model = train_classifier(&fill_missing(train, &means), kind, hyper, seed)?;
    let test = fill_missing(&test.select(&train.feature_names)?, &means);
    let scores = predict_dataset(&model, &test)?;
    let truth = labels_of(&test);
    let unit = unit_result(0, train.len(), &truth, &scores)?;
    assemble(kind, set_name(train), Protocol::Holdout, hyper, &truth, &scores, vec![unit])
}

/// One configuration of the performance grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    pub kind: ModelKind,
    pub feature_set: FeatureSet,
    pub pca: bool,
}

/// NB and LR with and without PCA on all features, and RF on the textual,
/// experience, all and selected sets.
pub fn default_grid() -> Vec<GridEntry> {
    let mut g = Vec::new();
    for kind in [ModelKind::GaussianNb, ModelKind::LogisticRegression] {
        for pca in [false, true] {
            g.push(GridEntry {
                kind,
                feature_set: FeatureSet::All,
                pca,
            });
        }
    }
    for fs in [FeatureSet::Textual, FeatureSet::Experience, FeatureSet::All, FeatureSet::Selected] {
        g.push(GridEntry {
            kind: ModelKind::RandomForest,
            feature_set: fs,
            pca: false,
        });
    }
    g
}

/// Runs each grid entry with the protocol matching its learner: k-fold CV
/// for NB/LR/CART and repeated holdout for RF.
pub fn run_grid(
    ds: &Dataset,
    grid: &[GridEntry],
    hyper: &Hyper,
    k: usize,
    runs: usize,
    seed: u64,
) -> Result<Vec<(GridEntry, EvalReport)>> {
    grid.iter()
        .map(|entry| {
            let sub = ds.select(&entry.feature_set.columns())?;
            let mut h = hyper.clone();
            if entry.pca {
                h.pca_variance.get_or_insert(crate::learn::pca::DEFAULT_VARIANCE_TARGET);
            }
            let mut report = match entry.kind {
                ModelKind::RandomForest => evaluate_runs(&sub, entry.kind, &h, runs, seed)?,
                _ => cross_validate(&sub, entry.kind, &h, k, seed)?,
            };
            report.feature_set = entry.feature_set.display();
            Ok((entry.clone(), report))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub against: String,
    pub p_value: f64,
    pub cohens_d: Option<f64>,
    /// Better mean accuracy than the reference and p < 0.05.
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub classifier: String,
    pub columns: Vec<String>,
    pub test: Summary,
    pub validation: Summary,
    /// Per-fold or per-run test accuracies.
    pub test_accuracies: Vec<f64>,
    pub significance: Option<Significance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub rows: Vec<ComparisonRow>,
    pub best_baseline: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonConfig {
    /// Folds for the CART baselines on the test side.
    pub k: usize,
    /// Runs for the RevHelper forests on the test side.
    pub runs: usize,
    pub forest: Hyper,
    pub cart: Hyper,
    pub seed: u64,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        ComparisonConfig {
            k: 10,
            runs: 10,
            forest: Hyper::default(),
            cart: Hyper::default(),
            seed: 0,
        }
    }
}

/// Baseline variants: keyword count (I), sentiment group (II-a), sentiment
/// score (II-b), and keyword count combined with either (III-a, III-b).
pub fn baseline_variants() -> Vec<(&'static str, Vec<&'static str>)> {
    let [kw, group, score] = BASELINE_COLUMNS;
    vec![
        ("Baseline-I", vec![kw]),
        ("Baseline-II-a", vec![group]),
        ("Baseline-II-b", vec![score]),
        ("Baseline-III-a", vec![kw, group]),
        ("Baseline-III-b", vec![kw, score]),
    ]
}

/// Baseline comparison: CART baselines against RevHelper forests, on a test protocol
/// over `train` and on the separate `validation` set.
pub fn run_baseline_comparison(train: &Dataset, validation: &Dataset, cfg: &ComparisonConfig) -> Result<BaselineComparison> {
    if train.feature_names != validation.feature_names {
        return Err(Error::contract("train and validation datasets have different columns"));
    }
    let mut rows = Vec::new();
    for (name, cols) in baseline_variants() {
        let sub = train.select(&cols)?;
        let cv = cross_validate(&sub, ModelKind::Cart, &cfg.cart, cfg.k, cfg.seed)?;
        let val = evaluate_holdout(&sub, &validation.select(&cols)?, ModelKind::Cart, &cfg.cart, cfg.seed)?;
        rows.push(ComparisonRow {
            classifier: name.to_string(),
            columns: cols.iter().map(|c| c.to_string()).collect(),
            test: cv.headline(),
            validation: val.headline(),
            test_accuracies: cv.unit_accuracies(),
            significance: None,
        });
    }
    let best = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.test.accuracy.total_cmp(&b.1.test.accuracy).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("five baselines");
    let best_name = rows[best].classifier.clone();
    let best_acc = rows[best].test_accuracies.clone();

    for (name, fs) in [
        ("RevHelper_txt", FeatureSet::Textual),
        ("RevHelper_exp", FeatureSet::Experience),
        ("RevHelper", FeatureSet::All),
    ] {
        let cols = fs.columns();
        let sub = train.select(&cols)?;
        let runs = evaluate_random_forest_runs(&sub, &cfg.forest, cfg.runs, cfg.seed)?;
        let val = evaluate_holdout(&sub, &validation.select(&cols)?, ModelKind::RandomForest, &cfg.forest, cfg.seed)?;
        let acc = runs.unit_accuracies();
        let mwu = mann_whitney_u(&acc, &best_acc)?;
        let significance = Significance {
            against: best_name.clone(),
            p_value: mwu.p_value,
            cohens_d: cohens_d(&acc, &best_acc).ok(),
            significant: mwu.p_value < 0.05 && mean(&acc) > mean(&best_acc),
        };
        rows.push(ComparisonRow {
            classifier: name.to_string(),
            columns: cols,
            test: runs.headline(),
            validation: val.headline(),
            test_accuracies: acc,
            significance: Some(significance),
        });
    }
    Ok(BaselineComparison {
        rows,
        best_baseline: best_name,
    })
}
