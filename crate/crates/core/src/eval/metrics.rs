//! Confusion-matrix metrics, ROC/PR curves and fold assignment.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::Usefulness;
use crate::error::{Error, Result};
use crate::rng;

/// Counts with useful as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub support: usize,
    /// False when nothing was predicted as this class (precision reported as 0).
    pub precision_defined: bool,
    /// False when the class is absent from the truth (recall reported as 0).
    pub recall_defined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub useful: ClassMetrics,
    pub non_useful: ClassMetrics,
    /// Support-weighted precision over both classes.
    pub precision: f64,
    /// Support-weighted recall over both classes.
    pub recall: f64,
    /// Harmonic mean of the weighted precision and recall.
    pub f1: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, false)
    } else {
        (num as f64 / den as f64, true)
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl Metrics {
    pub fn from_confusion(c: Confusion) -> Result<Self> {
        let n = c.total();
        if n == 0 {
            return Err(Error::contract("metrics need at least one row"));
        }
        let (up, upd) = ratio(c.tp, c.tp + c.fp);
        let (ur, urd) = ratio(c.tp, c.tp + c.fn_);
        let (np, npd) = ratio(c.tn, c.tn + c.fn_);
        let (nr, nrd) = ratio(c.tn, c.tn + c.fp);
        let (su, sn) = (c.tp + c.fn_, c.tn + c.fp);
        let precision = (su as f64 * up + sn as f64 * np) / n as f64;
        let recall = (su as f64 * ur + sn as f64 * nr) / n as f64;
        Ok(Metrics {
            useful: ClassMetrics {
                precision: up,
                recall: ur,
                support: su,
                precision_defined: upd,
                recall_defined: urd,
            },
            non_useful: ClassMetrics {
                precision: np,
                recall: nr,
                support: sn,
                precision_defined: npd,
                recall_defined: nrd,
            },
            precision,
            recall,
            f1: harmonic(precision, recall),
            accuracy: (c.tp + c.tn) as f64 / n as f64,
            confusion: c,
        })
    }

    /// Recomputes the weighted aggregates by hand from the confusion matrix
    /// and fails if they disagree with the stored values.
    pub fn audit(&self) -> Result<()> {
        let c = self.confusion;
        let n = c.total() as f64;
        let mut p = 0.0;
        let mut r = 0.0;
        if c.tp + c.fp > 0 {
            p += (c.tp + c.fn_) as f64 / n * c.tp as f64 / (c.tp + c.fp) as f64;
        }
        if c.tn + c.fn_ > 0 {
            p += (c.tn + c.fp) as f64 / n * c.tn as f64 / (c.tn + c.fn_) as f64;
        }
        if c.tp + c.fn_ > 0 {
            r += c.tp as f64 / n;
        }
        if c.tn + c.fp > 0 {
            r += c.tn as f64 / n;
        }
        let rates = [
            self.precision,
            self.recall,
            self.f1,
            self.accuracy,
            self.useful.precision,
            self.useful.recall,
            self.non_useful.precision,
            self.non_useful.recall,
        ];
        if (p - self.precision).abs() > 1e-12
            || (r - self.recall).abs() > 1e-12
            || rates.iter().any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::contract("metrics self-audit failed"));
        }
        Ok(())
    }
}

pub fn confusion(truth: &[Usefulness], predicted: &[Usefulness]) -> Result<Confusion> {
    if truth.len() != predicted.len() {
        return Err(Error::contract(format!(
            "truth has {} labels, predictions {}",
            truth.len(),
            predicted.len()
        )));
    }
    let mut c = Confusion::default();
    for (t, p) in truth.iter().zip(predicted) {
        match (t.is_useful(), p.is_useful()) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn classification_metrics(truth: &[Usefulness], predicted: &[Usefulness]) -> Result<Metrics> {
    let c = confusion(truth, predicted)?;
    let m = Metrics::from_confusion(c)?;
    m.audit()?;
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Rows scoring at or above this value are predicted useful.
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
    pub threshold: f64,
}

fn check_curve_input(truth: &[bool], scores: &[f64]) -> Result<(usize, usize)> {
    if truth.len() != scores.len() {
        return Err(Error::contract("truth and scores differ in length"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::contract("scores must be finite"));
    }
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::contract("ROC needs both classes in the truth"));
    }
    Ok((pos, neg))
}

/// Cumulative (tp, fp) after each distinct score, highest first.
fn sweep(truth: &[bool], scores: &[f64]) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    for (k, &i) in order.iter().enumerate() {
        if truth[i] {
            tp += 1;
        } else {
            fp += 1;
        }
        if order.get(k + 1).is_none_or(|&j| scores[j] != scores[i]) {
            out.push((scores[i], tp, fp));
        }
    }
    out
}

/// ROC points from a threshold sweep over the distinct scores, and the
/// trapezoid area under them.
pub fn roc_auc(truth: &[bool], scores: &[f64]) -> Result<(Vec<RocPoint>, f64)> {
    let (pos, neg) = check_curve_input(truth, scores)?;
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    for (s, tp, fp) in sweep(truth, scores) {
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold: s,
        });
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum();
    // the infinite threshold cannot be written as JSON
    points[0].threshold = f64::MAX;
    Ok((points, auc))
}

/// Rank (Mann-Whitney) form of the AUC with midranks for ties.
pub fn rank_auc(truth: &[bool], scores: &[f64]) -> Result<f64> {
    let (pos, neg) = check_curve_input(truth, scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| truth[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

/// Precision-recall points over the same sweep as [`roc_auc`].
pub fn pr_points(truth: &[bool], scores: &[f64]) -> Result<Vec<PrPoint>> {
    let (pos, _) = check_curve_input(truth, scores)?;
    Ok(sweep(truth, scores)
        .into_iter()
        .map(|(s, tp, fp)| PrPoint {
            recall: tp as f64 / pos as f64,
            precision: tp as f64 / (tp + fp) as f64,
            threshold: s,
        })
        .collect())
}

/// Splits `0..n` into `k` disjoint folds whose sizes differ by at most one.
/// With `stratify`, each class is shuffled and dealt round-robin so every
/// fold holds its share of each class to within one item.
pub fn kfold_split(n: usize, k: usize, stratify: Option<&[bool]>, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::contract(format!("k must be at least 2, got {k}")));
    }
    if n < k {
        return Err(Error::contract(format!("cannot split {n} rows into {k} folds")));
    }
    let mut r = rng::seeded(seed);
    let order: Vec<usize> = match stratify {
        Some(labels) => {
            if labels.len() != n {
                return Err(Error::contract("stratification labels differ in length from n"));
            }
            let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
            let mut neg: Vec<usize> = (0..n).filter(|&i| !labels[i]).collect();
            pos.shuffle(&mut r);
            neg.shuffle(&mut r);
            pos.into_iter().chain(neg).collect()
        }
        None => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut r);
            all
        }
    };
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, i) in order.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}
