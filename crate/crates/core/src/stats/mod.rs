//! Nonparametric tests, effect sizes and quartile analysis.

pub mod study;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub use study::{run_comparative_study, CodeElementRow, FeatureComparison, QuartileTest, StudyReport};

/// Pooled sample size up to which Mann-Whitney p-values are exact.
pub const MWU_EXACT_MAX_N: usize = 20;

/// Kruskal-Wallis p-values are exact while the number of distinct group
/// assignments stays below this bound.
pub const KW_EXACT_MAX_ARRANGEMENTS: f64 = 200_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: String,
    pub statistic: f64,
    pub p_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect_size: Option<f64>,
    pub n1: usize,
    pub n2: usize,
}

/// Midranks of the pooled sample, doubled so they stay integral.
fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0u64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank ((i+1)+(j+1))/2
        let doubled = (i + 1 + j + 1) as u64;
        for &k in &order[i..=j] {
            ranks[k] = doubled;
        }
        i = j + 1;
    }
    ranks
}

/// Sizes of tie groups in a sample.
fn tie_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        out.push(j - i + 1);
        i = j + 1;
    }
    out
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::contract("samples must be non-empty"));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::contract("samples must be finite"));
    }
    Ok(())
}

fn u_statistic(a: &[f64], b: &[f64]) -> (f64, Vec<u64>) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = doubled_midranks(&pooled);
    let r_a: u64 = ranks[..a.len()].iter().sum();
    let n1 = a.len() as f64;
    (r_a as f64 / 2.0 - n1 * (n1 + 1.0) / 2.0, ranks)
}

/// Mann-Whitney U of `a` against `b` with a two-sided p-value: exact
/// enumeration for pooled size up to [`MWU_EXACT_MAX_N`], otherwise the
/// normal approximation with tie and continuity corrections.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() + b.len() <= MWU_EXACT_MAX_N {
        mann_whitney_exact(a, b)
    } else {
        mann_whitney_normal(a, b)
    }
}

/// Exact two-sided p: share of all C(n, n1) splits of the pooled midranks
/// whose rank sum deviates from its mean at least as much as observed.
pub fn mann_whitney_exact(a: &[f64], b: &[f64]) -> Result<TestResult> {
    check_samples(a, b)?;
    let (u, ranks) = u_statistic(a, b);
    let (n1, n) = (a.len(), ranks.len());
    let max_sum: usize = ranks.iter().map(|&r| r as usize).sum();
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0u128; max_sum + 1]; n1 + 1];
    ways[0][0] = 1;
    for &r in &ranks {
        let r = r as usize;
        for k in (1..=n1).rev() {
            for s in (r..=max_sum).rev() {
                let add = ways[k - 1][s - r];
                if add != 0 {
                    ways[k][s] += add;
                }
            }
        }
    }
    let observed: i64 = ranks[..n1].iter().sum::<u64>() as i64;
    let center2 = (n1 * (n + 1)) as i64; // doubled mean rank sum
    let dev = (observed - center2).abs();
    let total: u128 = ways[n1].iter().sum();
    let extreme: u128 = ways[n1]
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 - center2).abs() >= dev)
        .map(|(_, c)| *c)
        .sum();
    Ok(TestResult {
        method: "mann-whitney (exact)".into(),
        statistic: u,
        p_value: (extreme as f64 / total as f64).min(1.0),
        effect_size: cohens_d(a, b).ok(),
        n1,
        n2: b.len(),
    })
}

pub fn mann_whitney_normal(a: &[f64], b: &[f64]) -> Result<TestResult> {
    check_samples(a, b)?;
    let (u, _) = u_statistic(a, b);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let tie_term: f64 = tie_sizes(&pooled).iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let variance = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let mean = n1 * n2 / 2.0;
    let p = if variance <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / variance.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(TestResult {
        method: "mann-whitney (normal approx.)".into(),
        statistic: u,
        p_value: p,
        effect_size: cohens_d(a, b).ok(),
        n1: a.len(),
        n2: b.len(),
    })
}

fn h_statistic(rank_sums2: &[u64], sizes: &[usize], n: usize, tie_correction: f64) -> f64 {
    let n = n as f64;
    let sum: f64 = rank_sums2
        .iter()
        .zip(sizes)
        .map(|(&r2, &k)| {
            let r = r2 as f64 / 2.0;
            r * r / k as f64
        })
        .sum();
    let h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
    if tie_correction <= 0.0 {
        0.0
    } else {
        (h / tie_correction).max(0.0)
    }
}

fn log_multinomial(sizes: &[usize]) -> f64 {
    let lf = |k: usize| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    lf(sizes.iter().sum()) - sizes.iter().map(|&k| lf(k)).sum::<f64>()
}

/// Kruskal-Wallis H with tie correction. The p-value is exact (enumeration
/// of all group assignments) when that is tractable, otherwise from the
/// chi-square distribution with k-1 degrees of freedom.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestResult> {
    if groups.len() < 2 {
        return Err(Error::contract("kruskal-wallis needs at least two groups"));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::contract("kruskal-wallis groups must be non-empty"));
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    if pooled.iter().any(|x| !x.is_finite()) {
        return Err(Error::contract("samples must be finite"));
    }
    let n = pooled.len();
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let ranks = doubled_midranks(&pooled);
    let tie_term: f64 = tie_sizes(&pooled).iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let correction = 1.0 - tie_term / ((n as f64).powi(3) - n as f64);
    let mut sums = Vec::with_capacity(groups.len());
    let mut offset = 0;
    for &k in &sizes {
        sums.push(ranks[offset..offset + k].iter().sum::<u64>());
        offset += k;
    }
    let h = h_statistic(&sums, &sizes, n, correction);
    let exact = log_multinomial(&sizes) <= KW_EXACT_MAX_ARRANGEMENTS.ln();
    let p = if correction <= 0.0 {
        1.0
    } else if exact {
        kruskal_wallis_exact_p(&ranks, &sizes, h, correction)
    } else {
        let chi = ChiSquared::new((groups.len() - 1) as f64).expect("df >= 1");
        (1.0 - chi.cdf(h)).clamp(0.0, 1.0)
    };
    Ok(TestResult {
        method: if exact { "kruskal-wallis (exact)" } else { "kruskal-wallis (chi-square)" }.into(),
        statistic: h,
        p_value: p,
        effect_size: None,
        n1: sizes[0],
        n2: sizes[1..].iter().sum(),
    })
}

/// Fills groups one at a time with every combination of the remaining
/// positions and counts assignments whose H reaches the observed value.
fn kruskal_wallis_exact_p(ranks: &[u64], sizes: &[usize], h_obs: f64, correction: f64) -> f64 {
    struct Search<'a> {
        ranks: &'a [u64],
        sizes: &'a [usize],
        sums: Vec<u64>,
        used: Vec<bool>,
        threshold: f64,
        correction: f64,
        hits: u64,
        total: u64,
    }
    impl Search<'_> {
        fn group(&mut self, g: usize) {
            if g == self.sizes.len() - 1 {
                let rest: u64 = (0..self.ranks.len()).filter(|&i| !self.used[i]).map(|i| self.ranks[i]).sum();
                self.sums[g] = rest;
                let h = h_statistic(&self.sums, self.sizes, self.ranks.len(), self.correction);
                self.total += 1;
                if h >= self.threshold {
                    self.hits += 1;
                }
                return;
            }
            self.pick(g, 0, self.sizes[g], 0);
        }

        fn pick(&mut self, g: usize, start: usize, left: usize, sum: u64) {
            if left == 0 {
                self.sums[g] = sum;
                self.group(g + 1);
                return;
            }
            for i in start..self.ranks.len() {
                if self.used[i] {
                    continue;
                }
                let free_after = (i..self.ranks.len()).filter(|&j| !self.used[j]).count();
                if free_after < left {
                    break;
                }
                self.used[i] = true;
                self.pick(g, i + 1, left - 1, sum + self.ranks[i]);
                self.used[i] = false;
            }
        }
    }
    let mut s = Search {
        ranks,
        sizes,
        sums: vec![0; sizes.len()],
        used: vec![false; ranks.len()],
        threshold: h_obs - 1e-9 * h_obs.abs().max(1.0),
        correction,
        hits: 0,
        total: 0,
    };
    s.group(0);
    s.hits as f64 / s.total as f64
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Classic Cohen's d with (n-1)-weighted pooled standard deviation.
/// Signed; callers wanting magnitude take `abs()`.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::contract("cohen's d needs at least two values per sample"));
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let pooled = (((n1 - 1.0) * variance(a) + (n2 - 1.0) * variance(b)) / (n1 + n2 - 2.0)).sqrt();
    if !(pooled > 0.0) {
        return Err(Error::Degenerate("pooled standard deviation is zero".into()));
    }
    Ok((mean(a) - mean(b)) / pooled)
}

/// Effect-size band used as a report annotation.
pub fn effect_band(d: f64) -> &'static str {
    match d.abs() {
        x if x < 0.2 => "negligible",
        x if x < 0.5 => "small",
        x if x < 0.8 => "medium",
        _ => "large",
    }
}

pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::contract("paired samples differ in length"));
    }
    if a.len() < 2 {
        return Err(Error::contract("paired t-test needs at least two pairs"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let var = variance(&diffs);
    if !(var > 0.0) {
        return Err(Error::contract("paired differences have zero variance"));
    }
    let n = diffs.len() as f64;
    let t = mean(&diffs) / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("df >= 1");
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok(TestResult {
        method: "paired t-test".into(),
        statistic: t,
        p_value: p,
        effect_size: None,
        n1: a.len(),
        n2: b.len(),
    })
}

/// Type-7 (linear interpolation) empirical quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    Some(quantile_sorted(&s, 0.5))
}

/// Splits values at the type-7 quartiles; a value equal to a threshold
/// goes to the lower quartile. Each part is sorted ascending.
pub fn quartile_partition(values: &[f64]) -> Result<[Vec<f64>; 4]> {
    if values.len() < 4 {
        return Err(Error::contract("quartile partition needs at least four values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cuts = [0.25, 0.5, 0.75].map(|q| quantile_sorted(&sorted, q));
    let mut parts: [Vec<f64>; 4] = Default::default();
    for v in sorted {
        let q = cuts.iter().position(|&c| v <= c).unwrap_or(3);
        parts[q].push(v);
    }
    Ok(parts)
}
