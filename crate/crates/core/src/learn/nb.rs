//! Gaussian naive Bayes with per-class diagonal covariance.

use serde::{Deserialize, Serialize};

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Index 0 is non-useful, 1 is useful.
    pub log_priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

impl GaussianNb {
    /// Maximum-likelihood fit: class frequencies, per-class means and
    /// (biased) variances.
    pub fn fit(x: &[Vec<f64>], y: &[bool]) -> Self {
        let p = x[0].len();
        let mut n = [0usize; 2];
        let mut sums = [vec![0.0; p], vec![0.0; p]];
        for (row, &label) in x.iter().zip(y) {
            let c = usize::from(label);
            n[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(row) {
                *s += v;
            }
        }
        let means = [0, 1].map(|c| sums[c].iter().map(|s| s / n[c] as f64).collect::<Vec<_>>());
        let mut sq = [vec![0.0; p], vec![0.0; p]];
        for (row, &label) in x.iter().zip(y) {
            let c = usize::from(label);
            for j in 0..p {
                let d = row[j] - means[c][j];
                sq[c][j] += d * d;
            }
        }
        let variances = [0, 1].map(|c| sq[c].iter().map(|s| (s / n[c] as f64).max(VARIANCE_FLOOR)).collect());
        let total = (n[0] + n[1]) as f64;
        GaussianNb {
            log_priors: [(n[0] as f64 / total).ln(), (n[1] as f64 / total).ln()],
            means,
            variances,
        }
    }

    pub fn log_joint(&self, row: &[f64]) -> [f64; 2] {
        [0, 1].map(|c| {
            let mut ll = self.log_priors[c];
            for ((x, m), v) in row.iter().zip(&self.means[c]).zip(&self.variances[c]) {
                let d = x - m;
                ll -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + d * d / v);
            }
            ll
        })
    }

    /// Normalized class posteriors `[non_useful, useful]`.
    pub fn posteriors(&self, row: &[f64]) -> [f64; 2] {
        let lj = self.log_joint(row);
        // two-class softmax written so the pair sums to 1 exactly
        let useful = 1.0 / (1.0 + (lj[0] - lj[1]).exp());
        [1.0 - useful, useful]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_boundary_at_midpoint() {
        let x: Vec<Vec<f64>> = [-1.0, 0.0, 1.0, 1.0, 2.0, 3.0].iter().map(|v| vec![*v]).collect();
        let y = [false, false, false, true, true, true];
        let nb = GaussianNb::fit(&x, &y);
        assert!((nb.posteriors(&[1.0])[1] - 0.5).abs() < 1e-9);
        assert!(nb.posteriors(&[0.9])[1] < 0.5);
        assert!(nb.posteriors(&[1.1])[1] > 0.5);
    }

    #[test]
    fn variance_floor_applies() {
        let x = vec![vec![1.0], vec![1.0], vec![2.0], vec![2.0]];
        let nb = GaussianNb::fit(&x, &[false, false, true, true]);
        assert_eq!(nb.variances[0][0], VARIANCE_FLOOR);
        let p = nb.posteriors(&[1.5]);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    }
}
