//! L2-regularized logistic regression trained by full-batch gradient
//! descent on standardized features.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    /// Weights in standardized feature space.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrParams {
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LrParams {
    fn default() -> Self {
        LrParams {
            l2: 0.0,
            max_iter: 10_000,
            tol: 1e-8,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean log-loss plus `l2/2 * |w|^2`, and its gradient `(dw, db)`.
pub fn log_loss_and_gradient(w: &[f64], b: f64, x: &[Vec<f64>], y: &[f64], l2: f64) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (row, &t) in x.iter().zip(y) {
        let z = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        // -[t log s(z) + (1-t) log(1 - s(z))]
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        gb += r;
        for (g, a) in gw.iter_mut().zip(row) {
            *g += r * a;
        }
    }
    loss /= n;
    gb /= n;
    for (g, wi) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 * wi;
    }
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    (loss, gw, gb)
}

impl LogisticRegression {
    pub fn fit(x: &[Vec<f64>], y: &[bool], params: LrParams) -> Self {
        let p = x[0].len();
        let n = x.len() as f64;
        let mut means = vec![0.0; p];
        for row in x {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut scales = vec![0.0; p];
        for row in x {
            for j in 0..p {
                scales[j] += (row[j] - means[j]).powi(2) / n;
            }
        }
        for s in &mut scales {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        let z: Vec<Vec<f64>> = x
            .iter()
            .map(|row| (0..p).map(|j| (row[j] - means[j]) / scales[j]).collect())
            .collect();
        let t: Vec<f64> = y.iter().map(|&b| f64::from(u8::from(b))).collect();

        // Lipschitz bound of the gradient for unit-variance columns plus bias.
        let step = 1.0 / (0.25 * (p as f64 + 1.0) + params.l2);
        let mut w = vec![0.0; p];
        let mut b = 0.0;
        let (mut loss, mut gw, mut gb) = log_loss_and_gradient(&w, b, &z, &t, params.l2);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < params.max_iter {
            for (wi, g) in w.iter_mut().zip(&gw) {
                *wi -= step * g;
            }
            b -= step * gb;
            iterations += 1;
            let (next, ngw, ngb) = log_loss_and_gradient(&w, b, &z, &t, params.l2);
            let rel = (loss - next).abs() / loss.abs().max(1e-12);
            loss = next;
            gw = ngw;
            gb = ngb;
            if rel < params.tol {
                converged = true;
                break;
            }
        }
        LogisticRegression {
            weights: w,
            bias: b,
            feature_means: means,
            feature_scales: scales,
            iterations,
            converged,
        }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.bias
            + row
                .iter()
                .zip(&self.weights)
                .zip(self.feature_means.iter().zip(&self.feature_scales))
                .map(|((x, w), (m, s))| w * (x - m) / s)
                .sum::<f64>()
    }

    pub fn predict_score(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_scores_half() {
        let m = LogisticRegression {
            weights: vec![0.0; 3],
            bias: 0.0,
            feature_means: vec![0.0; 3],
            feature_scales: vec![1.0; 3],
            iterations: 0,
            converged: true,
        };
        assert_eq!(m.predict_score(&[5.0, -2.0, 1e6]), 0.5);
    }

    #[test]
    fn separable_data_fits() {
        let x: Vec<Vec<f64>> = [-2.0, -1.5, -1.0, 1.0, 1.5, 2.0].iter().map(|v| vec![*v]).collect();
        let y = [false, false, false, true, true, true];
        let m = LogisticRegression::fit(&x, &y, LrParams::default());
        for (row, label) in x.iter().zip(y) {
            assert_eq!(m.predict_score(row) >= 0.5, label);
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((softplus(-800.0)).abs() < 1e-300);
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
    }
}
