//! Principal component analysis over the sample covariance.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, Row};

pub const DEFAULT_VARIANCE_TARGET: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaTransform {
    pub mean: Vec<f64>,
    /// Retained components, one row per component, unit length.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub explained_ratio: Vec<f64>,
    pub retained: usize,
    /// Column names of the input space.
    pub input_names: Vec<String>,
}

impl PcaTransform {
    pub fn fit(x: &[Vec<f64>], input_names: Vec<String>, variance_target: f64) -> Result<Self> {
        if !(variance_target > 0.0 && variance_target <= 1.0) {
            return Err(Error::contract(format!("variance target {variance_target} outside (0, 1]")));
        }
        if x.len() < 2 {
            return Err(Error::contract("PCA needs at least 2 rows"));
        }
        let (n, p) = (x.len(), x[0].len());
        let mut mean = vec![0.0; p];
        for row in x {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::contract("PCA input has a non-finite value"));
            }
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let centered = DMatrix::from_fn(n, p, |i, j| x[i][j] - mean[j]);
        let cov = centered.transpose() * &centered / (n as f64 - 1.0);
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let total: f64 = values.iter().sum();
        if total <= 0.0 {
            return Err(Error::Degenerate("dataset has zero variance".into()));
        }
        let nonzero = values.iter().filter(|&&v| v > 1e-12 * total).count();
        let mut retained = 0;
        let mut cum = 0.0;
        for v in &values[..nonzero] {
            cum += v / total;
            retained += 1;
            if cum >= variance_target - 1e-12 {
                break;
            }
        }
        let components = order[..retained]
            .iter()
            .map(|&i| {
                let mut c: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
                // sign convention: largest-magnitude loading positive
                let lead = c.iter().copied().fold(0.0_f64, |a, v| if v.abs() > a.abs() { v } else { a });
                if lead < 0.0 {
                    c.iter_mut().for_each(|v| *v = -*v);
                }
                c
            })
            .collect();
        Ok(PcaTransform {
            mean,
            components,
            explained_variance: values[..retained].to_vec(),
            explained_ratio: values[..retained].iter().map(|v| v / total).collect(),
            retained,
            input_names,
        })
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(row.iter().zip(&self.mean)).map(|(w, (x, m))| w * (x - m)).sum())
            .collect()
    }

    pub fn output_names(&self) -> Vec<String> {
        (1..=self.retained).map(|i| format!("PC{i}")).collect()
    }
}

/// Fits PCA on `ds` and returns the projected dataset with columns PC1..PCk.
pub fn pca_fit_transform(ds: &Dataset, variance_target: f64) -> Result<(PcaTransform, Dataset)> {
    let x = ds.matrix()?;
    let pca = PcaTransform::fit(&x, ds.feature_names.clone(), variance_target)?;
    let rows = ds
        .rows
        .iter()
        .zip(&x)
        .map(|(r, xs)| Row {
            id: r.id.clone(),
            system: r.system.clone(),
            values: pca.transform(xs).into_iter().map(Some).collect(),
            label: r.label,
        })
        .collect();
    let mut out = Dataset::new(pca.output_names(), rows);
    out.provenance = ds.provenance.clone();
    Ok((pca, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_line() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, i as f64]).collect();
        let p = PcaTransform::fit(&x, vec!["a".into(), "b".into()], 0.95).unwrap();
        assert_eq!(p.retained, 1);
        assert!((p.explained_ratio[0] - 1.0).abs() < 1e-12);
        let full = PcaTransform::fit(&x, vec!["a".into(), "b".into()], 1.0).unwrap();
        assert_eq!(full.retained, 1);
    }

    #[test]
    fn zero_variance_is_degenerate() {
        let x = vec![vec![1.0, 2.0]; 5];
        assert!(matches!(PcaTransform::fit(&x, vec![], 0.9), Err(Error::Degenerate(_))));
    }
}
