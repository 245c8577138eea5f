//! Random forest of CART trees grown on row subsamples.

use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeParams};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub sample_fraction: f64,
    /// Draw rows with replacement instead of a plain subsample.
    pub bootstrap: bool,
    pub tree: TreeParams,
}

/// Stream tag for per-tree seeds.
const TREE_STREAM: u64 = 0x7472_6565;

impl RandomForest {
    pub fn fit(x: &[Vec<f64>], y: &[bool], params: ForestParams, seed: u64) -> Self {
        let n = x.len();
        let m = ((params.sample_fraction * n as f64).round() as usize).clamp(1, if params.bootstrap { usize::MAX } else { n });
        let trees = (0..params.n_trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut r = rng::seeded(rng::derive(seed, TREE_STREAM, t as u64));
                let rows: Vec<usize> = if params.bootstrap {
                    (0..m).map(|_| r.random_range(0..n)).collect()
                } else {
                    index::sample(&mut r, n, m).into_vec()
                };
                DecisionTree::fit(x, y, &rows, params.tree, Some(&mut r))
            })
            .collect();
        RandomForest { trees }
    }

    /// Fraction of trees voting useful.
    pub fn predict_score(&self, row: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict_score(row) >= 0.5).count();
        votes as f64 / self.trees.len() as f64
    }
}
