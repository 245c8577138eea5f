//! Permutation (mean decrease in accuracy) feature importance.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{ModelKind, TrainedModel};
use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::rng;

pub const PERMUTATION_REPEATS: usize = 10;
const IMPORTANCE_STREAM: u64 = 0x696d_706f;

fn accuracy(model: &TrainedModel, x: &[Vec<f64>], y: &[bool]) -> f64 {
    let hits = x
        .iter()
        .zip(y)
        .filter(|(row, &label)| (model.score_raw(row) >= 0.5) == label)
        .count();
    hits as f64 / y.len() as f64
}

/// Ranked `(feature, importance)` pairs, most important first.
pub fn feature_importance(model: &TrainedModel, ds: &Dataset, seed: u64) -> Result<Vec<(String, f64)>> {
    if model.kind != ModelKind::RandomForest {
        return Err(Error::contract(format!(
            "feature importance needs a random_forest model, got {}",
            model.kind.as_str()
        )));
    }
    if ds.is_empty() {
        return Err(Error::contract("feature importance needs at least one row"));
    }
    let x = ds.select(&model.feature_names)?.matrix()?;
    let y: Vec<bool> = ds.rows.iter().map(|r| r.label.is_useful()).collect();
    let base = accuracy(model, &x, &y);
    let mut out: Vec<(String, f64)> = model
        .feature_names
        .par_iter()
        .enumerate()
        .map(|(j, name)| {
            let mut r = rng::seeded(rng::derive(seed, IMPORTANCE_STREAM, j as u64));
            let mut column: Vec<f64> = x.iter().map(|row| row[j]).collect();
            let mut shuffled = x.clone();
            let mut drop = 0.0;
            for _ in 0..PERMUTATION_REPEATS {
                column.shuffle(&mut r);
                for (row, v) in shuffled.iter_mut().zip(&column) {
                    row[j] = *v;
                }
                drop += base - accuracy(model, &shuffled, &y);
            }
            (name.clone(), drop / PERMUTATION_REPEATS as f64)
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(out)
}
