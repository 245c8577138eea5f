//! Behavioural checks of the four classifiers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revhelper::corpus::Usefulness;
use revhelper::features::{Dataset, Row};
use revhelper::learn::*;

fn dataset(x: &[Vec<f64>], y: &[bool]) -> Dataset {
    let names = (0..x[0].len()).map(|i| format!("f{i}")).collect();
    let rows = x
        .iter()
        .zip(y)
        .enumerate()
        .map(|(i, (r, &u))| Row {
            id: format!("r{i}"),
            system: String::new(),
            values: r.iter().map(|v| Some(*v)).collect(),
            label: if u { Usefulness::Useful } else { Usefulness::NonUseful },
        })
        .collect();
    Dataset::new(names, rows)
}

/// Two well separated blobs in four dimensions.
fn separable(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let x = y
        .iter()
        .map(|&u| {
            let c = if u { 3.0 } else { -3.0 };
            (0..4).map(|_| c + rng.random_range(-1.0..1.0)).collect()
        })
        .collect();
    (x, y)
}

fn accuracy(model: &TrainedModel, x: &[Vec<f64>], y: &[bool]) -> f64 {
    let hits = x.iter().zip(y).filter(|(r, &u)| (predict(model, r).unwrap().score >= 0.5) == u).count();
    hits as f64 / y.len() as f64
}

#[test]
fn every_learner_separates_separable_data() {
    let (x, y) = separable(1, 200);
    let (tx, ty) = separable(2, 200);
    let ds = dataset(&x, &y);
    let hyper = Hyper {
        n_trees: 50,
        ..Hyper::default()
    };
    for kind in [ModelKind::GaussianNb, ModelKind::LogisticRegression, ModelKind::Cart, ModelKind::RandomForest] {
        let model = train_classifier(&ds, kind, &hyper, 4).unwrap();
        let acc = accuracy(&model, &tx, &ty);
        assert!(acc >= 0.95, "{} accuracy {acc}", kind.as_str());
    }
    let with_pca = Hyper {
        pca_variance: Some(0.95),
        ..hyper
    };
    let model = train_classifier(&ds, ModelKind::LogisticRegression, &with_pca, 4).unwrap();
    assert!(accuracy(&model, &tx, &ty) >= 0.95);
}

#[test]
fn single_full_sample_tree_forest_equals_cart() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x: Vec<Vec<f64>> = (0..120).map(|_| (0..5).map(|_| rng.random_range(0..6) as f64).collect()).collect();
    let y: Vec<bool> = x.iter().map(|r| r[1] + r[3] + rng.random_range(0.0..3.0) > 6.0).collect();
    let tree = TreeParams {
        max_depth: Some(6),
        min_samples_split: 2,
        min_samples_leaf: 1,
        max_features: None,
    };
    let rows: Vec<usize> = (0..x.len()).collect();
    let cart = DecisionTree::fit(&x, &y, &rows, tree, None);
    let forest = RandomForest::fit(
        &x,
        &y,
        ForestParams {
            n_trees: 1,
            sample_fraction: 1.0,
            bootstrap: false,
            tree,
        },
        99,
    );
    assert_eq!(forest.trees[0].nodes, cart.nodes);
}

#[test]
fn planted_feature_ranks_first_in_importance() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 300;
    let y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let x: Vec<Vec<f64>> = y
        .iter()
        .map(|&u| {
            let mut r: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
            r[1] = if u { 1.0 } else { 0.0 } + rng.random_range(-0.4..0.4);
            r
        })
        .collect();
    let ds = dataset(&x, &y);
    let hyper = Hyper {
        n_trees: 100,
        ..Hyper::default()
    };
    let model = train_classifier(&ds, ModelKind::RandomForest, &hyper, 5).unwrap();
    let ranked = feature_importance(&model, &ds, 6).unwrap();
    assert_eq!(ranked[0].0, "f1", "{ranked:?}");
    assert!(ranked[0].1 > 0.2);
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    1.0 - (counts[0] as f64 / n).powi(2) - (counts[1] as f64 / n).powi(2)
}

/// Lowest weighted Gini over every feature and every gap between
/// consecutive distinct values.
fn best_gini(x: &[Vec<f64>], y: &[bool]) -> f64 {
    let mut best = f64::INFINITY;
    for f in 0..x[0].len() {
        let mut values: Vec<f64> = x.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let side = |left: bool| {
                let members: Vec<bool> = x.iter().zip(y).filter(|(r, _)| (r[f] <= t) == left).map(|(_, &u)| u).collect();
                let useful = members.iter().filter(|&&u| u).count();
                (members.len(), gini([members.len() - useful, useful]))
            };
            let ((nl, gl), (nr, gr)) = (side(true), side(false));
            best = best.min((nl as f64 * gl + nr as f64 * gr) / x.len() as f64);
        }
    }
    best
}

#[test]
fn root_split_minimizes_weighted_gini() {
    assert_eq!(tree::gini([5, 5]), 0.5);
    assert_eq!(tree::gini([0, 7]), 0.0);
    assert!((tree::gini([3, 9]) - gini([3, 9])).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..25 {
        let x: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| rng.random_range(0..8) as f64).collect()).collect();
        let y: Vec<bool> = (0..30).map(|_| rng.random_bool(0.5)).collect();
        let params = TreeParams {
            max_depth: Some(1),
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: None,
        };
        let rows: Vec<usize> = (0..30).collect();
        let tree = DecisionTree::fit(&x, &y, &rows, params, None);
        let useful = y.iter().filter(|&&u| u).count();
        let parent = gini([30 - useful, useful]);
        let want = best_gini(&x, &y);
        match &tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                let side = |left: bool| {
                    let m: Vec<bool> =
                        x.iter().zip(&y).filter(|(r, _)| (r[*feature] <= *threshold) == left).map(|(_, &u)| u).collect();
                    let k = m.iter().filter(|&&u| u).count();
                    m.len() as f64 * gini([m.len() - k, k])
                };
                let got = (side(true) + side(false)) / 30.0;
                assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
                assert!(got < parent);
            }
            Node::Leaf { .. } => assert!(want >= parent - 1e-12),
        }
    }
}

#[test]
fn training_rejects_single_class_and_bad_params() {
    let (x, _) = separable(3, 20);
    let ds = dataset(&x, &[true; 20]);
    assert!(train_classifier(&ds, ModelKind::RandomForest, &Hyper::default(), 1).is_err());
    let mut h = Hyper::default();
    assert!(h.set("n_trees", "many").is_err());
    assert!(h.set("no_such_key", "1").is_err());
    h.set("n_trees", "7").unwrap();
    assert_eq!(h.n_trees, 7);
}

#[test]
fn model_round_trips_through_json() {
    let (x, y) = separable(4, 60);
    let ds = dataset(&x, &y);
    let hyper = Hyper {
        n_trees: 10,
        ..Hyper::default()
    };
    for kind in [ModelKind::GaussianNb, ModelKind::LogisticRegression, ModelKind::Cart, ModelKind::RandomForest] {
        let model = train_classifier(&ds, kind, &hyper, 2).unwrap();
        let back = TrainedModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
        for r in &x {
            assert_eq!(predict(&back, r).unwrap().score, predict(&model, r).unwrap().score);
        }
    }
}
