//! Gini-impurity classification trees (CART) for the binary useful /
//! non-useful response.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        /// Class proportions `[non_useful, useful]`.
        distribution: [f64; 2],
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Flattened nodes; index 0 is the root.
    pub nodes: Vec<Node>,
    pub n_features: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
}

pub fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = counts[1] as f64 / n;
    2.0 * p * (1.0 - p)
}

fn weighted_gini(left: [usize; 2], right: [usize; 2]) -> f64 {
    let nl = (left[0] + left[1]) as f64;
    let nr = (right[0] + right[1]) as f64;
    (nl * gini(left) + nr * gini(right)) / (nl + nr)
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    params: TreeParams,
    nodes: Vec<Node>,
    rng: Option<&'a mut Rng>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> [usize; 2] {
        let useful = idx.iter().filter(|&&i| self.y[i]).count();
        [idx.len() - useful, useful]
    }

    fn leaf(&mut self, counts: [usize; 2]) -> usize {
        let n = (counts[0] + counts[1]).max(1) as f64;
        self.nodes.push(Node::Leaf {
            distribution: [counts[0] as f64 / n, counts[1] as f64 / n],
            samples: counts[0] + counts[1],
        });
        self.nodes.len() - 1
    }

    fn features_for_split(&mut self) -> Vec<usize> {
        let p = self.x[0].len();
        match (self.params.max_features, self.rng.as_deref_mut()) {
            (Some(k), Some(rng)) if k < p => {
                let mut f = index::sample(rng, p, k.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize], total: [usize; 2]) -> Option<Candidate> {
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut best: Option<Candidate> = None;
        let mut order = idx.to_vec();
        for feature in self.features_for_split() {
            order.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
            let mut left = [0usize; 2];
            for k in 0..order.len() - 1 {
                left[usize::from(self.y[order[k]])] += 1;
                let (lo, hi) = (self.x[order[k]][feature], self.x[order[k + 1]][feature]);
                if lo == hi {
                    continue;
                }
                let n_left = k + 1;
                if n_left < min_leaf || order.len() - n_left < min_leaf {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let impurity = weighted_gini(left, right);
                if best.is_none_or(|b| impurity < b.impurity) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(Candidate {
                        feature,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let parent = gini(counts);
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        if parent == 0.0 || !depth_ok || idx.len() < self.params.min_samples_split.max(2) {
            return self.leaf(counts);
        }
        let Some(split) = self.best_split(idx, counts) else {
            return self.leaf(counts);
        };
        if split.impurity >= parent - 1e-12 {
            return self.leaf(counts);
        }
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.x[i][split.feature] <= split.threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: 0,
            right: 0,
        });
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

impl DecisionTree {
    /// Grows a tree on the rows listed in `rows`. Feature subsampling
    /// draws from `rng` when `params.max_features` is below the width.
    pub fn fit(x: &[Vec<f64>], y: &[bool], rows: &[usize], params: TreeParams, rng: Option<&mut Rng>) -> Self {
        let n_features = x.first().map_or(0, Vec::len);
        let mut b = Builder {
            x,
            y,
            params,
            nodes: Vec::new(),
            rng,
        };
        b.grow(rows, 0);
        DecisionTree {
            nodes: b.nodes,
            n_features,
        }
    }

    pub fn leaf_distribution(&self, row: &[f64]) -> [f64; 2] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { distribution, .. } => return *distribution,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Probability of the useful class at the reached leaf.
    pub fn predict_score(&self, row: &[f64]) -> f64 {
        self.leaf_distribution(row)[1]
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// `(feature, threshold)` of every internal node in storage order.
    pub fn splits(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> TreeParams {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: None,
        }
    }

    #[test]
    fn separable_1d() {
        let x: Vec<Vec<f64>> = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0].iter().map(|v| vec![*v]).collect();
        let y = [false, false, false, true, true, true];
        let t = DecisionTree::fit(&x, &y, &(0..6).collect::<Vec<_>>(), params(), None);
        assert_eq!(t.depth(), 1);
        for (row, label) in x.iter().zip(y) {
            assert_eq!(t.predict_score(row) >= 0.5, label);
        }
        assert_eq!(t.splits().next(), Some((0, 0.0)));
    }

    #[test]
    fn leaves_sum_to_one() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 7) as f64, (i % 3) as f64]).collect();
        let y: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        let t = DecisionTree::fit(&x, &y, &(0..20).collect::<Vec<_>>(), params(), None);
        for n in &t.nodes {
            if let Node::Leaf { distribution, .. } = n {
                assert!((distribution[0] + distribution[1] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_features_give_single_leaf() {
        let x = vec![vec![1.0]; 4];
        let y = [true, false, true, false];
        let t = DecisionTree::fit(&x, &y, &[0, 1, 2, 3], params(), None);
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict_score(&[1.0]), 0.5);
    }
}
