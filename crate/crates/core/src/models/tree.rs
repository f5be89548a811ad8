//! Weighted CART classification trees with Gini splits, and the bagged
//! random forest built on them.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::{derive_seed, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        label: u8,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    w: &'a [f64],
    max_depth: usize,
    features_per_split: usize,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node>,
}

/// Weighted Gini impurity times total weight.
#[inline]
fn impurity(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let neg = total - pos;
    total - (pos * pos + neg * neg) / total
}

impl Builder<'_> {
    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.x[0].len();
        match self.rng.as_deref_mut() {
            Some(r) if self.features_per_split < p => {
                let mut f = rand::seq::index::sample(r, p, self.features_per_split).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize], pos: f64, total: f64) -> Option<(usize, f64, f64)> {
        let parent = impurity(pos, total);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut sorted = idx.to_vec();
        for f in self.candidate_features() {
            sorted.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let (mut lw, mut lp) = (0.0, 0.0);
            for k in 0..sorted.len() - 1 {
                let i = sorted[k];
                lw += self.w[i];
                if self.y[i] == 1 {
                    lp += self.w[i];
                }
                let (v, next) = (self.x[i][f], self.x[sorted[k + 1]][f]);
                if v == next {
                    continue;
                }
                let score = impurity(lp, lw) + impurity(pos - lp, total - lw);
                if parent - score > 1e-12 * total.max(1.0) && best.is_none_or(|b| score < b.2) {
                    best = Some((f, v + (next - v) / 2.0, score));
                }
            }
        }
        best
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let total: f64 = idx.iter().map(|&i| self.w[i]).sum();
        let pos: f64 = idx.iter().filter(|&&i| self.y[i] == 1).map(|&i| self.w[i]).sum();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            label: (pos > total - pos) as u8,
        });
        if depth >= self.max_depth || idx.len() < 2 || pos <= 0.0 || pos >= total {
            return id;
        }
        let Some((feature, threshold, _)) = self.best_split(&idx, pos, total) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    /// Rows with zero weight are ignored. With an rng, each split considers
    /// a random subset of `features_per_split` features.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[u8],
        weights: &[f64],
        max_depth: usize,
        features_per_split: usize,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Self {
        let idx: Vec<usize> = (0..x.len()).filter(|&i| weights[i] > 0.0).collect();
        let mut b = Builder {
            x,
            y,
            w: weights,
            max_depth,
            features_per_split,
            rng,
            nodes: Vec::new(),
        };
        b.build(idx, 0);
        DecisionTree { nodes: b.nodes }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut n = 0;
        loop {
            match self.nodes[n] {
                Node::Leaf { label } => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => n = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, n: usize) -> usize {
            match t.nodes[n] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
}

impl ForestModel {
    pub fn fit(x: &[Vec<f64>], y: &[u8], n_trees: usize, max_depth: usize, features_per_split: usize, seed: u64) -> Self {
        let n = x.len();
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut r = rng(derive_seed(seed, &[t as u64]));
                let mut w = vec![0.0; n];
                for _ in 0..n {
                    w[r.random_range(0..n)] += 1.0;
                }
                DecisionTree::fit(x, y, &w, max_depth, features_per_split, Some(&mut r))
            })
            .collect();
        ForestModel { trees }
    }

    pub fn votes(&self, x: &[f64]) -> Vec<u8> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.votes(x).iter().map(|&v| v as f64).sum::<f64>() / self.trees.len() as f64
    }
}
