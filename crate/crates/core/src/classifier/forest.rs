use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{ModelMeta, Scorer};
use crate::dataset::Dataset;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

/// Axis-aligned tree; `x[feature] <= threshold` goes left. Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn root_feature(&self) -> Option<usize> {
        match self.nodes.first()? {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        }
    }
}

/// Bagged Gini trees. Leaves hold `2p − 1` for the positive fraction `p`, so
/// the mean over trees lies in `[−1, +1]` with the decision threshold at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub dim: usize,
    pub trees: Vec<Tree>,
    #[serde(default)]
    pub meta: ModelMeta,
}

impl Scorer for ForestModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn score(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

struct Grower<'a> {
    rows: Vec<&'a [f64]>,
    positive: Vec<bool>,
    max_depth: usize,
    nodes: Vec<Node>,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

impl Grower<'_> {
    fn leaf(&self, idx: &[usize]) -> Node {
        let pos = idx.iter().filter(|&&i| self.positive[i]).count();
        Node::Leaf { value: 2.0 * pos as f64 / idx.len() as f64 - 1.0 }
    }

    /// Best split by weighted Gini over every feature and every midpoint
    /// between consecutive distinct values. Ties keep the first found.
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64)> {
        let total = idx.len();
        let total_pos = idx.iter().filter(|&&i| self.positive[i]).count();
        let parent = gini(total_pos, total);
        let mut best: Option<(f64, usize, f64)> = None;
        let d = self.rows[0].len();
        let mut order = idx.to_vec();
        for feature in 0..d {
            order.sort_by(|&a, &b| self.rows[a][feature].total_cmp(&self.rows[b][feature]));
            let mut left_pos = 0;
            for k in 0..total - 1 {
                if self.positive[order[k]] {
                    left_pos += 1;
                }
                let (v, next) = (self.rows[order[k]][feature], self.rows[order[k + 1]][feature]);
                if v == next {
                    continue;
                }
                let left_n = k + 1;
                let right_n = total - left_n;
                let impurity = (left_n as f64 * gini(left_pos, left_n)
                    + right_n as f64 * gini(total_pos - left_pos, right_n))
                    / total as f64;
                if impurity < parent - 1e-12 && best.is_none_or(|(b, _, _)| impurity < b - 1e-15) {
                    best = Some((impurity, feature, v + (next - v) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let slot = self.nodes.len();
        self.nodes.push(self.leaf(&idx));
        let pos = idx.iter().filter(|&&i| self.positive[i]).count();
        if depth >= self.max_depth || pos == 0 || pos == idx.len() {
            return slot;
        }
        let Some((feature, threshold)) = self.best_split(&idx) else {
            return slot;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.rows[i][feature] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = Node::Split { feature, threshold, left, right };
        slot
    }
}

/// Grows `n_trees` Gini trees on bootstrap resamples. A single tree is
/// grown on the full training set.
pub fn train_forest(train: &Dataset, n_trees: usize, max_depth: usize, seed: u64) -> Result<ForestModel> {
    if n_trees < 1 || max_depth < 1 {
        return Err(Error::InvalidArgument(format!("n_trees and max_depth must be >= 1 (got {n_trees}, {max_depth})")));
    }
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if !train.has_both_labels() {
        return Err(Error::SingleClass);
    }
    let rows: Vec<&[f64]> = train.rows().collect();
    let positive: Vec<bool> = train.labels().iter().map(|l| l.is_positive()).collect();
    let n = rows.len();
    let mut r = rng::seeded(seed);
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let idx: Vec<usize> =
            if n_trees == 1 { (0..n).collect() } else { (0..n).map(|_| r.random_range(0..n)).collect() };
        let mut g = Grower { rows: rows.clone(), positive: positive.clone(), max_depth, nodes: vec![] };
        g.grow(idx, 0);
        trees.push(Tree { nodes: g.nodes });
    }
    let mut model = ForestModel {
        dim: train.dim(),
        trees,
        meta: ModelMeta {
            family: "forest".into(),
            hyperparameters: vec![("n_trees".to_string(), n_trees as f64), ("max_depth".to_string(), max_depth as f64)],
            seed,
            train_risk: None,
        },
    };
    model.meta.train_risk = Some(super::empirical_risk(&model, train)?);
    Ok(model)
}
