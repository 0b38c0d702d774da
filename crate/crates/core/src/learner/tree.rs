//! CART regression trees and the two tree ensembles used as baselines:
//! bootstrap-aggregated forests and gradient-boosted stages.
//!
//! Trees split on the three features by variance reduction (best SSE
//! decrease over midpoints of consecutive distinct values). A `max_depth` of
//! 0 yields a single leaf predicting the training mean. All fits are
//! deterministic: sample order is fixed and the only randomness is the
//! seeded bootstrap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::LearnerError;
use crate::learner::mlp::INPUT_DIM;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    /// Node 0 is the root; children index into this list.
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64; INPUT_DIM]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

struct TreeBuilder<'a> {
    features: &'a [[f64; INPUT_DIM]],
    targets: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    fn build(&mut self, indices: &mut [usize], depth: usize) -> usize {
        let mean = indices.iter().map(|&i| self.targets[i]).sum::<f64>() / indices.len() as f64;
        if depth >= self.max_depth || indices.len() < 2 * self.min_leaf {
            return self.push_leaf(mean);
        }
        match self.best_split(indices) {
            None => self.push_leaf(mean),
            Some((feature, threshold)) => {
                // partition preserving deterministic (value, index) order
                let mut left: Vec<usize> = Vec::new();
                let mut right: Vec<usize> = Vec::new();
                for &i in indices.iter() {
                    if self.features[i][feature] <= threshold {
                        left.push(i);
                    } else {
                        right.push(i);
                    }
                }
                let node = self.nodes.len();
                self.nodes.push(TreeNode::Leaf { value: mean }); // placeholder
                let left_idx = self.build(&mut left, depth + 1);
                let right_idx = self.build(&mut right, depth + 1);
                self.nodes[node] = TreeNode::Split {
                    feature,
                    threshold,
                    left: left_idx,
                    right: right_idx,
                };
                node
            }
        }
    }

    fn push_leaf(&mut self, value: f64) -> usize {
        self.nodes.push(TreeNode::Leaf { value });
        self.nodes.len() - 1
    }

    /// Best (feature, threshold) by total SSE of the two children; `None`
    /// when no split satisfies `min_leaf` or improves on the parent.
    fn best_split(&self, indices: &[usize]) -> Option<(usize, f64)> {
        let n = indices.len() as f64;
        let total_sum: f64 = indices.iter().map(|&i| self.targets[i]).sum();
        let total_sq: f64 = indices.iter().map(|&i| self.targets[i].powi(2)).sum();
        let parent_sse = total_sq - total_sum * total_sum / n;

        let mut best: Option<(f64, usize, f64)> = None; // (sse, feature, threshold)
        for feature in 0..INPUT_DIM {
            let mut order: Vec<usize> = indices.to_vec();
            order.sort_by(|&a, &b| {
                self.features[a][feature]
                    .partial_cmp(&self.features[b][feature])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            for (k, &i) in order.iter().enumerate().take(order.len() - 1) {
                let y = self.targets[i];
                left_sum += y;
                left_sq += y * y;
                let left_n = (k + 1) as f64;
                let value = self.features[i][feature];
                let next_value = self.features[order[k + 1]][feature];
                if value == next_value {
                    continue; // threshold must separate distinct values
                }
                if k + 1 < self.min_leaf || order.len() - k - 1 < self.min_leaf {
                    continue;
                }
                let right_sum = total_sum - left_sum;
                let right_sq = total_sq - left_sq;
                let right_n = n - left_n;
                let sse = (left_sq - left_sum * left_sum / left_n)
                    + (right_sq - right_sum * right_sum / right_n);
                let better = match best {
                    None => sse < parent_sse - 1e-12,
                    Some((best_sse, _, _)) => sse < best_sse,
                };
                if better {
                    best = Some((sse, feature, (value + next_value) / 2.0));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }
}

/// Fit a CART regression tree by variance-reduction splitting.
pub fn tree_fit(
    features: &[[f64; INPUT_DIM]],
    targets: &[f64],
    max_depth: usize,
    min_leaf: usize,
) -> Result<RegressionTree, LearnerError> {
    if features.is_empty() || features.len() != targets.len() {
        return Err(LearnerError::EmptyDataset);
    }
    if min_leaf < 1 {
        return Err(LearnerError::InvalidHyperparameter("min_leaf must be at least 1".into()));
    }
    let mut builder = TreeBuilder {
        features,
        targets,
        max_depth,
        min_leaf,
        nodes: Vec::new(),
    };
    let mut indices: Vec<usize> = (0..features.len()).collect();
    builder.build(&mut indices, 0);
    Ok(RegressionTree {
        nodes: builder.nodes,
    })
}

// ── random forest ───────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<RegressionTree>,
}

impl Forest {
    pub fn predict(&self, x: &[f64; INPUT_DIM]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Bagged ensemble: each tree fits a seeded bootstrap resample (or the full
/// sample when `bootstrap` is off, in which case every tree is identical to
/// [`tree_fit`]).
pub fn forest_fit(
    features: &[[f64; INPUT_DIM]],
    targets: &[f64],
    n_trees: usize,
    max_depth: usize,
    min_leaf: usize,
    bootstrap: bool,
    seed: u64,
) -> Result<Forest, LearnerError> {
    if n_trees < 1 {
        return Err(LearnerError::InvalidHyperparameter("n_trees must be at least 1".into()));
    }
    if features.is_empty() || features.len() != targets.len() {
        return Err(LearnerError::EmptyDataset);
    }
    let n = features.len();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        if bootstrap {
            let mut boot_x = Vec::with_capacity(n);
            let mut boot_y = Vec::with_capacity(n);
            for _ in 0..n {
                let i = rng.gen_range(0..n);
                boot_x.push(features[i]);
                boot_y.push(targets[i]);
            }
            trees.push(tree_fit(&boot_x, &boot_y, max_depth, min_leaf)?);
        } else {
            trees.push(tree_fit(features, targets, max_depth, min_leaf)?);
        }
    }
    Ok(Forest { trees })
}

// ── gradient boosting ───────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct Gbrt {
    /// Initial prediction: the training mean.
    pub base: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    /// Training MSE after each stage; non-increasing by construction.
    pub train_mse_per_stage: Vec<f64>,
}

impl Gbrt {
    pub fn predict(&self, x: &[f64; INPUT_DIM]) -> f64 {
        self.base
            + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

/// Stage-wise least-squares boosting: each stage fits a shallow tree to the
/// current residuals and is added with shrinkage `learning_rate`. The fit is
/// deterministic; `_seed` is reserved for stochastic variants.
pub fn gbrt_fit(
    features: &[[f64; INPUT_DIM]],
    targets: &[f64],
    n_stages: usize,
    learning_rate: f64,
    max_depth: usize,
    _seed: u64,
) -> Result<Gbrt, LearnerError> {
    if n_stages < 1 {
        return Err(LearnerError::InvalidHyperparameter("n_stages must be at least 1".into()));
    }
    if !(learning_rate > 0.0 && learning_rate <= 1.0) {
        return Err(LearnerError::InvalidHyperparameter(format!(
            "learning_rate must be in (0, 1], got {learning_rate}"
        )));
    }
    if features.is_empty() || features.len() != targets.len() {
        return Err(LearnerError::EmptyDataset);
    }
    let n = features.len() as f64;
    let base = targets.iter().sum::<f64>() / n;
    let mut predictions = vec![base; features.len()];
    let mut trees = Vec::with_capacity(n_stages);
    let mut train_mse_per_stage = Vec::with_capacity(n_stages);

    for _ in 0..n_stages {
        let residuals: Vec<f64> = targets
            .iter()
            .zip(&predictions)
            .map(|(y, p)| y - p)
            .collect();
        let tree = tree_fit(features, &residuals, max_depth, 1)?;
        for (p, x) in predictions.iter_mut().zip(features) {
            *p += learning_rate * tree.predict(x);
        }
        let mse = targets
            .iter()
            .zip(&predictions)
            .map(|(y, p)| (y - p) * (y - p))
            .sum::<f64>()
            / n;
        trees.push(tree);
        train_mse_per_stage.push(mse);
    }
    Ok(Gbrt {
        base,
        learning_rate,
        trees,
        train_mse_per_stage,
    })
}

// ── tests ───────────────────────────────────────────────────────────────────
