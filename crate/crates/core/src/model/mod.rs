//! Tree ensemble and dataset data model.
//!
//! Split semantics are fixed as `x[feature] < threshold` goes left, matching
//! the XGBoost dump convention. Every ensemble handed out by this module has
//! passed [`Ensemble::new`] validation: node shape, reachability, cover
//! conservation and the 32-level depth limit of a lane group.

mod dataset;
mod xgboost;

pub use dataset::{load_dataset, Dataset, DatasetError};
pub use xgboost::{parse_xgboost_dump, parse_xgboost_dump_with_feature_names};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum leaf depth. A merged path of this depth plus its root element
/// must fit one lane group.
pub const MAX_DEPTH: usize = 32;

/// Relative tolerance of the `cover(parent) = cover(left) + cover(right)` check.
pub const COVER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed model document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation in tree {tree}, node {node}: {message}")]
    Schema { tree: usize, node: usize, message: String },
    #[error("invalid ensemble: {0}")]
    Ensemble(String),
    #[error("tree {tree}: {message}")]
    Structure { tree: usize, message: String },
    #[error("tree {tree}, node {node}: {message}")]
    Node { tree: usize, node: usize, message: String },
    #[error("tree {tree}, node {node}: cover mismatch, parent {parent} != left {left} + right {right}")]
    CoverMismatch { tree: usize, node: usize, parent: f64, left: f64, right: f64 },
    #[error("tree {tree}, node {node}: child id {child} does not exist")]
    DanglingChild { tree: usize, node: usize, child: usize },
    #[error("tree {tree}, node {node}: leaf depth {depth} exceeds {MAX_DEPTH}")]
    TooDeep { tree: usize, node: usize, depth: usize },
}

impl ModelError {
    /// `true` for errors in the document itself (bad JSON, wrong field
    /// types, unparseable names), `false` for invariant violations of an
    /// otherwise well-formed model.
    pub fn is_parse_error(&self) -> bool {
        matches!(self, ModelError::Json(_) | ModelError::Schema { .. })
    }
}

/// One node of a binary decision tree. A node is either a split (feature,
/// threshold and both children set) or a leaf (`leaf_value` set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub feature: Option<usize>,
    pub threshold: Option<f64>,
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub cover: f64,
    pub leaf_value: Option<f64>,
}

impl Node {
    pub fn split(id: usize, feature: usize, threshold: f64, left: usize, right: usize, cover: f64) -> Self {
        Node {
            id,
            feature: Some(feature),
            threshold: Some(threshold),
            left: Some(left),
            right: Some(right),
            cover,
            leaf_value: None,
        }
    }

    pub fn leaf(id: usize, value: f64, cover: f64) -> Self {
        Node { id, feature: None, threshold: None, left: None, right: None, cover, leaf_value: Some(value) }
    }

    pub fn is_leaf(&self) -> bool {
        self.leaf_value.is_some()
    }

    /// Split view of the node: `(feature, threshold, left, right)`.
    /// Only meaningful on validated trees.
    pub(crate) fn split_parts(&self) -> Option<(usize, f64, usize, usize)> {
        Some((self.feature?, self.threshold?, self.left?, self.right?))
    }
}

/// A decision tree whose node `i` has id `i`; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub group: usize,
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn new(group: usize, nodes: Vec<Node>) -> Self {
        Tree { group, nodes }
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    /// Id of the leaf reached by `row` under full traversal.
    pub fn leaf_for(&self, row: &[f64]) -> usize {
        let mut id = 0;
        while let Some((feature, threshold, left, right)) = self.nodes[id].split_parts() {
            id = if row[feature] < threshold { left } else { right };
        }
        id
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn max_depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            match self.nodes[id].split_parts() {
                Some((_, _, l, r)) => {
                    stack.push((l, depth + 1));
                    stack.push((r, depth + 1));
                }
                None => max = max.max(depth),
            }
        }
        max
    }

    /// Sorts nodes by id and checks every structural invariant.
    fn validate(&mut self, tree: usize, num_features: usize, num_groups: usize) -> Result<(), ModelError> {
        if self.nodes.is_empty() {
            return Err(ModelError::Structure { tree, message: "tree has no nodes".into() });
        }
        if self.group >= num_groups {
            return Err(ModelError::Structure {
                tree,
                message: format!("group {} out of range for {} groups", self.group, num_groups),
            });
        }
        self.nodes.sort_by_key(|n| n.id);
        let n = self.nodes.len();
        for (idx, node) in self.nodes.iter().enumerate() {
            if node.id != idx {
                let message = if idx > 0 && self.nodes[idx - 1].id == node.id {
                    format!("duplicate node id {}", node.id)
                } else {
                    format!("node ids must be 0..{n}, found {}", node.id)
                };
                return Err(ModelError::Structure { tree, message });
            }
            check_node(tree, node, num_features)?;
        }

        // Walk from the root: every node must be reached exactly once.
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            let node = &self.nodes[id];
            let Some((_, _, left, right)) = node.split_parts() else {
                if depth > MAX_DEPTH {
                    return Err(ModelError::TooDeep { tree, node: id, depth });
                }
                continue;
            };
            for child in [left, right] {
                if child >= n {
                    return Err(ModelError::DanglingChild { tree, node: id, child });
                }
                if seen[child] {
                    return Err(ModelError::Node {
                        tree,
                        node: child,
                        message: "node has more than one parent or closes a cycle".into(),
                    });
                }
                seen[child] = true;
                stack.push((child, depth + 1));
            }
            let (lc, rc) = (self.nodes[left].cover, self.nodes[right].cover);
            if (lc + rc - node.cover).abs() > COVER_TOLERANCE * node.cover {
                return Err(ModelError::CoverMismatch { tree, node: id, parent: node.cover, left: lc, right: rc });
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(ModelError::Node { tree, node: orphan, message: "node is unreachable from the root".into() });
        }
        Ok(())
    }
}

fn check_node(tree: usize, node: &Node, num_features: usize) -> Result<(), ModelError> {
    let err = |message: String| Err(ModelError::Node { tree, node: node.id, message });
    if !(node.cover.is_finite() && node.cover > 0.0) {
        return err(format!("cover must be finite and positive, got {}", node.cover));
    }
    let split_fields = [node.feature.is_some(), node.threshold.is_some(), node.left.is_some(), node.right.is_some()];
    match (node.leaf_value, split_fields) {
        (Some(v), [false, false, false, false]) => {
            if !v.is_finite() {
                return err(format!("leaf value must be finite, got {v}"));
            }
        }
        (None, [true, true, true, true]) => {
            let feature = node.feature.unwrap_or_default();
            let threshold = node.threshold.unwrap_or_default();
            if feature >= num_features {
                return err(format!("feature {feature} out of range for {num_features} features"));
            }
            if !threshold.is_finite() {
                return err(format!("threshold must be finite, got {threshold}"));
            }
            if node.left == Some(0) || node.right == Some(0) {
                return err("the root cannot be a child".into());
            }
        }
        _ => return err("node must carry either a leaf value or feature, threshold, left and right".into()),
    }
    Ok(())
}

/// A validated forest of binary decision trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    num_features: usize,
    num_groups: usize,
    base_score: f64,
    trees: Vec<Tree>,
}

impl Ensemble {
    pub fn new(trees: Vec<Tree>, num_features: usize, num_groups: usize, base_score: f64) -> Result<Self, ModelError> {
        let mut ensemble = Ensemble { num_features, num_groups, base_score, trees };
        ensemble.validate()?;
        Ok(ensemble)
    }

    fn validate(&mut self) -> Result<(), ModelError> {
        if self.num_groups == 0 {
            return Err(ModelError::Ensemble("num_groups must be at least 1".into()));
        }
        if !self.base_score.is_finite() {
            return Err(ModelError::Ensemble(format!("base_score must be finite, got {}", self.base_score)));
        }
        let (m, g) = (self.num_features, self.num_groups);
        for (t, tree) in self.trees.iter_mut().enumerate() {
            tree.validate(t, m, g)?;
        }
        Ok(())
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    /// Total leaf count over all trees.
    pub fn num_leaves(&self) -> usize {
        self.trees.iter().map(Tree::num_leaves).sum()
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(Tree::max_depth).max().unwrap_or(0)
    }

    /// Features split on anywhere in the ensemble, ascending.
    pub fn used_features(&self) -> Vec<usize> {
        let mut used = vec![false; self.num_features];
        for node in self.trees.iter().flat_map(|t| &t.nodes) {
            if let Some(f) = node.feature {
                used[f] = true;
            }
        }
        used.iter().enumerate().filter_map(|(f, &u)| u.then_some(f)).collect()
    }

    pub fn with_base_score(mut self, base_score: f64) -> Result<Self, ModelError> {
        if !base_score.is_finite() {
            return Err(ModelError::Ensemble(format!("base_score must be finite, got {base_score}")));
        }
        self.base_score = base_score;
        Ok(self)
    }

    /// Widens the feature space, e.g. to match a dataset carrying extra
    /// columns the model never splits on.
    pub fn with_num_features(mut self, num_features: usize) -> Result<Self, ModelError> {
        if let Some(&max) = self.used_features().last() {
            if max >= num_features {
                return Err(ModelError::Ensemble(format!(
                    "model splits on feature {max}, cannot shrink to {num_features} features"
                )));
            }
        }
        self.num_features = num_features;
        Ok(self)
    }

    /// Raw model output per group: `base_score` plus the leaf value reached in
    /// every tree of that group.
    pub fn predict(&self, row: &[f64]) -> Vec<f64> {
        assert_eq!(row.len(), self.num_features, "row length must equal the feature count");
        let mut out = vec![self.base_score; self.num_groups];
        for tree in &self.trees {
            let leaf = tree.leaf_for(row);
            out[tree.group] += tree.nodes[leaf].leaf_value.unwrap_or_default();
        }
        out
    }

    pub fn to_native_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble serialization cannot fail")
    }
}

/// Parses and validates a model in the native JSON schema.
pub fn parse_native_model(text: &str) -> Result<Ensemble, ModelError> {
    let raw: Ensemble = serde_json::from_str(text)?;
    Ensemble::new(raw.trees, raw.num_features, raw.num_groups, raw.base_score)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Root `f0 < 0.5` with cover 10; leaves 1.0 (cover 4) and 0.0 (cover 6).
    pub fn stump() -> Ensemble {
        let tree =
            Tree::new(0, vec![Node::split(0, 0, 0.5, 1, 2, 10.0), Node::leaf(1, 1.0, 4.0), Node::leaf(2, 0.0, 6.0)]);
        Ensemble::new(vec![tree], 1, 1, 0.0).unwrap()
    }

    pub fn single_leaf() -> Ensemble {
        Ensemble::new(vec![Tree::new(0, vec![Node::leaf(0, 0.7, 10.0)])], 1, 1, 0.0).unwrap()
    }

    /// Root `f0 < 0.5` (cover 10); left `f1 < 0.5` (cover 4) with leaves
    /// 1 (cover 1) and 2 (cover 3); right leaf 0 (cover 6).
    pub fn depth2() -> Ensemble {
        let tree = Tree::new(
            0,
            vec![
                Node::split(0, 0, 0.5, 1, 2, 10.0),
                Node::split(1, 1, 0.5, 3, 4, 4.0),
                Node::leaf(2, 0.0, 6.0),
                Node::leaf(3, 1.0, 1.0),
                Node::leaf(4, 2.0, 3.0),
            ],
        );
        Ensemble::new(vec![tree], 2, 1, 0.0).unwrap()
    }
}
