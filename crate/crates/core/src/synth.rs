//! Seeded generators for synthetic ensembles and rows.
//!
//! Used by the oracle test suites, the self-test command and the examples.
//! Thresholds are drawn inside the range still reachable on the current
//! path, so repeated splits on one feature never produce an empty branch.

use rand::Rng;

use crate::model::{Ensemble, Node, Tree};

#[derive(Debug, Clone)]
pub struct EnsembleShape {
    pub trees: usize,
    pub max_depth: usize,
    pub features: usize,
    pub groups: usize,
    /// Chance that a non-root node below `max_depth` becomes a leaf early.
    pub leaf_probability: f64,
    pub base_score: f64,
}

impl Default for EnsembleShape {
    fn default() -> Self {
        EnsembleShape { trees: 3, max_depth: 4, features: 4, groups: 1, leaf_probability: 0.2, base_score: 0.0 }
    }
}

/// A random validated ensemble. Features repeat freely along a path.
pub fn random_ensemble<R: Rng + ?Sized>(rng: &mut R, shape: &EnsembleShape) -> Ensemble {
    assert!(shape.features > 0 && shape.groups > 0);
    let trees = (0..shape.trees)
        .map(|t| {
            let mut nodes = Vec::new();
            let mut bounds = vec![(0.0, 1.0); shape.features];
            let cover = rng.gen_range(20.0..200.0);
            grow(rng, shape, &mut nodes, &mut bounds, 0, cover);
            Tree::new(t % shape.groups, nodes)
        })
        .collect();
    Ensemble::new(trees, shape.features, shape.groups, shape.base_score).expect("generated ensemble is valid")
}

fn grow<R: Rng + ?Sized>(
    rng: &mut R,
    shape: &EnsembleShape,
    nodes: &mut Vec<Node>,
    bounds: &mut [(f64, f64)],
    depth: usize,
    cover: f64,
) -> usize {
    let id = nodes.len();
    let stop = depth == shape.max_depth || (depth > 0 && rng.gen_bool(shape.leaf_probability));
    if stop {
        nodes.push(Node::leaf(id, rng.gen_range(-1.0..1.0), cover));
        return id;
    }
    nodes.push(Node::leaf(id, 0.0, cover));
    let feature = rng.gen_range(0..shape.features);
    let (lo, hi) = bounds[feature];
    let threshold = lo + (hi - lo) * rng.gen_range(0.1..0.9);
    let left_cover = cover * rng.gen_range(0.05..0.95);
    let right_cover = cover - left_cover;

    bounds[feature] = (lo, threshold);
    let left = grow(rng, shape, nodes, bounds, depth + 1, left_cover);
    bounds[feature] = (threshold, hi);
    let right = grow(rng, shape, nodes, bounds, depth + 1, right_cover);
    bounds[feature] = (lo, hi);

    nodes[id] = Node::split(id, feature, threshold, left, right, cover);
    id
}

/// `trees` complete binary trees of the given depth where level `d` splits
/// on feature `d`, so every merged path has exactly `depth + 1` elements.
pub fn complete_ensemble(trees: usize, depth: usize) -> Ensemble {
    let features = depth.max(1);
    let mut out = Vec::with_capacity(trees);
    for t in 0..trees {
        let mut nodes = Vec::new();
        // Heap layout: children of i are 2i+1 and 2i+2.
        let internal = (1usize << depth) - 1;
        let total = (1usize << (depth + 1)) - 1;
        for id in 0..total {
            let level = usize::BITS - 1 - (id + 1).leading_zeros();
            let cover = (1u64 << (depth as u32 - level)) as f64;
            if id < internal {
                nodes.push(Node::split(id, level as usize, 0.5, 2 * id + 1, 2 * id + 2, cover));
            } else {
                let v = ((t * total + id) % 7) as f64 / 7.0 - 0.5;
                nodes.push(Node::leaf(id, v, cover));
            }
        }
        out.push(Tree::new(0, nodes));
    }
    Ensemble::new(out, features, 1, 0.0).expect("complete ensemble is valid")
}

pub fn random_row<R: Rng + ?Sized>(rng: &mut R, features: usize) -> Vec<f64> {
    (0..features).map(|_| rng.gen_range(0.0..1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn complete_trees_have_expected_shape() {
        let e = complete_ensemble(10, 3);
        assert_eq!((e.num_trees(), e.num_leaves(), e.max_depth()), (10, 80, 3));
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let shape = EnsembleShape { trees: 4, max_depth: 6, features: 5, groups: 2, ..Default::default() };
        let a = random_ensemble(&mut ChaCha8Rng::seed_from_u64(3), &shape);
        let b = random_ensemble(&mut ChaCha8Rng::seed_from_u64(3), &shape);
        assert_eq!(a, b);
        assert!(a.max_depth() <= 6);
    }
}
