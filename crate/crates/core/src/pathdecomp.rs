//! Root-to-leaf path decomposition.
//!
//! Every leaf of every tree becomes one [`UniquePath`]: a root element
//! followed by one element per edge on the way down. An element records the
//! feature tested at the parent, the half-open value range `[lower, upper)`
//! that follows the edge when the feature is known, and the cover ratio
//! `cover(child) / cover(parent)` used when it is not.
//!
//! Paths that test a feature more than once are collapsed by
//! [`merge_duplicate_features`] into one element per feature, so the
//! dynamic programme never has to find and unwind earlier occurrences.

use std::io::{self, Write};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::Ensemble;

/// Feature index carried by the root element of every path.
pub const ROOT_FEATURE: i64 = -1;

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("tree {tree}, leaf {leaf}: feature {feature} has an empty range on the path to this leaf")]
    EmptyInterval { tree: usize, leaf: usize, feature: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathElement {
    pub path_idx: usize,
    pub feature_idx: i64,
    #[serde(serialize_with = "finite_or_null")]
    pub feature_lower_bound: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub feature_upper_bound: f64,
    pub zero_fraction: f64,
    pub v: f64,
}

// JSON has no infinities. Lower bounds are only ever -inf and upper bounds
// only ever +inf, so `null` is unambiguous in either slot.
fn finite_or_null<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

impl PathElement {
    pub fn root(path_idx: usize, v: f64) -> Self {
        PathElement {
            path_idx,
            feature_idx: ROOT_FEATURE,
            feature_lower_bound: f64::NEG_INFINITY,
            feature_upper_bound: f64::INFINITY,
            zero_fraction: 1.0,
            v,
        }
    }

    pub fn is_root(&self) -> bool {
        self.feature_idx == ROOT_FEATURE
    }

    /// Column of the row this element tests. Panics on the root element.
    pub fn feature(&self) -> usize {
        usize::try_from(self.feature_idx).expect("root element has no feature")
    }
}

/// Indicator that `row` follows this element's branch when its feature is
/// present: `lower <= x < upper`. The root element always passes.
pub fn one_fraction(element: &PathElement, row: &[f64]) -> f64 {
    if element.is_root() {
        return 1.0;
    }
    let x = row[element.feature()];
    if element.feature_lower_bound <= x && x < element.feature_upper_bound {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquePath {
    pub group: usize,
    pub tree: usize,
    /// Node id of the terminating leaf.
    pub leaf: usize,
    pub elements: Vec<PathElement>,
}

impl UniquePath {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn path_idx(&self) -> usize {
        self.elements[0].path_idx
    }

    /// Leaf value shared by all elements.
    pub fn v(&self) -> f64 {
        self.elements[0].v
    }

    /// Probability of reaching the leaf when no feature is known.
    pub fn zero_fraction_product(&self) -> f64 {
        self.elements.iter().map(|e| e.zero_fraction).product()
    }
}

/// One path per leaf, ordered by tree then by leaf from left to right.
pub fn extract_paths(ensemble: &Ensemble) -> Vec<UniquePath> {
    let mut paths = Vec::with_capacity(ensemble.num_leaves());
    for (t, tree) in ensemble.trees().iter().enumerate() {
        // Stack of (node, edge element leading into it); the edge list is
        // rebuilt from the prefix of the current descent.
        let mut trail: Vec<PathElement> = Vec::new();
        let mut stack: Vec<(usize, usize, Option<PathElement>)> = vec![(0, 0, None)];
        while let Some((id, depth, edge)) = stack.pop() {
            trail.truncate(depth);
            if let Some(e) = edge {
                trail.push(e);
            }
            let node = tree.node(id);
            match node.split_parts() {
                Some((feature, threshold, left, right)) => {
                    let f = feature as i64;
                    let edge = |child: usize, lo: f64, hi: f64| PathElement {
                        path_idx: 0,
                        feature_idx: f,
                        feature_lower_bound: lo,
                        feature_upper_bound: hi,
                        zero_fraction: tree.node(child).cover / node.cover,
                        v: 0.0,
                    };
                    // Right is pushed first so the left subtree is emitted first.
                    stack.push((right, trail.len(), Some(edge(right, threshold, f64::INFINITY))));
                    stack.push((left, trail.len(), Some(edge(left, f64::NEG_INFINITY, threshold))));
                }
                None => {
                    let path_idx = paths.len();
                    let v = node.leaf_value.unwrap_or_default();
                    let mut elements = Vec::with_capacity(trail.len() + 1);
                    elements.push(PathElement::root(path_idx, v));
                    elements.extend(trail.iter().map(|e| PathElement { path_idx, v, ..*e }));
                    paths.push(UniquePath { group: tree.group, tree: t, leaf: id, elements });
                }
            }
        }
    }
    paths
}

/// Sorts elements by feature (root first) and folds repeated features into
/// a single element: the intersection of their ranges and the product of
/// their zero fractions.
pub fn merge_duplicate_features(path: &UniquePath) -> Result<UniquePath, PathError> {
    let mut sorted = path.elements.clone();
    sorted.sort_by_key(|e| e.feature_idx);
    let mut merged: Vec<PathElement> = Vec::with_capacity(sorted.len());
    for e in sorted {
        match merged.last_mut() {
            Some(prev) if prev.feature_idx == e.feature_idx && !e.is_root() => {
                prev.feature_lower_bound = prev.feature_lower_bound.max(e.feature_lower_bound);
                prev.feature_upper_bound = prev.feature_upper_bound.min(e.feature_upper_bound);
                prev.zero_fraction *= e.zero_fraction;
                if prev.feature_lower_bound >= prev.feature_upper_bound {
                    return Err(PathError::EmptyInterval { tree: path.tree, leaf: path.leaf, feature: e.feature_idx });
                }
            }
            _ => merged.push(e),
        }
    }
    Ok(UniquePath { elements: merged, ..path.clone() })
}

/// Extracts and merges every path of the ensemble.
pub fn decompose(ensemble: &Ensemble) -> Result<Vec<UniquePath>, PathError> {
    extract_paths(ensemble).iter().map(merge_duplicate_features).collect()
}

/// Writes one JSON object per element, one per line.
pub fn write_paths_jsonl<W: Write>(paths: &[UniquePath], mut out: W) -> io::Result<()> {
    for e in paths.iter().flat_map(|p| &p.elements) {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::synth::{random_ensemble, random_row, EnsembleShape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const INF: f64 = f64::INFINITY;

    fn el(feature: i64, lo: f64, hi: f64, z: f64) -> PathElement {
        PathElement {
            path_idx: 0,
            feature_idx: feature,
            feature_lower_bound: lo,
            feature_upper_bound: hi,
            zero_fraction: z,
            v: 1.0,
        }
    }

    fn path(elements: Vec<PathElement>) -> UniquePath {
        UniquePath { group: 0, tree: 0, leaf: 0, elements }
    }

    #[test]
    fn stump_paths() {
        let paths = extract_paths(&stump());
        assert_eq!(paths.len(), 2);
        let left = &paths[0].elements;
        assert_eq!(left[0], PathElement::root(0, 1.0));
        assert_eq!(
            left[1],
            PathElement {
                path_idx: 0,
                feature_idx: 0,
                feature_lower_bound: -INF,
                feature_upper_bound: 0.5,
                zero_fraction: 0.4,
                v: 1.0
            }
        );
        let right = &paths[1].elements;
        assert_eq!(
            right[1],
            PathElement {
                path_idx: 1,
                feature_idx: 0,
                feature_lower_bound: 0.5,
                feature_upper_bound: INF,
                zero_fraction: 0.6,
                v: 0.0
            }
        );
    }

    #[test]
    fn single_leaf_path() {
        let paths = extract_paths(&single_leaf());
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].elements, vec![PathElement::root(0, 0.7)]);
    }

    #[test]
    fn depth2_zero_fraction_products() {
        let paths = extract_paths(&depth2());
        let products: Vec<f64> = paths.iter().map(UniquePath::zero_fraction_product).collect();
        let expected = [0.4 * 0.25, 0.4 * 0.75, 0.6];
        for (p, e) in products.iter().zip(expected) {
            assert!((p - e).abs() < 1e-15, "{products:?}");
        }
        assert_eq!(paths.iter().map(|p| p.leaf).collect::<Vec<_>>(), vec![3, 4, 2]);
    }

    #[test]
    fn merge_two_occurrences() {
        let p = path(vec![PathElement::root(0, 1.0), el(0, -INF, 0.5, 0.4), el(0, 0.2, INF, 0.5)]);
        let m = merge_duplicate_features(&p).unwrap();
        assert_eq!(m.elements.len(), 2);
        assert_eq!((m.elements[1].feature_lower_bound, m.elements[1].feature_upper_bound), (0.2, 0.5));
        assert_eq!(m.elements[1].zero_fraction, 0.4 * 0.5);
    }

    #[test]
    fn merge_three_occurrences_and_sorting() {
        let p = path(vec![
            PathElement::root(0, 1.0),
            el(3, -INF, 0.9, 0.5),
            el(1, 0.0, INF, 0.3),
            el(3, 0.1, INF, 0.5),
            el(3, -INF, 0.8, 0.8),
        ]);
        let m = merge_duplicate_features(&p).unwrap();
        let features: Vec<i64> = m.elements.iter().map(|e| e.feature_idx).collect();
        assert_eq!(features, vec![-1, 1, 3]);
        assert!((m.elements[2].zero_fraction - 0.2).abs() < 1e-15);
        assert_eq!((m.elements[2].feature_lower_bound, m.elements[2].feature_upper_bound), (0.1, 0.8));
    }

    #[test]
    fn distinct_features_only_get_sorted() {
        let p = path(vec![PathElement::root(0, 1.0), el(2, -INF, 0.5, 0.4), el(0, 0.5, INF, 0.5)]);
        let m = merge_duplicate_features(&p).unwrap();
        assert_eq!(m.elements, vec![p.elements[0], p.elements[2], p.elements[1]]);
    }

    #[test]
    fn empty_intersection_is_an_error() {
        let p = path(vec![PathElement::root(0, 1.0), el(0, -INF, 0.3, 0.4), el(0, 0.5, INF, 0.5)]);
        assert_eq!(merge_duplicate_features(&p), Err(PathError::EmptyInterval { tree: 0, leaf: 0, feature: 0 }));
    }

    #[test]
    fn one_fraction_bounds() {
        let e = el(0, 0.2, 0.5, 0.3);
        assert_eq!(one_fraction(&e, &[0.3]), 1.0);
        assert_eq!(one_fraction(&e, &[0.5]), 0.0);
        assert_eq!(one_fraction(&e, &[0.2]), 1.0);
        assert_eq!(one_fraction(&PathElement::root(0, 1.0), &[]), 1.0);
    }

    #[test]
    fn jsonl_dump() {
        let mut buf = Vec::new();
        write_paths_jsonl(&extract_paths(&stump()), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(
            lines[1],
            r#"{"path_idx":0,"feature_idx":0,"feature_lower_bound":null,"feature_upper_bound":0.5,"zero_fraction":0.4,"v":1.0}"#
        );
    }

    fn bias(paths: &[UniquePath]) -> f64 {
        paths.iter().map(|p| p.v() * p.zero_fraction_product()).sum()
    }

    #[test]
    fn random_ensemble_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let shape = EnsembleShape { trees: 3, max_depth: 6, features: 4, groups: 1, ..EnsembleShape::default() };
            let e = random_ensemble(&mut rng, &shape);
            let raw = extract_paths(&e);
            assert_eq!(raw.len(), e.num_leaves());
            let merged = decompose(&e).unwrap();

            // Bias is unchanged by merging.
            assert!((bias(&raw) - bias(&merged)).abs() < 1e-12);

            for p in &merged {
                let features: Vec<i64> = p.elements.iter().map(|e| e.feature_idx).collect();
                assert!(features.windows(2).all(|w| w[0] < w[1]));
                assert!(p.elements.iter().all(|e| e.feature_lower_bound < e.feature_upper_bound));
                assert!(p.elements.iter().all(|e| e.zero_fraction > 0.0 && e.zero_fraction <= 1.0));
                assert_eq!(merge_duplicate_features(p).unwrap(), *p);
            }

            // Full presence: exactly one path per tree passes, and it is the predicted leaf.
            let row = random_row(&mut rng, e.num_features());
            let mut total = e.base_score();
            for (t, tree) in e.trees().iter().enumerate() {
                let live: Vec<&UniquePath> = merged
                    .iter()
                    .filter(|p| p.tree == t && p.elements.iter().all(|el| one_fraction(el, &row) == 1.0))
                    .collect();
                assert_eq!(live.len(), 1);
                assert_eq!(live[0].leaf, tree.leaf_for(&row));
                total += live[0].v();
            }
            assert_eq!(total, e.predict(&row)[0]);
        }
    }
}
