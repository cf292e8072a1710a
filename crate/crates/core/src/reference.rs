//! Serial ground truth.
//!
//! [`treeshap_recursive`] is the classic recursive TreeShap over raw trees,
//! including the find-and-unwind handling of repeated features, so it
//! checks the path decomposition independently. [`shapley_bruteforce`] and
//! [`interaction_bruteforce`] evaluate the Shapley and Shapley-interaction
//! sums directly over every feature subset, using cover-weighted
//! conditional expectations. Nothing here is tuned for speed.
//!
//! Per-group result vectors hold `M + 1` entries, the last being the bias.
//! Interaction matrices are `(M + 1) x (M + 1)`, row-major, with the bias in
//! the bottom-right cell and zeros elsewhere in the last row and column.

use thiserror::Error;

use crate::model::{Ensemble, Tree};
use crate::pathdecomp::ROOT_FEATURE;

/// Largest number of used features [`shapley_bruteforce`] enumerates.
pub const SHAPLEY_MAX_FEATURES: usize = 20;
/// Largest number of used features [`interaction_bruteforce`] enumerates.
pub const INTERACTION_MAX_FEATURES: usize = 12;

#[derive(Debug, Error, PartialEq)]
#[error("ensemble uses {used} features, exhaustive enumeration supports at most {max}")]
pub struct TooManyFeatures {
    pub used: usize,
    pub max: usize,
}

/// One entry of the dynamic-programming state: feature `d`, the fraction
/// of paths followed when the feature is absent (`z`) and present (`o`),
/// and the permutation weight `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub d: i64,
    pub z: f64,
    pub o: f64,
    pub w: f64,
}

/// Permutation-weight state of one path. Element 0 is the root.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathState {
    records: Vec<PathRecord>,
}

impl PathState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[PathRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.w).collect()
    }

    /// Adds feature `p_i` to the path, growing every subset size by one.
    pub fn extend(&self, p_z: f64, p_o: f64, p_i: i64) -> PathState {
        let l = self.records.len();
        let mut m = self.records.clone();
        m.push(PathRecord { d: p_i, z: p_z, o: p_o, w: if l == 0 { 1.0 } else { 0.0 } });
        let denom = (l + 1) as f64;
        for i in (0..l).rev() {
            m[i + 1].w += p_o * m[i].w * (i + 1) as f64 / denom;
            m[i].w = p_z * m[i].w * (l - i) as f64 / denom;
        }
        PathState { records: m }
    }

    /// Removes element `i` (0-based), undoing the extend that added it.
    pub fn unwind(&self, i: usize) -> PathState {
        let l = self.records.len();
        assert!(i < l, "unwind index {i} out of range for length {l}");
        let PathRecord { z, o, .. } = self.records[i];
        let lf = l as f64;
        let mut n = self.records[l - 1].w;
        let mut m: Vec<PathRecord> = self.records[..l - 1].to_vec();
        for j in (0..l - 1).rev() {
            let rank = (j + 1) as f64;
            let rest = (l - j - 1) as f64;
            if o != 0.0 {
                let t = m[j].w;
                m[j].w = n * lf / (rank * o);
                n = t - m[j].w * z * rest / lf;
            } else {
                m[j].w = m[j].w * lf / (z * rest);
            }
        }
        for j in i..l - 1 {
            let next = self.records[j + 1];
            m[j] = PathRecord { d: next.d, z: next.z, o: next.o, w: m[j].w };
        }
        PathState { records: m }
    }

    /// Sum of weights after unwinding element `i`.
    pub fn unwound_sum(&self, i: usize) -> f64 {
        self.unwind(i).records.iter().map(|r| r.w).sum()
    }
}

fn recurse(tree: &Tree, row: &[f64], id: usize, state: &PathState, p_z: f64, p_o: f64, p_i: i64, phi: &mut [f64]) {
    let m = state.extend(p_z, p_o, p_i);
    let node = tree.node(id);
    let Some((feature, threshold, left, right)) = node.split_parts() else {
        let v = node.leaf_value.unwrap_or_default();
        for i in 1..m.len() {
            let w = m.unwound_sum(i);
            let r = m.records[i];
            phi[r.d as usize] += w * (r.o - r.z) * v;
        }
        return;
    };
    let (hot, cold) = if row[feature] < threshold { (left, right) } else { (right, left) };
    let (mut i_z, mut i_o) = (1.0, 1.0);
    let mut m = m;
    if let Some(k) = m.records.iter().position(|r| r.d == feature as i64) {
        i_z = m.records[k].z;
        i_o = m.records[k].o;
        m = m.unwind(k);
    }
    let cover = node.cover;
    recurse(tree, row, hot, &m, i_z * tree.node(hot).cover / cover, i_o, feature as i64, phi);
    recurse(tree, row, cold, &m, i_z * tree.node(cold).cover / cover, 0.0, feature as i64, phi);
}

/// Recursive TreeShap on the raw trees. Returns one `M + 1` vector per group.
pub fn treeshap_recursive(ensemble: &Ensemble, row: &[f64]) -> Vec<Vec<f64>> {
    let m = ensemble.num_features();
    let mut out = vec![vec![0.0; m + 1]; ensemble.num_groups()];
    for tree in ensemble.trees() {
        recurse(tree, row, 0, &PathState::new(), 1.0, 1.0, ROOT_FEATURE, &mut out[tree.group]);
    }
    let bias = expectation_masked(ensemble, row, &vec![false; m]);
    for (phi, b) in out.iter_mut().zip(bias) {
        phi[m] = b;
    }
    out
}

fn tree_expectation(tree: &Tree, row: &[f64], present: &[bool], id: usize) -> f64 {
    let node = tree.node(id);
    match node.split_parts() {
        None => node.leaf_value.unwrap_or_default(),
        Some((f, t, l, r)) if present[f] => tree_expectation(tree, row, present, if row[f] < t { l } else { r }),
        Some((_, _, l, r)) => {
            let (lc, rc) = (tree.node(l).cover, tree.node(r).cover);
            (lc * tree_expectation(tree, row, present, l) + rc * tree_expectation(tree, row, present, r)) / node.cover
        }
    }
}

fn expectation_masked(ensemble: &Ensemble, row: &[f64], present: &[bool]) -> Vec<f64> {
    let mut out = vec![ensemble.base_score(); ensemble.num_groups()];
    for tree in ensemble.trees() {
        out[tree.group] += tree_expectation(tree, row, present, 0);
    }
    out
}

/// Cover-weighted `E[f(x) | x_S]` per group, base score included: splits on
/// features in `subset` follow `row`, other splits average both children by
/// cover.
pub fn conditional_expectation(ensemble: &Ensemble, row: &[f64], subset: &[usize]) -> Vec<f64> {
    let mut present = vec![false; ensemble.num_features()];
    for &f in subset {
        present[f] = true;
    }
    expectation_masked(ensemble, row, &present)
}

/// `f_S` for every subset `S` of `used`, indexed by bitmask over `used`.
fn subset_values(ensemble: &Ensemble, row: &[f64], used: &[usize]) -> Vec<Vec<f64>> {
    let mut present = vec![false; ensemble.num_features()];
    (0..1usize << used.len())
        .map(|mask| {
            for (bit, &f) in used.iter().enumerate() {
                present[f] = mask >> bit & 1 == 1;
            }
            expectation_masked(ensemble, row, &present)
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// Exact Shapley values by enumerating all subsets of the used features.
/// Features the ensemble never splits on get zero.
pub fn shapley_bruteforce(ensemble: &Ensemble, row: &[f64]) -> Result<Vec<Vec<f64>>, TooManyFeatures> {
    let used = ensemble.used_features();
    if used.len() > SHAPLEY_MAX_FEATURES {
        return Err(TooManyFeatures { used: used.len(), max: SHAPLEY_MAX_FEATURES });
    }
    let f = subset_values(ensemble, row, &used);
    Ok(shapley_from_subsets(ensemble, &used, &f))
}

fn shapley_from_subsets(ensemble: &Ensemble, used: &[usize], f: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (m, n) = (ensemble.num_features(), used.len());
    let mut out = vec![vec![0.0; m + 1]; ensemble.num_groups()];
    for (bit, &feature) in used.iter().enumerate() {
        for mask in (0..f.len()).filter(|s| s >> bit & 1 == 0) {
            // |S|!(n-|S|-1)!/n! = 1 / (n * C(n-1, |S|))
            let weight = 1.0 / (n as f64 * binomial(n - 1, mask.count_ones() as usize));
            for (g, phi) in out.iter_mut().enumerate() {
                phi[feature] += weight * (f[mask | 1 << bit][g] - f[mask][g]);
            }
        }
    }
    for (g, phi) in out.iter_mut().enumerate() {
        phi[m] = f[0][g];
    }
    out
}

/// Exact Shapley interaction values by subset enumeration. Off-diagonal
/// cells come straight from the interaction index; each diagonal cell is
/// the feature's Shapley value minus its off-diagonal row.
pub fn interaction_bruteforce(ensemble: &Ensemble, row: &[f64]) -> Result<Vec<Vec<f64>>, TooManyFeatures> {
    let used = ensemble.used_features();
    if used.len() > INTERACTION_MAX_FEATURES {
        return Err(TooManyFeatures { used: used.len(), max: INTERACTION_MAX_FEATURES });
    }
    let f = subset_values(ensemble, row, &used);
    let phis = shapley_from_subsets(ensemble, &used, &f);
    let (m, n) = (ensemble.num_features(), used.len());
    let width = m + 1;
    let mut out = vec![vec![0.0; width * width]; ensemble.num_groups()];
    for (g, matrix) in out.iter_mut().enumerate() {
        for a in 0..n {
            for b in a + 1..n {
                let mut value = 0.0;
                for mask in (0..f.len()).filter(|s| s >> a & 1 == 0 && s >> b & 1 == 0) {
                    // |S|!(n-|S|-2)! / (2 (n-1)!) = 1 / (2 (n-1) C(n-2, |S|))
                    let weight = 1.0 / (2.0 * (n - 1) as f64 * binomial(n - 2, mask.count_ones() as usize));
                    let both = f[mask | 1 << a | 1 << b][g];
                    value += weight * (both - f[mask | 1 << a][g] - f[mask | 1 << b][g] + f[mask][g]);
                }
                let (i, j) = (used[a], used[b]);
                matrix[i * width + j] = value;
                matrix[j * width + i] = value;
            }
        }
        for &i in &used {
            let off: f64 = used.iter().filter(|&&j| j != i).map(|&j| matrix[i * width + j]).sum();
            matrix[i * width + i] = phis[g][i] - off;
        }
        matrix[m * width + m] = phis[g][m];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::synth::{random_ensemble, random_row, EnsembleShape};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn assert_all_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!(close(*x, *y, tol), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn extend_examples() {
        let root = PathState::new().extend(1.0, 1.0, -1);
        assert_eq!(root.weights(), vec![1.0]);
        assert_eq!(root.extend(0.4, 1.0, 0).weights(), vec![0.2, 0.5]);
        assert_eq!(root.extend(0.4, 0.0, 0).weights(), vec![0.2, 0.0]);
    }

    #[test]
    fn unwind_examples() {
        let s = PathState::new().extend(1.0, 1.0, -1).extend(0.4, 1.0, 0);
        assert_eq!(s.unwind(1).weights(), vec![1.0]);
        assert_eq!(s.unwound_sum(1), 1.0);
        assert_eq!(s.records()[1].d, 0);
        // Unwinding the root of a two-element state leaves the feature record.
        let u = s.unwind(0);
        assert_eq!(u.records()[0].d, 0);
    }

    #[test]
    fn stump_values() {
        let e = stump();
        let phi = &treeshap_recursive(&e, &[0.2])[0];
        assert!(close(phi[0], 0.6, 1e-15) && close(phi[1], 0.4, 1e-15), "{phi:?}");
    }

    #[test]
    fn depth2_values() {
        let e = depth2();
        let row = [0.2, 0.7];
        let expected = [1.125, 0.175, 0.7];
        assert_all_close(&treeshap_recursive(&e, &row)[0], &expected, 1e-14);
        assert_all_close(&shapley_bruteforce(&e, &row).unwrap()[0], &expected, 1e-14);
    }

    #[test]
    fn single_leaf_values() {
        let e = single_leaf();
        assert_eq!(treeshap_recursive(&e, &[0.3]), vec![vec![0.0, 0.7]]);
        assert_eq!(shapley_bruteforce(&e, &[0.3]).unwrap(), vec![vec![0.0, 0.7]]);
    }

    #[test]
    fn conditional_expectations() {
        let e = depth2();
        let row = [0.2, 0.7];
        assert!(close(conditional_expectation(&e, &row, &[0])[0], 1.75, 1e-15));
        assert!(close(conditional_expectation(&e, &row, &[1])[0], 0.8, 1e-15));
        assert!(close(conditional_expectation(&e, &row, &[])[0], 0.7, 1e-15));
        assert_eq!(conditional_expectation(&e, &row, &[0, 1]), e.predict(&row));
    }

    #[test]
    fn unused_features_get_zero() {
        let e = depth2().with_num_features(4).unwrap();
        let phi = &shapley_bruteforce(&e, &[0.2, 0.7, 0.3, 0.9]).unwrap()[0];
        assert_eq!((phi[2], phi[3]), (0.0, 0.0));
        let phi = &treeshap_recursive(&e, &[0.2, 0.7, 0.3, 0.9])[0];
        assert_eq!((phi[2], phi[3]), (0.0, 0.0));
    }

    #[test]
    fn depth2_interactions() {
        let m = &interaction_bruteforce(&depth2(), &[0.2, 0.7]).unwrap()[0];
        let expected = [1.05, 0.075, 0.0, 0.075, 0.1, 0.0, 0.0, 0.0, 0.7];
        assert_all_close(m, &expected, 1e-14);
        assert_eq!(m[1], m[3]);
        let total: f64 = m.iter().sum();
        assert!(close(total, 2.0, 1e-14));
    }

    #[test]
    fn stump_interactions() {
        let m = &interaction_bruteforce(&stump(), &[0.2]).unwrap()[0];
        assert_all_close(m, &[0.6, 0.0, 0.0, 0.4], 1e-15);
    }

    #[test]
    fn too_many_features() {
        let shape =
            EnsembleShape { trees: 30, max_depth: 6, features: 40, leaf_probability: 0.0, ..Default::default() };
        let e = random_ensemble(&mut ChaCha8Rng::seed_from_u64(1), &shape);
        let row = vec![0.5; 40];
        assert!(shapley_bruteforce(&e, &row).is_err());
        assert!(interaction_bruteforce(&e, &row).is_err());
    }

    #[test]
    fn recursive_matches_bruteforce_on_random_ensembles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..300 {
            let shape = EnsembleShape {
                trees: 1 + case % 5,
                max_depth: 1 + case % 5,
                features: 1 + case % 8,
                groups: 1 + case % 2,
                base_score: 0.25,
                ..Default::default()
            };
            let e = random_ensemble(&mut rng, &shape);
            let row = random_row(&mut rng, e.num_features());
            let recursive = treeshap_recursive(&e, &row);
            let brute = shapley_bruteforce(&e, &row).unwrap();
            let prediction = e.predict(&row);
            for g in 0..e.num_groups() {
                assert_all_close(&recursive[g], &brute[g], 1e-9);
                let total: f64 = recursive[g].iter().sum();
                assert!(close(total, prediction[g], 1e-9 * prediction[g].abs().max(1.0)));
            }
            if e.used_features().len() <= 6 {
                let inter = interaction_bruteforce(&e, &row).unwrap();
                let width = e.num_features() + 1;
                for g in 0..e.num_groups() {
                    for i in 0..e.num_features() {
                        let row_sum: f64 = (0..e.num_features()).map(|j| inter[g][i * width + j]).sum();
                        assert!(close(row_sum, brute[g][i], 1e-9));
                        for j in 0..width {
                            assert_eq!(inter[g][i * width + j], inter[g][j * width + i]);
                        }
                    }
                }
            }
        }
    }

    fn state_strategy() -> impl Strategy<Value = PathState> {
        prop::collection::vec((0.05f64..=1.0, prop::bool::ANY), 0..10).prop_map(|steps| {
            let mut s = PathState::new().extend(1.0, 1.0, -1);
            for (i, (z, present)) in steps.into_iter().enumerate() {
                s = s.extend(z, if present { 1.0 } else { 0.0 }, i as i64);
            }
            s
        })
    }

    proptest! {
        #[test]
        fn unwind_inverts_extend(s in state_strategy(), z in 0.05f64..=1.0, present in prop::bool::ANY) {
            let o = if present { 1.0 } else { 0.0 };
            let round = s.extend(z, o, 99).unwind(s.len());
            prop_assert_eq!(round.len(), s.len());
            for (a, b) in round.records().iter().zip(s.records()) {
                prop_assert!(close(a.w, b.w, 1e-12), "{:?} vs {:?}", round, s);
                prop_assert_eq!((a.d, a.z, a.o), (b.d, b.z, b.o));
            }
        }

        #[test]
        fn extend_order_does_not_change_unwound_sums(
            steps in prop::collection::vec((0.05f64..=1.0, prop::bool::ANY), 1..8),
            rotate in 0usize..8,
        ) {
            let build = |order: &[usize]| {
                let mut s = PathState::new().extend(1.0, 1.0, -1);
                for &k in order {
                    let (z, p) = steps[k];
                    s = s.extend(z, if p { 1.0 } else { 0.0 }, k as i64);
                }
                s
            };
            let forward: Vec<usize> = (0..steps.len()).collect();
            let mut shuffled = forward.clone();
            shuffled.rotate_left(rotate % steps.len());
            shuffled.reverse();
            let (a, b) = (build(&forward), build(&shuffled));
            for k in 0..steps.len() {
                let ia = a.records().iter().position(|r| r.d == k as i64).unwrap();
                let ib = b.records().iter().position(|r| r.d == k as i64).unwrap();
                prop_assert!(close(a.unwound_sum(ia), b.unwound_sum(ib), 1e-12));
            }
        }
    }
}
