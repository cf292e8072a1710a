//! Randomized oracle-equivalence checks, runnable from the command line.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{run, Mode, RunOptions};
use crate::model::{Dataset, Ensemble};
use crate::packing::{self, Algorithm};
use crate::reference;
use crate::synth::{random_ensemble, random_row, EnsembleShape};

#[derive(Debug, Clone)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Cases per suite.
    pub cases: usize,
    /// Added to every engine value before comparison. Negative control only.
    #[doc(hidden)]
    pub perturbation: f64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions { seed: 0, cases: 100, perturbation: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelftestReport {
    pub suites: Vec<SuiteResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.failed == 0)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            let status = if s.failed == 0 { "PASS" } else { "FAIL" };
            writeln!(f, "{status} {}: {} passed, {} failed", s.name, s.passed, s.failed)?;
        }
        let failed: usize = self.suites.iter().map(|s| s.failed).sum();
        let passed: usize = self.suites.iter().map(|s| s.passed).sum();
        writeln!(f, "total: {passed} passed, {failed} failed")
    }
}

fn within(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn shape<R: Rng>(rng: &mut R, trees: usize, depth: usize, features: usize) -> EnsembleShape {
    EnsembleShape {
        trees: rng.gen_range(1..=trees),
        max_depth: rng.gen_range(1..=depth),
        features: rng.gen_range(1..=features),
        groups: rng.gen_range(1..=2),
        leaf_probability: 0.2,
        base_score: rng.gen_range(-1.0..1.0),
    }
}

struct Case {
    ensemble: Ensemble,
    row: Vec<f64>,
}

fn case<R: Rng>(rng: &mut R, trees: usize, depth: usize, features: usize) -> Case {
    let shape = shape(rng, trees, depth, features);
    let ensemble = random_ensemble(rng, &shape);
    let row = random_row(rng, ensemble.num_features());
    Case { ensemble, row }
}

fn engine(c: &Case, mode: Mode, perturbation: f64) -> Vec<Vec<f64>> {
    let data = Dataset::from_rows(&[&c.row]).expect("finite row");
    let options = RunOptions { mode, ..RunOptions::default() };
    let out = run(&c.ensemble, &data, &options).expect("generated ensembles run").output;
    (0..out.groups)
        .map(|g| {
            let values = match mode {
                Mode::Shap => out.phi(0, g),
                Mode::Interactions => out.interaction(0, g).expect("interactions requested"),
            };
            values.iter().map(|v| v + perturbation).collect()
        })
        .collect()
}

fn suite(name: &'static str, cases: usize, mut check: impl FnMut() -> bool) -> SuiteResult {
    let passed = (0..cases).filter(|_| check()).count();
    SuiteResult { name, passed, failed: cases - passed }
}

/// Runs every suite with `options.cases` cases each.
pub fn run_selftest(options: &SelftestOptions) -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let n = options.cases;
    let eps = options.perturbation;
    let mut suites = Vec::new();

    suites.push(suite("engine vs brute-force shapley", n, || {
        let c = case(&mut rng, 5, 5, 8);
        let brute = reference::shapley_bruteforce(&c.ensemble, &c.row).expect("few features");
        engine(&c, Mode::Shap, eps).iter().zip(&brute).all(|(a, b)| within(a, b, 1e-9))
    }));

    suites.push(suite("engine vs recursive treeshap", n, || {
        let c = case(&mut rng, 20, 12, 30);
        let recursive = reference::treeshap_recursive(&c.ensemble, &c.row);
        engine(&c, Mode::Shap, eps).iter().zip(&recursive).all(|(a, b)| within(a, b, 1e-12))
    }));

    suites.push(suite("recursive treeshap vs brute-force shapley", n, || {
        let c = case(&mut rng, 5, 5, 8);
        let brute = reference::shapley_bruteforce(&c.ensemble, &c.row).expect("few features");
        reference::treeshap_recursive(&c.ensemble, &c.row).iter().zip(&brute).all(|(a, b)| within(a, b, 1e-9))
    }));

    suites.push(suite("engine interactions vs brute force", n, || {
        let c = case(&mut rng, 5, 4, 8);
        let brute = reference::interaction_bruteforce(&c.ensemble, &c.row).expect("few features");
        engine(&c, Mode::Interactions, eps).iter().zip(&brute).all(|(a, b)| within(a, b, 1e-9))
    }));

    suites.push(suite("local accuracy", n, || {
        let c = case(&mut rng, 10, 8, 16);
        let prediction = c.ensemble.predict(&c.row);
        engine(&c, Mode::Shap, eps).iter().zip(&prediction).all(|(phi, f)| {
            let total: f64 = phi.iter().sum();
            (total - f).abs() <= 1e-9 * f.abs().max(1.0)
        })
    }));

    suites.push(suite("packing within ratio of optimum", n, || {
        let items = rng.gen_range(1..=packing::BRUTEFORCE_MAX_ITEMS);
        let sizes: Vec<usize> = (0..items).map(|_| rng.gen_range(1..=packing::CAPACITY)).collect();
        let opt = packing::pack_optimal_bruteforce(&sizes).expect("small instance").num_bins();
        let bins = |a: Algorithm| packing::pack(a, &sizes).expect("valid sizes").num_bins();
        let bound = (1.222 * opt as f64).ceil() as usize + 1;
        bins(Algorithm::FirstFitDecreasing) <= bound
            && bins(Algorithm::BestFitDecreasing) <= bound
            && bins(Algorithm::NextFit) <= 2 * opt
    }));

    SelftestReport { suites }
}
