//! Engine against the recursive and brute-force oracles on random models.

use std::error::Error;

use pathshap::engine::{run, RunOptions};
use pathshap::model::Dataset;
use pathshap::reference::{shapley_bruteforce, treeshap_recursive};
use pathshap::selftest::{run_selftest, SelftestOptions};
use pathshap::synth::{random_ensemble, random_row, EnsembleShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<f64, Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let shape = EnsembleShape { trees: 4, max_depth: 5, features: 6, groups: 2, ..EnsembleShape::default() };
        let model = random_ensemble(&mut rng, &shape);
        let row = random_row(&mut rng, model.num_features());
        let out = run(&model, &Dataset::from_rows(&[&row])?, &RunOptions::default())?.output;
        let recursive = treeshap_recursive(&model, &row);
        let brute = shapley_bruteforce(&model, &row)?;
        for g in 0..model.num_groups() {
            for (i, &phi) in out.phi(0, g).iter().enumerate() {
                worst = worst.max((phi - recursive[g][i]).abs()).max((phi - brute[g][i]).abs());
            }
        }
    }
    println!("largest deviation over 50 models: {worst:e}");

    let report = run_selftest(&SelftestOptions { seed: 1, cases: 20, ..SelftestOptions::default() });
    print!("{report}");
    Ok(worst)
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
