//! Rows per second for each packing algorithm. Numbers are for trend
//! inspection only.

use std::error::Error;

use pathshap::engine::{run, RunOptions};
use pathshap::model::Dataset;
use pathshap::packing::Algorithm;
use pathshap::synth::{random_ensemble, random_row, EnsembleShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let shape =
        EnsembleShape { trees: 40, max_depth: 6, features: 20, leaf_probability: 0.1, ..EnsembleShape::default() };
    let model = random_ensemble(&mut rng, &shape);
    let rows: Vec<Vec<f64>> = (0..200).map(|_| random_row(&mut rng, model.num_features())).collect();
    let data = Dataset::from_rows(&rows)?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());

    println!("algorithm,bins,utilisation,rows_per_second");
    for packing in Algorithm::ALL {
        let stats = run(&model, &data, &RunOptions { packing, workers, ..RunOptions::default() })?.stats;
        let rate = data.rows() as f64 / stats.wall_time_seconds;
        println!("{packing},{},{:.6},{rate:.0}", stats.bins, stats.utilisation);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
