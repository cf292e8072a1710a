//! Packing statistics for 80 paths of length 4, then a random ensemble.

use std::error::Error;

use pathshap::output::{pack_stats_table, PackStatsLine};
use pathshap::packing::{pack, Algorithm};
use pathshap::pathdecomp::{decompose, UniquePath};
use pathshap::synth::{complete_ensemble, random_ensemble, EnsembleShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn table(sizes: &[usize]) -> Result<String, Box<dyn Error>> {
    let mut lines = Vec::new();
    for algorithm in Algorithm::ALL {
        let start = std::time::Instant::now();
        let plan = pack(algorithm, sizes)?;
        let time_seconds = start.elapsed().as_secs_f64();
        lines.push(PackStatsLine { algorithm, time_seconds, utilisation: plan.utilisation, bins: plan.num_bins() });
    }
    Ok(pack_stats_table(&lines))
}

pub fn run_example() -> Result<String, Box<dyn Error>> {
    // Ten complete depth-3 trees: 80 leaves, each path root + 3 splits.
    let sizes: Vec<usize> = decompose(&complete_ensemble(10, 3))?.iter().map(UniquePath::len).collect();
    let complete = table(&sizes)?;
    println!("{complete}");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let shape = EnsembleShape { trees: 50, max_depth: 8, features: 12, ..EnsembleShape::default() };
    let sizes: Vec<usize> = decompose(&random_ensemble(&mut rng, &shape))?.iter().map(UniquePath::len).collect();
    println!("{}", table(&sizes)?);
    Ok(complete)
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
