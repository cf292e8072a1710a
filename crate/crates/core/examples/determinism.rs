//! Output bytes do not depend on the worker count.

use std::error::Error;

use pathshap::engine::{run, Mode, RunOptions};
use pathshap::model::Dataset;
use pathshap::output::{interactions_csv, shap_csv};
use pathshap::packing::Algorithm;
use pathshap::synth::{random_ensemble, random_row, EnsembleShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<bool, Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = EnsembleShape { trees: 20, max_depth: 6, features: 10, groups: 3, ..EnsembleShape::default() };
    let model = random_ensemble(&mut rng, &shape);
    let rows: Vec<Vec<f64>> = (0..300).map(|_| random_row(&mut rng, model.num_features())).collect();
    let data = Dataset::from_rows(&rows)?;

    let mut identical = true;
    for mode in [Mode::Shap, Mode::Interactions] {
        let render = |workers| -> Result<String, Box<dyn Error>> {
            let options = RunOptions { workers, mode, packing: Algorithm::FirstFitDecreasing, rows_per_block: 16 };
            let out = run(&model, &data, &options)?.output;
            Ok(if mode == Mode::Shap { shap_csv(&out) } else { interactions_csv(&out) })
        };
        let baseline = render(1)?;
        for workers in [4, 8] {
            let same = render(workers)? == baseline;
            println!("{mode:?}: workers={workers} identical to workers=1: {same}");
            identical &= same;
        }
    }
    Ok(identical)
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
