//! SHAP values for a one-split tree, checked against both oracles.

use std::error::Error;

use pathshap::engine::{run, RunOptions};
use pathshap::model::{Dataset, Ensemble, Node, Tree};
use pathshap::reference::{shapley_bruteforce, treeshap_recursive};

pub fn run_example() -> Result<Vec<f64>, Box<dyn Error>> {
    // x0 < 0.5 reaches a leaf worth 1.0 that holds 40% of the cover.
    let tree = Tree::new(0, vec![Node::split(0, 0, 0.5, 1, 2, 10.0), Node::leaf(1, 1.0, 4.0), Node::leaf(2, 0.0, 6.0)]);
    let model = Ensemble::new(vec![tree], 1, 1, 0.0)?;
    let row = [0.2];

    let out = run(&model, &Dataset::from_rows(&[row])?, &RunOptions::default())?.output;
    let phi = out.phi(0, 0).to_vec();
    println!("engine     phi0={} bias={}", phi[0], phi[1]);

    let recursive = treeshap_recursive(&model, &row);
    let brute = shapley_bruteforce(&model, &row)?;
    println!("recursive  phi0={} bias={}", recursive[0][0], recursive[0][1]);
    println!("brute      phi0={} bias={}", brute[0][0], brute[0][1]);
    println!("prediction {} = {}", model.predict(&row)[0], phi.iter().sum::<f64>());
    Ok(phi)
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
