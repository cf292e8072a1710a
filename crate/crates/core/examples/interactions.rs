//! SHAP interaction matrix for a depth-2 tree with two features.

use std::error::Error;

use pathshap::engine::{run, Mode, RunOptions};
use pathshap::model::{Dataset, Ensemble, Node, Tree};

pub fn run_example() -> Result<Vec<f64>, Box<dyn Error>> {
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
    let model = Ensemble::new(vec![tree], 2, 1, 0.0)?;
    let data = Dataset::from_rows(&[[0.2, 0.7]])?;
    let options = RunOptions { mode: Mode::Interactions, ..RunOptions::default() };
    let out = run(&model, &data, &options)?.output;

    let matrix = out.interaction(0, 0).expect("interaction mode").to_vec();
    let width = model.num_features() + 1;
    for (i, cells) in matrix.chunks(width).enumerate() {
        let label = if i == model.num_features() { "bias".to_string() } else { format!("f{i}") };
        println!("{label:>4}: {cells:?}");
    }
    // Row sums give back the SHAP values.
    let sums: Vec<f64> = matrix.chunks(width).map(|c| c.iter().sum()).collect();
    println!(" phi: {sums:?}");
    Ok(matrix)
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
