//! Unique paths before and after merging repeated features.

use std::error::Error;

use pathshap::model::{Ensemble, Node, Tree};
use pathshap::pathdecomp::{decompose, extract_paths, write_paths_jsonl};

pub fn run_example() -> Result<usize, Box<dyn Error>> {
    // Feature 0 is split twice on the leftmost path.
    let tree = Tree::new(
        0,
        vec![
            Node::split(0, 0, 0.8, 1, 2, 10.0),
            Node::split(1, 0, 0.3, 3, 4, 8.0),
            Node::leaf(2, 3.0, 2.0),
            Node::leaf(3, 1.0, 5.0),
            Node::leaf(4, 2.0, 3.0),
        ],
    );
    let model = Ensemble::new(vec![tree], 1, 1, 0.0)?;
    let raw = extract_paths(&model);
    let merged = decompose(&model)?;
    for (r, m) in raw.iter().zip(&merged) {
        println!("leaf {}: {} elements, {} after merging", r.leaf, r.len(), m.len());
    }
    let mut jsonl = Vec::new();
    write_paths_jsonl(&merged, &mut jsonl)?;
    print!("{}", String::from_utf8(jsonl)?);
    Ok(merged.iter().map(|p| p.len()).sum())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
