//! Exact SHAP values and SHAP interaction values for decision-tree
//! ensembles.
//!
//! Trees are decomposed into root-to-leaf paths ([`pathdecomp`]), repeated
//! features on a path are merged, paths are bin-packed into 32-lane groups
//! ([`packing`]) and every (path, row) pair is solved by a lockstep
//! dynamic programme over the lanes of its group ([`engine`]). The
//! [`reference`] module holds the recursive algorithm and brute-force
//! Shapley enumeration used to check the engine.
//!
//! ```
//! use pathshap::engine::{run, RunOptions};
//! use pathshap::model::{Dataset, Ensemble, Node, Tree};
//!
//! let tree = Tree::new(0, vec![
//!     Node::split(0, 0, 0.5, 1, 2, 10.0),
//!     Node::leaf(1, 1.0, 4.0),
//!     Node::leaf(2, 0.0, 6.0),
//! ]);
//! let model = Ensemble::new(vec![tree], 1, 1, 0.0).unwrap();
//! let data = Dataset::from_rows(&[[0.2]]).unwrap();
//! let out = run(&model, &data, &RunOptions::default()).unwrap().output;
//! let phi = out.phi(0, 0);
//! assert!((phi[0] - 0.6).abs() < 1e-12 && (phi[1] - 0.4).abs() < 1e-12);
//! ```

pub mod cli;
pub mod engine;
pub mod model;
pub mod output;
pub mod packing;
pub mod pathdecomp;
pub mod reference;
pub mod selftest;
pub mod synth;
