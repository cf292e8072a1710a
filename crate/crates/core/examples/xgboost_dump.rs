//! Explaining a two-class model read from an XGBoost JSON dump.

use std::error::Error;

use pathshap::engine::{run, RunOptions};
use pathshap::model::{load_dataset, parse_xgboost_dump};
use pathshap::output::shap_csv;

const DUMP: &str = r#"[
  {"nodeid": 0, "depth": 0, "split": "f1", "split_condition": 0.3, "yes": 1, "no": 2, "missing": 1, "cover": 100,
   "children": [{"nodeid": 1, "leaf": -0.4, "cover": 30}, {"nodeid": 2, "leaf": 0.2, "cover": 70}]},
  {"nodeid": 0, "depth": 0, "split": "f0", "split_condition": 1.5, "yes": 1, "no": 2, "missing": 2, "cover": 100,
   "children": [
     {"nodeid": 1, "depth": 1, "split": "f0", "split_condition": 0.5, "yes": 3, "no": 4, "missing": 3, "cover": 60,
      "children": [{"nodeid": 3, "leaf": 0.1, "cover": 20}, {"nodeid": 4, "leaf": 0.3, "cover": 40}]},
     {"nodeid": 2, "leaf": -0.5, "cover": 40}]}
]"#;

const DATA: &str = "a,b,c\n0.0,0.1,7\n1.0,0.9,7\n2.0,0.5,7\n";

pub fn run_example() -> Result<String, Box<dyn Error>> {
    // The dump does not say how many classes there are; tree i feeds class i % 2.
    let model = parse_xgboost_dump(DUMP, 2)?.with_base_score(0.5)?;
    let data = load_dataset(DATA, true)?;
    // Column c is never split on; widen the model to the dataset.
    let model = model.with_num_features(data.cols())?;
    let out = run(&model, &data, &RunOptions::default())?.output;
    let csv = shap_csv(&out);
    print!("{csv}");
    Ok(csv)
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
