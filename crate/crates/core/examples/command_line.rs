//! Driving the command-line interface in-process.

use std::error::Error;

use pathshap::cli::run_cli;

const MODEL: &str = r#"{"num_features": 1, "num_groups": 1, "base_score": 0.0, "trees": [{"group": 0, "nodes": [
  {"id": 0, "feature": 0, "threshold": 0.5, "left": 1, "right": 2, "cover": 10.0},
  {"id": 1, "leaf_value": 1.0, "cover": 4.0},
  {"id": 2, "leaf_value": 0.0, "cover": 6.0}]}]}"#;

pub fn run_example() -> Result<String, Box<dyn Error>> {
    let dir = std::env::temp_dir().join(format!("pathshap-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let model = dir.join("stump.json");
    let data = dir.join("rows.csv");
    std::fs::write(&model, MODEL)?;
    std::fs::write(&data, "0.2\n0.9\n")?;

    let (mut out, mut err) = (Vec::new(), Vec::new());
    let args = ["pathshap", "shap", "--model", model.to_str().unwrap(), "--data", data.to_str().unwrap(), "--stats"];
    let code = run_cli(args, &mut out, &mut err);
    let csv = String::from_utf8(out)?;
    println!("exit {code}\n{csv}stats {}", String::from_utf8(err)?);

    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code =
        run_cli(["pathshap", "pack-stats", "--synthetic-trees", "10", "--synthetic-depth", "3"], &mut out, &mut err);
    println!("exit {code}\n{}", String::from_utf8(out)?);

    std::fs::remove_dir_all(&dir)?;
    Ok(csv)
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
