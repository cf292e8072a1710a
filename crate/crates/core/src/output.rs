//! Text renderings of attribution results and packing reports.
//!
//! Reals are written in the shortest form that parses back to the same
//! double, so files are lossless and byte-stable across runs.

use std::fmt::Write;

use crate::engine::AttributionOutput;
use crate::packing::Algorithm;

/// Shortest round-trip decimal for `x`; negative zero prints as zero.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let s = format!("{x:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

fn column_names(num_features: usize, suffix: &str) -> Vec<String> {
    (0..num_features).map(|f| format!("f{f}{suffix}")).chain(std::iter::once(format!("bias{suffix}"))).collect()
}

/// One line per row; per group `M` feature columns then the bias column.
/// Column names carry a `_g<k>` suffix when there is more than one group.
pub fn shap_csv(out: &AttributionOutput) -> String {
    let mut header = Vec::new();
    for g in 0..out.groups {
        let suffix = if out.groups > 1 { format!("_g{g}") } else { String::new() };
        header.extend(column_names(out.num_features, &suffix));
    }
    let mut text = header.join(",");
    text.push('\n');
    for r in 0..out.rows {
        let line: Vec<String> =
            (0..out.groups).flat_map(|g| out.phi(r, g).iter().map(|&v| format_real(v)).collect::<Vec<_>>()).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    text
}

/// One line per (row, group, matrix row `i`), `i = M` being the bias row,
/// followed by the `M + 1` cells of that matrix row.
pub fn interactions_csv(out: &AttributionOutput) -> String {
    let width = out.num_features + 1;
    let mut text = String::from("row,group,feature,");
    text.push_str(&column_names(out.num_features, "").join(","));
    text.push('\n');
    for r in 0..out.rows {
        for g in 0..out.groups {
            let Some(matrix) = out.interaction(r, g) else { continue };
            for i in 0..width {
                let cells: Vec<String> = matrix[i * width..(i + 1) * width].iter().map(|&v| format_real(v)).collect();
                let _ = writeln!(text, "{r},{g},{i},{}", cells.join(","));
            }
        }
    }
    text
}

/// One row of a packing report.
#[derive(Debug, Clone, PartialEq)]
pub struct PackStatsLine {
    pub algorithm: Algorithm,
    pub time_seconds: f64,
    pub utilisation: f64,
    pub bins: usize,
}

pub fn pack_stats_table(lines: &[PackStatsLine]) -> String {
    let mut text = String::from("algorithm,time_seconds,utilisation,bins\n");
    for l in lines {
        let _ = writeln!(text, "{},{:.6},{:.6},{}", l.algorithm, l.time_seconds, l.utilisation, l.bins);
    }
    text
}
