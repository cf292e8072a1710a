//! Path-parallel SHAP engine.
//!
//! The pipeline extracts and merges unique paths, packs them into 32-lane
//! groups once per ensemble, then evaluates every (bin, row) work unit with
//! the lockstep kernels in [`lanes`]. Rows are split into contiguous blocks
//! and handed to a worker pool; each output row is written by exactly one
//! worker, and within a row the bins are accumulated in ascending order, so
//! results do not depend on the worker count.

pub mod lanes;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{Dataset, Ensemble};
use crate::packing::{self, Algorithm, PackingError, PackingPlan};
use crate::pathdecomp::{decompose, PathError, UniquePath};

pub use lanes::{LaneGroup, Lanes, WARP_SIZE};

pub const DEFAULT_ROWS_PER_BLOCK: usize = 64;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("path too deep to fit a lane group: {0}")]
    Packing(#[from] PackingError),
    #[error("dataset has {data} columns but the model expects {model} features")]
    FeatureMismatch { model: usize, data: usize },
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Shap,
    Interactions,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub packing: Algorithm,
    pub workers: usize,
    pub mode: Mode,
    pub rows_per_block: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            packing: Algorithm::BestFitDecreasing,
            workers: 1,
            mode: Mode::Shap,
            rows_per_block: DEFAULT_ROWS_PER_BLOCK,
        }
    }
}

/// Exact work counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Instrumentation {
    /// Lane-steps spent in extend: group size per extend step.
    pub extend_steps: u64,
    /// Conditioning passes, one per (row, path, conditioned element).
    pub conditioned_evals: u64,
}

impl std::ops::AddAssign for Instrumentation {
    fn add_assign(&mut self, rhs: Self) {
        self.extend_steps += rhs.extend_steps;
        self.conditioned_evals += rhs.conditioned_evals;
    }
}

/// What `--stats` reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunStats {
    pub extend_steps: u64,
    pub conditioned_evals: u64,
    pub bins: usize,
    pub utilisation: f64,
    pub wall_time_seconds: f64,
}

/// Merged paths, their packing and the per-group bias, built once per
/// ensemble and reused for every row.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub paths: Vec<UniquePath>,
    pub schedule: WorkSchedule,
    pub num_features: usize,
    pub num_groups: usize,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct WorkSchedule {
    pub plan: PackingPlan,
    pub rows_per_block: usize,
}

impl Prepared {
    pub fn new(ensemble: &Ensemble, packing: Algorithm, rows_per_block: usize) -> Result<Self, EngineError> {
        let paths = decompose(ensemble)?;
        let sizes: Vec<usize> = paths.iter().map(UniquePath::len).collect();
        let plan = packing::pack(packing, &sizes)?;
        Ok(Prepared {
            bias: compute_bias(&paths, ensemble.num_groups(), ensemble.base_score()),
            paths,
            schedule: WorkSchedule { plan, rows_per_block: rows_per_block.max(1) },
            num_features: ensemble.num_features(),
            num_groups: ensemble.num_groups(),
        })
    }

    /// Paths in execution order: ascending bin, then packed order.
    fn scheduled_paths(&self) -> impl Iterator<Item = &UniquePath> {
        self.schedule.plan.bins.iter().flat_map(|bin| bin.items.iter().map(|p| &self.paths[p.item]))
    }
}

/// Expected output with no feature known: per group, the sum over paths of
/// leaf value times the product of zero fractions, plus `base_score`.
pub fn compute_bias(paths: &[UniquePath], num_groups: usize, base_score: f64) -> Vec<f64> {
    let mut bias = vec![0.0; num_groups];
    for p in paths {
        bias[p.group] += p.v() * p.zero_fraction_product();
    }
    bias.iter().map(|b| b + base_score).collect()
}

/// Per-row attributions. `phis` is `rows x groups x (M + 1)`, bias last;
/// `interactions`, when present, is `rows x groups x (M + 1) x (M + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionOutput {
    pub rows: usize,
    pub groups: usize,
    pub num_features: usize,
    pub phis: Vec<f64>,
    pub interactions: Option<Vec<f64>>,
}

impl AttributionOutput {
    fn width(&self) -> usize {
        self.num_features + 1
    }

    /// `M + 1` values for one row and group, bias last.
    pub fn phi(&self, row: usize, group: usize) -> &[f64] {
        let w = self.width();
        let start = (row * self.groups + group) * w;
        &self.phis[start..start + w]
    }

    /// Row-major `(M + 1) x (M + 1)` matrix for one row and group.
    pub fn interaction(&self, row: usize, group: usize) -> Option<&[f64]> {
        let w = self.width();
        let start = (row * self.groups + group) * w * w;
        self.interactions.as_ref().map(|m| &m[start..start + w * w])
    }
}

/// Adds one path's contribution for one row to `phi` (the row's
/// `groups x (M + 1)` slice).
fn accumulate_path(path: &UniquePath, row: &[f64], width: usize, phi: &mut [f64], stats: &mut Instrumentation) {
    let mut group = LaneGroup::load(&path.elements, row);
    stats.extend_steps += (group.len() as u64) * (group.len() as u64 - 1);
    group.extend_all();
    let sums = group.parallel_unwound_sum();
    let v = path.v();
    let out = &mut phi[path.group * width..(path.group + 1) * width];
    for lane in 1..group.len() {
        let contribution = sums[lane] * (group.one_fraction(lane) - group.zero_fraction(lane)) * v;
        out[group.feature(lane) as usize] += contribution;
    }
}

fn shap_row(prepared: &Prepared, row: &[f64], phi: &mut [f64]) -> Instrumentation {
    let width = prepared.num_features + 1;
    let mut stats = Instrumentation::default();
    for path in prepared.scheduled_paths() {
        accumulate_path(path, row, width, phi, &mut stats);
    }
    for g in 0..prepared.num_groups {
        phi[g * width + prepared.num_features] = prepared.bias[g];
    }
    stats
}

/// Conditioned contributions for one path: `cond[a][b]` is element `a`'s
/// SHAP contribution with element `b` held present minus held absent, halved.
fn conditioned_matrix(path: &UniquePath, row: &[f64], stats: &mut Instrumentation) -> Vec<[f64; WARP_SIZE]> {
    let k = path.len();
    let v = path.v();
    let mut cond = vec![[0.0; WARP_SIZE]; k];
    let mut order: Vec<usize> = Vec::with_capacity(k);
    for j in 1..k {
        // Conditioned element goes to the last lane and is never extended.
        order.clear();
        order.extend((0..k).filter(|&e| e != j));
        order.push(j);
        let mut group = LaneGroup::load(order.iter().map(|&e| &path.elements[e]), row);
        for _ in 1..k - 1 {
            stats.extend_steps += k as u64;
            group.extend_next();
        }
        stats.conditioned_evals += 1;
        let sums = group.parallel_unwound_sum();
        let (on, off) = (group.one_fraction(k - 1), group.zero_fraction(k - 1));
        for lane in 1..k - 1 {
            let phi = sums[lane] * (group.one_fraction(lane) - group.zero_fraction(lane)) * v;
            cond[order[lane]][j] = (phi * on - phi * off) / 2.0;
        }
    }
    cond
}

fn interaction_row(prepared: &Prepared, row: &[f64], phi: &mut [f64], matrix: &mut [f64]) -> Instrumentation {
    let m = prepared.num_features;
    let width = m + 1;
    let cells = width * width;
    let mut stats = shap_row(prepared, row, phi);
    for path in prepared.scheduled_paths() {
        let cond = conditioned_matrix(path, row, &mut stats);
        let out = &mut matrix[path.group * cells..(path.group + 1) * cells];
        for a in 1..path.len() {
            for b in a + 1..path.len() {
                let value = (cond[a][b] + cond[b][a]) / 2.0;
                let (fa, fb) = (path.elements[a].feature(), path.elements[b].feature());
                out[fa * width + fb] += value;
                out[fb * width + fa] += value;
            }
        }
    }
    for g in 0..prepared.num_groups {
        let out = &mut matrix[g * cells..(g + 1) * cells];
        for i in 0..m {
            let off: f64 = (0..m).filter(|&j| j != i).map(|j| out[i * width + j]).sum();
            out[i * width + i] = phi[g * width + i] - off;
        }
        out[m * width + m] = prepared.bias[g];
    }
    stats
}

fn check_dataset(prepared: &Prepared, dataset: &Dataset) -> Result<(), EngineError> {
    if dataset.rows() > 0 && dataset.cols() != prepared.num_features {
        return Err(EngineError::FeatureMismatch { model: prepared.num_features, data: dataset.cols() });
    }
    Ok(())
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, EngineError> {
    if workers == 0 {
        return Err(EngineError::NoWorkers);
    }
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

/// SHAP values for every row.
pub fn shap_kernel(
    prepared: &Prepared,
    dataset: &Dataset,
    workers: usize,
) -> Result<(AttributionOutput, Instrumentation), EngineError> {
    check_dataset(prepared, dataset)?;
    let stride = prepared.num_groups * (prepared.num_features + 1);
    let mut phis = vec![0.0; dataset.rows() * stride];
    let block = prepared.schedule.rows_per_block;
    let stats = pool(workers)?.install(|| {
        phis.par_chunks_mut((block * stride).max(1))
            .enumerate()
            .map(|(b, chunk)| {
                let mut stats = Instrumentation::default();
                for (r, phi) in chunk.chunks_mut(stride).enumerate() {
                    stats += shap_row(prepared, dataset.row(b * block + r), phi);
                }
                stats
            })
            .reduce(Instrumentation::default, |mut a, b| {
                a += b;
                a
            })
    });
    let output = AttributionOutput {
        rows: dataset.rows(),
        groups: prepared.num_groups,
        num_features: prepared.num_features,
        phis,
        interactions: None,
    };
    Ok((output, stats))
}

/// SHAP interaction matrices (and the SHAP values they decompose) for every row.
pub fn interaction_kernel(
    prepared: &Prepared,
    dataset: &Dataset,
    workers: usize,
) -> Result<(AttributionOutput, Instrumentation), EngineError> {
    check_dataset(prepared, dataset)?;
    let width = prepared.num_features + 1;
    let stride = prepared.num_groups * width;
    let cells = prepared.num_groups * width * width;
    let mut phis = vec![0.0; dataset.rows() * stride];
    let mut matrices = vec![0.0; dataset.rows() * cells];
    let block = prepared.schedule.rows_per_block;
    let stats = pool(workers)?.install(|| {
        phis.par_chunks_mut((block * stride).max(1))
            .zip(matrices.par_chunks_mut((block * cells).max(1)))
            .enumerate()
            .map(|(b, (phi_chunk, matrix_chunk))| {
                let mut stats = Instrumentation::default();
                for (r, (phi, matrix)) in phi_chunk.chunks_mut(stride).zip(matrix_chunk.chunks_mut(cells)).enumerate() {
                    stats += interaction_row(prepared, dataset.row(b * block + r), phi, matrix);
                }
                stats
            })
            .reduce(Instrumentation::default, |mut a, b| {
                a += b;
                a
            })
    });
    let output = AttributionOutput {
        rows: dataset.rows(),
        groups: prepared.num_groups,
        num_features: prepared.num_features,
        phis,
        interactions: Some(matrices),
    };
    Ok((output, stats))
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub output: AttributionOutput,
    pub stats: RunStats,
}

/// Decompose, pack and evaluate in one call.
pub fn run(ensemble: &Ensemble, dataset: &Dataset, options: &RunOptions) -> Result<RunOutput, EngineError> {
    let start = Instant::now();
    let prepared = Prepared::new(ensemble, options.packing, options.rows_per_block)?;
    let (output, counters) = match options.mode {
        Mode::Shap => shap_kernel(&prepared, dataset, options.workers)?,
        Mode::Interactions => interaction_kernel(&prepared, dataset, options.workers)?,
    };
    let stats = RunStats {
        extend_steps: counters.extend_steps,
        conditioned_evals: counters.conditioned_evals,
        bins: prepared.schedule.plan.num_bins(),
        utilisation: prepared.schedule.plan.utilisation,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput { output, stats })
}
