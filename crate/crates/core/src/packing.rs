//! Assignment of unique paths to fixed-capacity lane groups.
//!
//! Items are merged path lengths, bins are 32-lane groups. A path never
//! straddles two bins. The decreasing heuristics order items by size
//! (descending, ties by original index) and then place each item either in
//! the first bin that fits (FFD, tournament tree over residuals) or in the
//! fitting bin with the least room left (BFD, ordered set of residuals).

use std::cmp::Reverse;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Lanes per group.
pub const CAPACITY: usize = 32;

/// Largest instance [`pack_optimal_bruteforce`] accepts.
pub const BRUTEFORCE_MAX_ITEMS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum PackingError {
    #[error("item {item} has size {size}, outside [1, {capacity}]")]
    ItemSize { item: usize, size: usize, capacity: usize },
    #[error("{0} items is too many for exhaustive search (max {BRUTEFORCE_MAX_ITEMS})")]
    TooManyItems(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    None,
    NextFit,
    FirstFitDecreasing,
    BestFitDecreasing,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] =
        [Algorithm::None, Algorithm::NextFit, Algorithm::FirstFitDecreasing, Algorithm::BestFitDecreasing];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::None => "none",
            Algorithm::NextFit => "nf",
            Algorithm::FirstFitDecreasing => "ffd",
            Algorithm::BestFitDecreasing => "bfd",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown packing algorithm `{s}` (expected none, nf, ffd or bfd)"))
    }
}

/// An item placed in a bin, occupying lanes `offset..offset + size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub item: usize,
    pub offset: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bin {
    pub items: Vec<Placement>,
}

impl Bin {
    pub fn used(&self) -> usize {
        self.items.iter().map(|p| p.size).sum()
    }

    fn push(&mut self, item: usize, size: usize) {
        let offset = self.used();
        self.items.push(Placement { item, offset, size });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackingPlan {
    pub bins: Vec<Bin>,
    pub capacity: usize,
    pub utilisation: f64,
}

impl PackingPlan {
    fn from_bins(bins: Vec<Bin>, capacity: usize) -> Self {
        let used: usize = bins.iter().map(Bin::used).sum();
        let utilisation = if bins.is_empty() { 1.0 } else { used as f64 / (capacity * bins.len()) as f64 };
        PackingPlan { bins, capacity, utilisation }
    }

    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn num_items(&self) -> usize {
        self.bins.iter().map(|b| b.items.len()).sum()
    }
}

pub fn pack(algorithm: Algorithm, sizes: &[usize]) -> Result<PackingPlan, PackingError> {
    pack_with_capacity(algorithm, sizes, CAPACITY)
}

#[doc(hidden)]
pub fn pack_with_capacity(algorithm: Algorithm, sizes: &[usize], capacity: usize) -> Result<PackingPlan, PackingError> {
    check_sizes(sizes, capacity)?;
    let bins = match algorithm {
        Algorithm::None => none(sizes),
        Algorithm::NextFit => next_fit(sizes, capacity),
        Algorithm::FirstFitDecreasing => first_fit_decreasing(sizes, capacity),
        Algorithm::BestFitDecreasing => best_fit_decreasing(sizes, capacity),
    };
    Ok(PackingPlan::from_bins(bins, capacity))
}

/// One item per bin.
pub fn pack_none(sizes: &[usize]) -> Result<PackingPlan, PackingError> {
    pack(Algorithm::None, sizes)
}

pub fn pack_nf(sizes: &[usize]) -> Result<PackingPlan, PackingError> {
    pack(Algorithm::NextFit, sizes)
}

pub fn pack_ffd(sizes: &[usize]) -> Result<PackingPlan, PackingError> {
    pack(Algorithm::FirstFitDecreasing, sizes)
}

pub fn pack_bfd(sizes: &[usize]) -> Result<PackingPlan, PackingError> {
    pack(Algorithm::BestFitDecreasing, sizes)
}

fn check_sizes(sizes: &[usize], capacity: usize) -> Result<(), PackingError> {
    match sizes.iter().position(|&s| s == 0 || s > capacity) {
        Some(item) => Err(PackingError::ItemSize { item, size: sizes[item], capacity }),
        None => Ok(()),
    }
}

fn none(sizes: &[usize]) -> Vec<Bin> {
    sizes.iter().enumerate().map(|(item, &size)| Bin { items: vec![Placement { item, offset: 0, size }] }).collect()
}

fn next_fit(sizes: &[usize], capacity: usize) -> Vec<Bin> {
    let mut bins: Vec<Bin> = Vec::new();
    let mut fill = capacity;
    for (item, &size) in sizes.iter().enumerate() {
        if fill + size > capacity {
            bins.push(Bin::default());
            fill = 0;
        }
        bins.last_mut().expect("a bin is open").push(item, size);
        fill += size;
    }
    bins
}

fn decreasing_order(sizes: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by_key(|&i| (Reverse(sizes[i]), i));
    order
}

/// Max-residual tournament tree over `n` bin slots. Unopened slots hold the
/// full capacity, so the leftmost fitting slot is either an open bin or the
/// next bin to open.
struct Tournament {
    leaves: usize,
    tree: Vec<usize>,
}

impl Tournament {
    fn new(n: usize, capacity: usize) -> Self {
        let leaves = n.max(1).next_power_of_two();
        Tournament { leaves, tree: vec![capacity; 2 * leaves] }
    }

    fn leftmost_fitting(&self, size: usize) -> usize {
        let mut node = 1;
        while node < self.leaves {
            node = if self.tree[2 * node] >= size { 2 * node } else { 2 * node + 1 };
        }
        node - self.leaves
    }

    fn set(&mut self, slot: usize, residual: usize) {
        let mut node = slot + self.leaves;
        self.tree[node] = residual;
        while node > 1 {
            node /= 2;
            self.tree[node] = self.tree[2 * node].max(self.tree[2 * node + 1]);
        }
    }
}

fn first_fit_decreasing(sizes: &[usize], capacity: usize) -> Vec<Bin> {
    let mut bins: Vec<Bin> = Vec::new();
    let mut residuals = Tournament::new(sizes.len(), capacity);
    for item in decreasing_order(sizes) {
        let size = sizes[item];
        let slot = residuals.leftmost_fitting(size);
        if slot == bins.len() {
            bins.push(Bin::default());
        }
        bins[slot].push(item, size);
        residuals.set(slot, capacity - bins[slot].used());
    }
    bins
}

fn best_fit_decreasing(sizes: &[usize], capacity: usize) -> Vec<Bin> {
    let mut bins: Vec<Bin> = Vec::new();
    // (residual, bin index): the first entry at or above `(size, 0)` is the
    // tightest fit, lowest index first among equal residuals.
    let mut open: BTreeSet<(usize, usize)> = BTreeSet::new();
    for item in decreasing_order(sizes) {
        let size = sizes[item];
        let slot = match open.range((size, 0)..).next().copied() {
            Some(key) => {
                open.remove(&key);
                key.1
            }
            None => {
                bins.push(Bin::default());
                bins.len() - 1
            }
        };
        bins[slot].push(item, size);
        let residual = capacity - bins[slot].used();
        if residual > 0 {
            open.insert((residual, slot));
        }
    }
    bins
}

/// Minimal-bin packing by exhaustive search. Test oracle for small instances.
pub fn pack_optimal_bruteforce(sizes: &[usize]) -> Result<PackingPlan, PackingError> {
    pack_optimal_bruteforce_with_capacity(sizes, CAPACITY)
}

#[doc(hidden)]
pub fn pack_optimal_bruteforce_with_capacity(sizes: &[usize], capacity: usize) -> Result<PackingPlan, PackingError> {
    if sizes.len() > BRUTEFORCE_MAX_ITEMS {
        return Err(PackingError::TooManyItems(sizes.len()));
    }
    check_sizes(sizes, capacity)?;
    let order = decreasing_order(sizes);
    let mut best = first_fit_decreasing(sizes, capacity)
        .into_iter()
        .map(|b| b.items.iter().map(|p| p.item).collect())
        .collect::<Vec<Vec<usize>>>();
    let lower_bound = sizes.iter().sum::<usize>().div_ceil(capacity);
    let mut current: Vec<(usize, Vec<usize>)> = Vec::new();
    search(sizes, capacity, &order, 0, lower_bound, &mut current, &mut best);

    let bins = best
        .into_iter()
        .map(|items| {
            let mut bin = Bin::default();
            for item in items {
                bin.push(item, sizes[item]);
            }
            bin
        })
        .collect();
    Ok(PackingPlan::from_bins(bins, capacity))
}

fn search(
    sizes: &[usize],
    capacity: usize,
    order: &[usize],
    next: usize,
    lower_bound: usize,
    current: &mut Vec<(usize, Vec<usize>)>,
    best: &mut Vec<Vec<usize>>,
) {
    if best.len() <= lower_bound || current.len() >= best.len() {
        return;
    }
    let Some(&item) = order.get(next) else {
        *best = current.iter().map(|(_, items)| items.clone()).collect();
        return;
    };
    let size = sizes[item];
    let mut tried_fill = Vec::new();
    for b in 0..current.len() {
        let fill = current[b].0;
        // Bins with equal fill are interchangeable for the rest of the search.
        if fill + size > capacity || tried_fill.contains(&fill) {
            continue;
        }
        tried_fill.push(fill);
        current[b].0 += size;
        current[b].1.push(item);
        search(sizes, capacity, order, next + 1, lower_bound, current, best);
        current[b].1.pop();
        current[b].0 -= size;
    }
    if current.len() + 1 < best.len() {
        current.push((size, vec![item]));
        search(sizes, capacity, order, next + 1, lower_bound, current, best);
        current.pop();
    }
}
