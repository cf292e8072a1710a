//! Software lane group with lockstep semantics.
//!
//! A group holds one merged path, one element per lane, with per-lane
//! registers `d`, `z`, `o` and the permutation weight `w`. Cross-lane
//! traffic goes through [`LaneGroup::shuffle`], which takes the whole
//! register file, so every lane of the group takes part in every exchange.
//! Reads from lanes outside the group yield 0.

use crate::pathdecomp::{one_fraction, PathElement};

/// Lanes per group.
pub const WARP_SIZE: usize = 32;

/// One register across all lanes of a group.
pub type Lanes = [f64; WARP_SIZE];

#[derive(Debug, Clone)]
pub struct LaneGroup {
    len: usize,
    /// Number of lanes already folded into the weights.
    depth: usize,
    d: [i64; WARP_SIZE],
    z: Lanes,
    o: Lanes,
    w: Lanes,
    shuffles: u64,
}

impl LaneGroup {
    /// Group over explicit per-lane registers. Lane 0 starts with weight 1
    /// and counts as already extended.
    pub fn new(d: &[i64], z: &[f64], o: &[f64]) -> Self {
        let len = d.len();
        assert!((1..=WARP_SIZE).contains(&len), "group size {len} outside 1..={WARP_SIZE}");
        assert!(z.len() == len && o.len() == len);
        let mut group = LaneGroup {
            len,
            depth: 1,
            d: [0; WARP_SIZE],
            z: [0.0; WARP_SIZE],
            o: [0.0; WARP_SIZE],
            w: [0.0; WARP_SIZE],
            shuffles: 0,
        };
        group.d[..len].copy_from_slice(d);
        group.z[..len].copy_from_slice(z);
        group.o[..len].copy_from_slice(o);
        group.w[0] = 1.0;
        group
    }

    /// Loads `elements` (in the given lane order) for one row.
    pub fn load<'a>(elements: impl IntoIterator<Item = &'a PathElement>, row: &[f64]) -> Self {
        let mut d = [0i64; WARP_SIZE];
        let mut z = [0.0; WARP_SIZE];
        let mut o = [0.0; WARP_SIZE];
        let mut len = 0;
        for e in elements {
            assert!(len < WARP_SIZE, "path longer than {WARP_SIZE} lanes");
            d[len] = e.feature_idx;
            z[len] = e.zero_fraction;
            o[len] = one_fraction(e, row);
            len += 1;
        }
        LaneGroup::new(&d[..len], &z[..len], &o[..len])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn feature(&self, lane: usize) -> i64 {
        self.d[lane]
    }

    pub fn zero_fraction(&self, lane: usize) -> f64 {
        self.z[lane]
    }

    pub fn one_fraction(&self, lane: usize) -> f64 {
        self.o[lane]
    }

    pub fn weights(&self) -> &[f64] {
        &self.w[..self.len]
    }

    /// Total cross-lane exchanges performed so far.
    pub fn shuffles(&self) -> u64 {
        self.shuffles
    }

    /// Every lane `i` receives `register[src(i)]`, or 0 when `src(i)` names
    /// no lane of this group.
    pub fn shuffle(&mut self, register: &Lanes, src: impl Fn(usize) -> isize) -> Lanes {
        self.shuffles += 1;
        let mut out = [0.0; WARP_SIZE];
        for (lane, slot) in out.iter_mut().enumerate().take(self.len) {
            let s = src(lane);
            if (0..self.len as isize).contains(&s) {
                *slot = register[s as usize];
            }
        }
        out
    }

    /// One extend step: lanes `0..=depth` update in lockstep from their own
    /// weight and their left neighbour's.
    pub fn parallel_extend(&mut self, p_z: f64, p_o: f64) {
        let l = self.depth;
        assert!(l < self.len, "all {} lanes already extended", self.len);
        let w = self.w;
        let left = self.shuffle(&w, |lane| lane as isize - 1);
        let denom = (l + 1) as f64;
        for i in 0..=l {
            let own = p_z * w[i] * (l - i) as f64 / denom;
            self.w[i] = own + p_o * left[i] * i as f64 / denom;
        }
        self.depth += 1;
    }

    /// Extends with the element held by lane `depth`, broadcasting its
    /// fractions to the group.
    pub fn extend_next(&mut self) {
        let k = self.depth as isize;
        let (z, o) = (self.z, self.o);
        let p_z = self.shuffle(&z, |_| k)[0];
        let p_o = self.shuffle(&o, |_| k)[0];
        self.parallel_extend(p_z, p_o);
    }

    /// Extends with every remaining lane.
    pub fn extend_all(&mut self) {
        while self.depth < self.len {
            self.extend_next();
        }
    }

    /// Lane `i` (for `i < depth`) gets the weight sum of the extended path
    /// with element `i` unwound. Lanes at or beyond `depth` get 0.
    pub fn parallel_unwound_sum(&mut self) -> Lanes {
        let l = self.depth;
        let lf = l as f64;
        let w = self.w;
        let mut next = self.shuffle(&w, |_| l as isize - 1);
        let mut total = [0.0; WARP_SIZE];
        for j in (0..l - 1).rev() {
            let w_j = self.shuffle(&w, |_| j as isize);
            let rank = (j + 1) as f64;
            let rest = (l - j - 1) as f64;
            for i in 0..l {
                let (z, o) = (self.z[i], self.o[i]);
                if o != 0.0 {
                    let tmp = next[i] * lf / (rank * o);
                    total[i] += tmp;
                    next[i] = w_j[i] - tmp * z * rest / lf;
                } else {
                    total[i] += w_j[i] * lf / (z * rest);
                }
            }
        }
        total
    }
}
