//! Coarse-to-fine interval discretization.
//!
//! Every action dimension starts from its bounds and is zoomed `levels` times:
//! partition the current interval into `bins` equal bins, pick one, and
//! continue inside it. A [`BinPath`] records the picks and decodes back to the
//! centroid reached at each level.
//!
//! Bins are half-open `[lo, hi)` except the last bin of a partition, which is
//! closed on top, so every point of a closed interval has exactly one owner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpaceSpec {
    pub dims: usize,
    pub levels: usize,
    pub bins: usize,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl ActionSpaceSpec {
    /// Spec with the default `[-1, 1]` bounds on every dimension.
    pub fn new(dims: usize, levels: usize, bins: usize) -> Result<Self> {
        Self::with_bounds(levels, bins, vec![-1.0; dims], vec![1.0; dims])
    }

    pub fn with_bounds(levels: usize, bins: usize, low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        let spec = ActionSpaceSpec {
            dims: low.len(),
            levels,
            bins,
            low,
            high,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(Error::InvalidSpec("at least one dimension required".into()));
        }
        if self.levels == 0 {
            return Err(Error::InvalidSpec("at least one level required".into()));
        }
        if self.bins < 2 {
            return Err(Error::InvalidSpec(format!("bins must be >= 2, got {}", self.bins)));
        }
        if self.low.len() != self.dims || self.high.len() != self.dims {
            return Err(Error::InvalidSpec("bounds do not match dims".into()));
        }
        for (n, (lo, hi)) in self.low.iter().zip(&self.high).enumerate() {
            if !(lo < hi) {
                return Err(Error::InvalidSpec(format!(
                    "dimension {n}: low {lo} must be below high {hi}"
                )));
            }
        }
        Ok(())
    }

    pub fn bounds(&self, dim: usize) -> Interval {
        Interval::new(self.low[dim], self.high[dim])
    }

    /// Number of distinct final bins per dimension, `bins^levels`.
    pub fn resolution(&self) -> u64 {
        (self.bins as u64).pow(self.levels as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn new(low: f64, high: f64) -> Self {
        debug_assert!(low <= high, "interval [{low}, {high}] is reversed");
        Interval { low, high }
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn centroid(&self) -> f64 {
        0.5 * (self.low + self.high)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.low <= other.low && other.high <= self.high
    }
}

/// Split `iv` into `bins` contiguous equal-width bins.
pub fn partition_interval(iv: Interval, bins: usize) -> Result<Vec<Interval>> {
    check_interval(iv, bins)?;
    Ok((0..bins).map(|k| bin_of(iv, k, bins)).collect())
}

/// The `bin_index`-th bin of `partition_interval(iv, bins)`.
pub fn zoom_interval(iv: Interval, bin_index: usize, bins: usize) -> Result<Interval> {
    check_interval(iv, bins)?;
    if bin_index >= bins {
        return Err(Error::BinOutOfRange {
            index: bin_index,
            bins,
        });
    }
    Ok(bin_of(iv, bin_index, bins))
}

fn check_interval(iv: Interval, bins: usize) -> Result<()> {
    if bins < 2 {
        return Err(Error::InvalidSpec(format!("bins must be >= 2, got {bins}")));
    }
    if !(iv.low < iv.high) {
        return Err(Error::EmptyInterval {
            low: iv.low,
            high: iv.high,
        });
    }
    Ok(())
}

// Endpoints are computed from `k` directly so adjacent bins share bit-identical
// boundaries; the top bin reuses `iv.high` to keep the cover exact.
fn bin_of(iv: Interval, k: usize, bins: usize) -> Interval {
    let w = (iv.high - iv.low) / bins as f64;
    let lo = iv.low + k as f64 * w;
    let hi = if k + 1 == bins {
        iv.high
    } else {
        iv.low + (k + 1) as f64 * w
    };
    Interval::new(lo, hi)
}

/// Index of the bin of `iv` that owns `x` (x is assumed inside `iv`).
pub fn containing_bin(iv: Interval, x: f64, bins: usize) -> usize {
    let w = (iv.high - iv.low) / bins as f64;
    let mut k = (((x - iv.low) / w).floor().max(0.0) as usize).min(bins - 1);
    // Settle floor() rounding against the exact boundaries used by bin_of.
    while k > 0 && x < bin_of(iv, k, bins).low {
        k -= 1;
    }
    while k + 1 < bins && x >= bin_of(iv, k + 1, bins).low {
        k += 1;
    }
    k
}

/// Per-level, per-dimension bin indices: the discrete identity of an action.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinPath {
    levels: usize,
    dims: usize,
    digits: Vec<usize>,
}

impl BinPath {
    pub fn new(levels: usize, dims: usize, digits: Vec<usize>) -> Result<Self> {
        if digits.len() != levels * dims {
            return Err(Error::shape(
                format!("{levels}x{dims} digits"),
                format!("{} digits", digits.len()),
            ));
        }
        Ok(BinPath {
            levels,
            dims,
            digits,
        })
    }

    pub fn zeros(levels: usize, dims: usize) -> Self {
        BinPath {
            levels,
            dims,
            digits: vec![0; levels * dims],
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn get(&self, level: usize, dim: usize) -> usize {
        self.digits[level * self.dims + dim]
    }

    pub fn set(&mut self, level: usize, dim: usize, bin: usize) {
        self.digits[level * self.dims + dim] = bin;
    }

    pub fn level(&self, level: usize) -> &[usize] {
        &self.digits[level * self.dims..(level + 1) * self.dims]
    }

    /// Digits of one dimension, coarsest first.
    pub fn dim_digits(&self, dim: usize) -> Vec<usize> {
        (0..self.levels).map(|l| self.get(l, dim)).collect()
    }

    pub fn digits(&self) -> &[usize] {
        &self.digits
    }

    fn check(&self, spec: &ActionSpaceSpec) -> Result<()> {
        if self.levels != spec.levels || self.dims != spec.dims {
            return Err(Error::shape(
                format!("{}x{} path", spec.levels, spec.dims),
                format!("{}x{} path", self.levels, self.dims),
            ));
        }
        if let Some(&d) = self.digits.iter().find(|&&d| d >= spec.bins) {
            return Err(Error::BinOutOfRange {
                index: d,
                bins: spec.bins,
            });
        }
        Ok(())
    }
}

/// Centroid chosen at each level; row `l` is the action after `l + 1` zooms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelActions {
    levels: usize,
    dims: usize,
    actions: Vec<f64>,
}

impl LevelActions {
    pub fn zeros(levels: usize, dims: usize) -> Self {
        LevelActions {
            levels,
            dims,
            actions: vec![0.0; levels * dims],
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn level(&self, level: usize) -> &[f64] {
        &self.actions[level * self.dims..(level + 1) * self.dims]
    }

    pub fn level_mut(&mut self, level: usize) -> &mut [f64] {
        &mut self.actions[level * self.dims..(level + 1) * self.dims]
    }

    /// The action that conditions `level`: the zero vector for the first
    /// level, otherwise the previous level's centroids.
    pub fn previous(&self, level: usize) -> Vec<f64> {
        if level == 0 {
            vec![0.0; self.dims]
        } else {
            self.level(level - 1).to_vec()
        }
    }

    /// The executable action.
    pub fn last(&self) -> &[f64] {
        self.level(self.levels - 1)
    }
}

/// Per-dimension intervals of an in-progress zoom.
#[derive(Debug, Clone)]
pub struct ZoomState {
    bins: usize,
    intervals: Vec<Interval>,
}

impl ZoomState {
    pub fn new(spec: &ActionSpaceSpec) -> Self {
        ZoomState {
            bins: spec.bins,
            intervals: (0..spec.dims).map(|n| spec.bounds(n)).collect(),
        }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// Zoom every dimension into the chosen bin, returning the new centroids.
    pub fn zoom(&mut self, bins_chosen: &[usize]) -> Result<Vec<f64>> {
        if bins_chosen.len() != self.intervals.len() {
            return Err(Error::shape(self.intervals.len(), bins_chosen.len()));
        }
        let mut centroids = Vec::with_capacity(self.intervals.len());
        for (iv, &k) in self.intervals.iter_mut().zip(bins_chosen) {
            *iv = zoom_interval(*iv, k, self.bins)?;
            centroids.push(iv.centroid());
        }
        Ok(centroids)
    }

    /// Bins owning `action` at the current level (one per dimension).
    pub fn locate(&self, action: &[f64]) -> Vec<usize> {
        self.intervals
            .iter()
            .zip(action)
            .map(|(iv, &x)| containing_bin(*iv, x.clamp(iv.low, iv.high), self.bins))
            .collect()
    }
}

/// Clamp `action` into the spec bounds and find its bin path.
pub fn encode_action(action: &[f64], spec: &ActionSpaceSpec) -> Result<BinPath> {
    if action.len() != spec.dims {
        return Err(Error::shape(spec.dims, action.len()));
    }
    if action.iter().any(|x| x.is_nan()) {
        return Err(Error::NotANumber("action"));
    }
    let clamped: Vec<f64> = action
        .iter()
        .enumerate()
        .map(|(n, x)| x.clamp(spec.low[n], spec.high[n]))
        .collect();
    let mut zoom = ZoomState::new(spec);
    let mut path = BinPath::zeros(spec.levels, spec.dims);
    for l in 0..spec.levels {
        let bins = zoom.locate(&clamped);
        for (n, &k) in bins.iter().enumerate() {
            path.set(l, n, k);
        }
        zoom.zoom(&bins)?;
    }
    Ok(path)
}

pub fn decode_path(path: &BinPath, spec: &ActionSpaceSpec) -> Result<LevelActions> {
    path.check(spec)?;
    let mut zoom = ZoomState::new(spec);
    let mut out = LevelActions::zeros(spec.levels, spec.dims);
    for l in 0..spec.levels {
        let centroids = zoom.zoom(path.level(l))?;
        out.level_mut(l).copy_from_slice(&centroids);
    }
    Ok(out)
}

/// Width of a final-level bin per dimension, `(high - low) / bins^levels`.
pub fn final_precision(spec: &ActionSpaceSpec) -> Vec<f64> {
    let denom = (spec.bins as f64).powi(spec.levels as i32);
    spec.low
        .iter()
        .zip(&spec.high)
        .map(|(lo, hi)| (hi - lo) / denom)
        .collect()
}
