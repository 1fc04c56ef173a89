//! Weighted median with closest-to-anchor tie-breaking.
//!
//! A value `m` taken from the tuple is a weighted median when the weight
//! strictly below `m` and the weight strictly above `m` are each at most
//! one half. The medians always form a contiguous run of the sorted distinct
//! values; when the run has more than one element every interior value
//! carries zero weight, so the median closest to an anchor that is itself
//! one of the values is simply the anchor clamped into the run.
//!
//! Comparisons against one half are exact by default. Weight below a level is
//! accumulated in increasing value order and weight above in decreasing
//! order, so a split such as `0.5 | 0.5` is seen as an exact tie.

use serde::{Deserialize, Serialize};

use crate::dynamics::OpinionState;
use crate::error::{Error, Result};
use crate::net::{InfluenceMatrix, ROW_SUM_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Multiplicity {
    Unique,
    Tie { smallest: f64, largest: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianResult {
    pub value: f64,
    pub multiplicity: Multiplicity,
}

impl MedianResult {
    pub fn is_unique(&self) -> bool {
        matches!(self.multiplicity, Multiplicity::Unique)
    }
}

/// Weighted median of `values` under `weights`, choosing the median closest
/// to `anchor` when several exist (the smaller one on an exact distance tie).
pub fn weighted_median(values: &[f64], weights: &[f64], anchor: f64) -> Result<MedianResult> {
    weighted_median_with_tolerance(values, weights, anchor, 0.0)
}

/// As [`weighted_median`], but a level counts as a median when the mass on
/// either side is at most `1/2 + tol`. Use only for inputs whose weights are
/// known to be perturbed.
pub fn weighted_median_with_tolerance(values: &[f64], weights: &[f64], anchor: f64, tol: f64) -> Result<MedianResult> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: values.len(),
            got: weights.len(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::WeightSumInvalid(sum));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConfigInvalid("values must be finite".into()));
    }

    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
    let (smallest, largest) = median_bounds(&mut pairs, tol);

    let value = if anchor <= smallest {
        smallest
    } else if anchor >= largest {
        largest
    } else if values.contains(&anchor) {
        anchor
    } else {
        // every tuple value inside [smallest, largest] is a median
        values
            .iter()
            .copied()
            .filter(|&v| v >= smallest && v <= largest)
            .min_by(|a, b| (a - anchor).abs().total_cmp(&(b - anchor).abs()).then(a.total_cmp(b)))
            .unwrap_or(smallest)
    };

    let multiplicity = if smallest < largest {
        Multiplicity::Tie { smallest, largest }
    } else {
        Multiplicity::Unique
    };
    Ok(MedianResult { value, multiplicity })
}

/// Smallest and largest weighted median of `(value, weight)` pairs. Sorts
/// `pairs` by value in place.
fn median_bounds(pairs: &mut [(f64, f64)], tol: f64) -> (f64, f64) {
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    let mut levels: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    for &(v, w) in pairs.iter() {
        match levels.last_mut() {
            Some((lv, mass)) if *lv == v => *mass += w,
            _ => levels.push((v, w)),
        }
    }

    let half = 0.5 + tol;
    let k = levels.len();
    let mut above = vec![0.0; k];
    for idx in (0..k.saturating_sub(1)).rev() {
        above[idx] = above[idx + 1] + levels[idx + 1].1;
    }

    let mut below = 0.0;
    let mut first = None;
    let mut last = None;
    for idx in 0..k {
        if below <= half && above[idx] <= half {
            first.get_or_insert(idx);
            last = Some(idx);
        }
        below += levels[idx].1;
    }

    match (first, last) {
        (Some(a), Some(b)) => (levels[a].0, levels[b].0),
        _ => {
            // Only reachable when rounding in the weights hides the exact
            // crossing; fall back to the most balanced level.
            let mut below = 0.0f64;
            let mut best = (f64::INFINITY, 0);
            for idx in 0..k {
                let imbalance = below.max(above[idx]);
                if imbalance < best.0 {
                    best = (imbalance, idx);
                }
                below += levels[idx].1;
            }
            (levels[best.1].0, levels[best.1].0)
        }
    }
}

/// Precomputed per-node out-neighborhoods for repeated evaluation of
/// `Med(x; W)`. Each node only looks at its positive-weight neighbors and
/// then clamps its own opinion into the resulting median run.
#[derive(Debug, Clone)]
pub struct MedianOperator {
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl MedianOperator {
    pub fn new(w: &InfluenceMatrix) -> Self {
        let neighbors = (0..w.n())
            .map(|i| w.out_neighbors(i).map(|j| (j, w.get(i, j))).collect())
            .collect();
        Self { neighbors }
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    /// Writes `Med(x; W)` into `out`. `x` and `out` must have length `n`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let mut scratch = Vec::new();
        for (i, nb) in self.neighbors.iter().enumerate() {
            out[i] = self.component(i, nb, x, &mut scratch);
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<OpinionState> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        Ok(OpinionState::from(out))
    }

    fn component(&self, i: usize, nb: &[(usize, f64)], x: &[f64], scratch: &mut Vec<(f64, f64)>) -> f64 {
        scratch.clear();
        scratch.extend(nb.iter().map(|&(j, w)| (x[j], w)));
        let (lo, hi) = median_bounds(scratch, 0.0);
        x[i].clamp(lo, hi)
    }
}

/// `Med(x; W)`: component `i` is the weighted median of `x` under row `i`
/// of `W`, tie-broken toward `x_i`.
pub fn median_operator(x: &[f64], w: &InfluenceMatrix) -> Result<OpinionState> {
    MedianOperator::new(w).apply(x)
}
