//! Brute-force oracles and random instance generators shared by the
//! integration tests. Every oracle scans definitions directly and shares no
//! code with the library beyond the matrix type.

#![allow(dead_code)]

use ctwm_core::net::InfluenceMatrix;
use ctwm_core::{gen_network, validate_and_normalize, GraphGenConfig};
use rand::seq::SliceRandom;
use rand::Rng;

/// Weighted median by scanning every tuple value against the definition,
/// taking the one closest to `anchor` (smaller on a distance tie).
pub fn brute_median(values: &[f64], weights: &[f64], anchor: f64) -> f64 {
    let mut best: Option<f64> = None;
    for &m in values {
        let below: f64 = values
            .iter()
            .zip(weights)
            .filter(|(v, _)| **v < m)
            .map(|(_, w)| w)
            .sum();
        let above: f64 = values
            .iter()
            .zip(weights)
            .filter(|(v, _)| **v > m)
            .map(|(_, w)| w)
            .sum();
        if below <= 0.5 && above <= 0.5 {
            best = Some(match best {
                None => m,
                Some(b) => {
                    let (db, dm) = ((b - anchor).abs(), (m - anchor).abs());
                    if dm < db || (dm == db && m < b) {
                        m
                    } else {
                        b
                    }
                }
            });
        }
    }
    best.expect("a weighted median always exists")
}

pub fn brute_median_operator(x: &[f64], w: &InfluenceMatrix) -> Vec<f64> {
    (0..w.n()).map(|i| brute_median(x, w.row(i), x[i])).collect()
}

pub fn mask_weight(w: &InfluenceMatrix, i: usize, mask: u64) -> f64 {
    (0..w.n()).filter(|j| mask >> j & 1 == 1).map(|j| w.get(i, j)).sum()
}

pub fn brute_is_cohesive(w: &InfluenceMatrix, mask: u64) -> bool {
    mask != 0
        && (0..w.n())
            .filter(|i| mask >> i & 1 == 1)
            .all(|i| mask_weight(w, i, mask) >= 0.5)
}

/// All cohesive sets as bitmasks, in increasing mask order.
pub fn brute_cohesive_sets(w: &InfluenceMatrix) -> Vec<u64> {
    (1..1u64 << w.n()).filter(|&m| brute_is_cohesive(w, m)).collect()
}

/// Inclusion-minimal cohesive sets.
pub fn brute_minimal_cohesive(w: &InfluenceMatrix) -> Vec<u64> {
    let all = brute_cohesive_sets(w);
    all.iter()
        .copied()
        .filter(|&m| !all.iter().any(|&s| s != m && s & m == s))
        .collect()
}

/// Size of the smallest node set meeting every cohesive set.
pub fn brute_min_hitting(w: &InfluenceMatrix) -> usize {
    let cohesive = brute_cohesive_sets(w);
    (0..1u64 << w.n())
        .filter(|&s| cohesive.iter().all(|&c| c & s != 0))
        .map(|s| s.count_ones() as usize)
        .min()
        .expect("the full set meets every cohesive set")
}

pub fn mask_of(nodes: impl IntoIterator<Item = usize>) -> u64 {
    nodes.into_iter().fold(0, |m, i| m | 1 << i)
}

/// Two-sided signed-rank p-value by enumerating all sign assignments.
pub fn brute_wilcoxon(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = d.len();
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|v| {
            let less = abs.iter().filter(|u| *u < v).count() as f64;
            let equal = abs.iter().filter(|u| *u == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let total: f64 = ranks.iter().sum();
    let w_obs: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let dev = (2.0 * w_obs - total).abs();
    let mut extreme = 0u64;
    for signs in 0..1u64 << n {
        let w: f64 = (0..n).filter(|k| signs >> k & 1 == 1).map(|k| ranks[k]).sum();
        if (2.0 * w - total).abs() >= dev - 1e-9 {
            extreme += 1;
        }
    }
    (w_obs, extreme as f64 / (1u64 << n) as f64)
}

/// Row-stochastic matrix whose weights are multiples of `1/2^k`, so row sums
/// and half-mass comparisons are exact. Exact `1/2` splits are common.
pub fn dyadic_matrix<R: Rng>(rng: &mut R, n: usize) -> InfluenceMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let units = 1u32 << rng.random_range(1..=4);
            let support = rng.random_range(1..=n);
            let mut cols: Vec<usize> = (0..n).collect();
            cols.shuffle(rng);
            let mut row = vec![0.0; n];
            for _ in 0..units {
                row[cols[rng.random_range(0..support)]] += 1.0;
            }
            row.iter().map(|c| c / units as f64).collect()
        })
        .collect();
    InfluenceMatrix::from_rows(&rows).expect("dyadic rows are stochastic")
}

/// Row-stochastic matrix with continuous random weights on a random support.
pub fn continuous_matrix<R: Rng>(rng: &mut R, n: usize) -> InfluenceMatrix {
    let p: f64 = rng.random_range(0.15..0.9);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.random_bool(p) {
                        1.0 - rng.random::<f64>()
                    } else {
                        0.0
                    }
                })
                .collect();
            if row.iter().all(|w| *w == 0.0) {
                row[i] = 1.0;
            }
            row
        })
        .collect();
    validate_and_normalize(&rows).expect("rows have positive mass")
}

/// A random network from one of several families: dyadic, continuous,
/// Erdős–Rényi, or Watts–Strogatz.
pub fn random_network<R: Rng>(rng: &mut R, n: usize) -> InfluenceMatrix {
    match rng.random_range(0..4) {
        0 => dyadic_matrix(rng, n),
        1 => continuous_matrix(rng, n),
        2 => gen_network(&GraphGenConfig::erdos_renyi(
            n,
            rng.random_range(0.15..0.8),
            rng.random(),
        ))
        .unwrap(),
        _ if n >= 5 => {
            let k = if n >= 7 && rng.random_bool(0.5) { 4 } else { 2 };
            gen_network(&GraphGenConfig::watts_strogatz(
                n,
                k,
                rng.random_range(0.0..=1.0),
                rng.random(),
            ))
            .unwrap()
        }
        _ => dyadic_matrix(rng, n),
    }
}

/// Opinion vector with entries drawn from a small grid, so repeated values
/// and exact ties are frequent.
pub fn grid_state<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-3..=3) as f64 * 0.5).collect()
}

pub fn uniform_state<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
