//! Pinning controllability and minimum pinning sets.
//!
//! Pinning drives the group to consensus at the target from every initial
//! state exactly when every cohesive set contains a pinned node. Since every
//! cohesive set contains a minimal one, it suffices to hit the minimal
//! cohesive sets, and the smallest such pinning set is a minimum hitting set
//! over that family.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cohesion::{CohesionReport, NodeSet};
use crate::dynamics::{integrate, IntegratorConfig, PinnedField, PinningConfig};
use crate::error::{Error, Result};
use crate::net::InfluenceMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinningSolution {
    pub pinned: NodeSet,
    pub size: usize,
    /// True when the search finished, so no smaller pinning set exists.
    pub certified_optimal: bool,
    /// A minimal cohesive set the pinned nodes miss, when checking an infeasible set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncovered_witness: Option<NodeSet>,
}

/// Whether `pinned` meets every minimal cohesive set; otherwise returns the
/// first one it misses.
pub fn pinning_feasible(pinned: &NodeSet, report: &CohesionReport) -> Result<(bool, Option<NodeSet>)> {
    if !report.complete {
        return Err(Error::IncompleteReport);
    }
    match report.minimal_cohesive_sets.iter().find(|c| !c.intersects(pinned)) {
        Some(missed) => Ok((false, Some(missed.clone()))),
        None => Ok((true, None)),
    }
}

/// Smallest node set meeting every minimal cohesive set.
///
/// A greedy cover gives the initial bound; branch-and-bound then branches on
/// the smallest uncovered set and prunes with a disjoint-packing lower bound.
/// `budget` caps the number of search nodes; when exhausted the best set
/// found so far is returned with `certified_optimal = false`.
pub fn minimal_pinning_set(report: &CohesionReport, budget: Option<u64>) -> Result<PinningSolution> {
    if !report.complete {
        return Err(Error::IncompleteReport);
    }
    let sets: Vec<Vec<usize>> = report
        .minimal_cohesive_sets
        .iter()
        .map(|s| s.as_slice().to_vec())
        .collect();
    let n_nodes = sets.iter().flatten().map(|&i| i + 1).max().unwrap_or(0);

    let greedy = greedy_cover(&sets, n_nodes);
    let mut search = Search {
        sets: &sets,
        best: greedy,
        visited: 0,
        budget: budget.unwrap_or(u64::MAX),
        exhausted: false,
    };
    let mut chosen = Vec::new();
    let mut covered = vec![false; sets.len()];
    search.branch(&mut chosen, &mut covered);

    let pinned = NodeSet::new(search.best.iter().copied());
    Ok(PinningSolution {
        size: pinned.len(),
        pinned,
        certified_optimal: !search.exhausted,
        uncovered_witness: None,
    })
}

fn greedy_cover(sets: &[Vec<usize>], n_nodes: usize) -> Vec<usize> {
    let mut covered = vec![false; sets.len()];
    let mut chosen = Vec::new();
    loop {
        let mut counts = vec![0usize; n_nodes];
        for (s, set) in sets.iter().enumerate() {
            if !covered[s] {
                for &i in set {
                    counts[i] += 1;
                }
            }
        }
        // most uncovered sets; lowest index on ties
        let Some((node, &best)) = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        else {
            break;
        };
        if best == 0 {
            break;
        }
        chosen.push(node);
        for (s, set) in sets.iter().enumerate() {
            if set.contains(&node) {
                covered[s] = true;
            }
        }
    }
    chosen.sort_unstable();
    chosen
}

struct Search<'a> {
    sets: &'a [Vec<usize>],
    best: Vec<usize>,
    visited: u64,
    budget: u64,
    exhausted: bool,
}

impl Search<'_> {
    fn branch(&mut self, chosen: &mut Vec<usize>, covered: &mut [bool]) {
        if self.visited >= self.budget {
            self.exhausted = true;
            return;
        }
        self.visited += 1;

        let uncovered: Vec<usize> = (0..self.sets.len()).filter(|&s| !covered[s]).collect();
        if uncovered.is_empty() {
            let mut candidate = chosen.clone();
            candidate.sort_unstable();
            if candidate.len() < self.best.len() || (candidate.len() == self.best.len() && candidate < self.best) {
                self.best = candidate;
            }
            return;
        }
        // equal size is still explored so that the lexicographically
        // smallest optimum wins
        if chosen.len() + self.packing_bound(&uncovered) > self.best.len() {
            return;
        }

        let pivot = *uncovered
            .iter()
            .min_by_key(|&&s| (self.sets[s].len(), s))
            .expect("non-empty");
        for &node in &self.sets[pivot] {
            let newly: Vec<usize> = uncovered
                .iter()
                .copied()
                .filter(|&s| self.sets[s].contains(&node))
                .collect();
            for &s in &newly {
                covered[s] = true;
            }
            chosen.push(node);
            self.branch(chosen, covered);
            chosen.pop();
            for &s in &newly {
                covered[s] = false;
            }
            if self.exhausted {
                return;
            }
        }
    }

    /// Size of a greedy family of pairwise-disjoint uncovered sets; each needs its own node.
    fn packing_bound(&self, uncovered: &[usize]) -> usize {
        let mut order: Vec<usize> = uncovered.to_vec();
        order.sort_by_key(|&s| (self.sets[s].len(), s));
        let mut used: Vec<usize> = Vec::new();
        let mut count = 0;
        for s in order {
            if self.sets[s].iter().all(|i| !used.contains(i)) {
                used.extend_from_slice(&self.sets[s]);
                count += 1;
            }
        }
        count
    }
}

/// Integration settings for pinning verification runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub integrator: IntegratorConfig,
    /// Half-width of the uniform box around the target for initial states.
    pub spread: f64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default().with_t_max(200.0),
            spread: 5.0,
            seed: 0,
        }
    }
}

/// Distance of the final state from the target after integrating the pinned
/// dynamics from `x0`.
pub fn pinned_final_distance(
    w: &InfluenceMatrix,
    cfg: &PinningConfig,
    x0: &[f64],
    integrator: &IntegratorConfig,
) -> Result<f64> {
    let field = PinnedField::new(w, cfg)?;
    let tr = integrate(x0, &field, integrator)?;
    Ok(tr.final_state().iter().fold(0.0, |m, &v| m.max((v - cfg.target).abs())))
}

/// Fraction of `trials` random initial states in `[u - spread, u + spread]^n`
/// from which the pinned dynamics end within `tol` of `u·1` (sup norm).
pub fn verify_pinning_by_simulation(
    w: &InfluenceMatrix,
    cfg: &PinningConfig,
    trials: usize,
    tol: f64,
    verify: &VerifyConfig,
) -> Result<f64> {
    cfg.validate(w.n())?;
    if trials == 0 {
        return Err(Error::ConfigInvalid("trials must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(verify.seed);
    let u = cfg.target;
    let mut hits = 0;
    for _ in 0..trials {
        let x0: Vec<f64> = (0..w.n())
            .map(|_| u + rng.random_range(-verify.spread..=verify.spread))
            .collect();
        if pinned_final_distance(w, cfg, &x0, &verify.integrator)? < tol {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
