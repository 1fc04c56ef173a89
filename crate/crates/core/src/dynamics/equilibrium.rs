use serde::{Deserialize, Serialize};

use crate::cohesion::{is_cohesive, is_maximal_cohesive, NodeSet};
use crate::net::InfluenceMatrix;

/// Distinct opinion levels of a state, largest first, with the nodes
/// holding each level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStatistics {
    /// Strictly decreasing level values (cluster means).
    pub levels: Vec<f64>,
    /// `level_sets[k]` holds the nodes at `levels[k]`; together they partition the nodes.
    pub level_sets: Vec<NodeSet>,
}

impl OrderStatistics {
    /// Number of distinct levels.
    pub fn n_diff(&self) -> usize {
        self.levels.len()
    }

    /// Nodes at the `k`-th largest level, `k` in `1..=n_diff`.
    pub fn order(&self, k: usize) -> &NodeSet {
        &self.level_sets[k - 1]
    }

    /// Nodes at the `r` largest levels; empty for `r = 0`.
    pub fn order_le(&self, r: usize) -> NodeSet {
        self.level_sets[..r.min(self.n_diff())]
            .iter()
            .flat_map(NodeSet::iter)
            .collect()
    }

    /// Nodes at the levels ranked `r` and below (the smallest ones); empty past `n_diff`.
    pub fn order_ge(&self, r: usize) -> NodeSet {
        let start = r.max(1) - 1;
        self.level_sets
            .get(start..)
            .unwrap_or(&[])
            .iter()
            .flat_map(NodeSet::iter)
            .collect()
    }
}

/// Groups the entries of `x` into levels. Sorted values closer than
/// `cluster_tol` to their neighbor share a level (single linkage); with
/// `cluster_tol = 0` only equal values do.
pub fn order_statistics(x: &[f64], cluster_tol: f64) -> OrderStatistics {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut prev = f64::NAN;
    for &i in &idx {
        if groups.is_empty() || prev - x[i] > cluster_tol {
            groups.push(Vec::new());
        }
        groups.last_mut().unwrap().push(i);
        prev = x[i];
    }

    let levels = groups
        .iter()
        .map(|g| g.iter().map(|&i| x[i]).sum::<f64>() / g.len() as f64)
        .collect();
    let level_sets = groups.into_iter().map(NodeSet::new).collect();
    OrderStatistics { levels, level_sets }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Consensus,
    DisagreementEquilibrium,
    NotEquilibrium,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub levels: Vec<f64>,
    pub level_sets: Vec<NodeSet>,
    /// Entry `r - 1` tells whether the nodes at the top `r` levels form a
    /// maximal cohesive set.
    pub prefix_maximal: Vec<bool>,
    pub classification: Classification,
}

/// A state is an equilibrium iff, for every `r`, the nodes holding the `r`
/// largest levels form a maximal cohesive set.
pub fn classify_equilibrium(x: &[f64], w: &InfluenceMatrix, cluster_tol: f64) -> EquilibriumReport {
    let stats = order_statistics(x, cluster_tol);
    let prefix_maximal: Vec<bool> = (1..=stats.n_diff())
        .map(|r| {
            let prefix = stats.order_le(r);
            matches!(is_cohesive(&prefix, w), Ok(true)) && matches!(is_maximal_cohesive(&prefix, w), Ok(true))
        })
        .collect();
    let classification = if stats.n_diff() == 1 {
        Classification::Consensus
    } else if prefix_maximal.iter().all(|&b| b) {
        Classification::DisagreementEquilibrium
    } else {
        Classification::NotEquilibrium
    };
    EquilibriumReport {
        levels: stats.levels,
        level_sets: stats.level_sets,
        prefix_maximal,
        classification,
    }
}
