//! Cohesive sets, decisive links and reachability on the decisive graph.
//!
//! A set `M` is cohesive when every member puts at least half of its weight
//! inside `M`, and maximal cohesive when no outsider puts strictly more than
//! half inside. All threshold comparisons are exact: weight exactly one half
//! is meaningful and is never perturbed.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::InfluenceMatrix;

/// Sorted set of zero-based node indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn new(nodes: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = nodes.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn from_mask(mask: u64) -> Self {
        Self((0..64).filter(|b| mask >> b & 1 == 1).collect())
    }

    /// Bitmask form; `None` when some member is 64 or larger.
    pub fn mask(&self) -> Option<u64> {
        self.0.iter().try_fold(0u64, |m, &i| (i < 64).then(|| m | 1 << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.0.binary_search(&node).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn intersects(&self, other: &NodeSet) -> bool {
        self.iter().any(|i| other.contains(i))
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        NodeSet::new(self.iter().chain(other.iter()))
    }

    pub fn complement(&self, n: usize) -> NodeSet {
        NodeSet((0..n).filter(|&i| !self.contains(i)).collect())
    }

    /// Orders by cardinality, then lexicographically.
    pub fn cmp_by_size(&self, other: &NodeSet) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }

    fn check(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= n => Err(Error::NodeOutOfRange { node: last, n }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        NodeSet::new(iter)
    }
}

/// Weight node `i` places on `set`, summed in increasing node order.
#[inline]
pub fn weight_into(w: &InfluenceMatrix, i: usize, set: &NodeSet) -> f64 {
    let row = w.row(i);
    set.iter().fold(0.0, |acc, j| acc + row[j])
}

#[inline]
fn weight_into_mask(row: &[f64], mut mask: u64) -> f64 {
    let mut acc = 0.0;
    while mask != 0 {
        let j = mask.trailing_zeros() as usize;
        acc += row[j];
        mask &= mask - 1;
    }
    acc
}

pub fn is_cohesive(set: &NodeSet, w: &InfluenceMatrix) -> Result<bool> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    set.check(w.n())?;
    Ok(set.iter().all(|i| weight_into(w, i, set) >= 0.5))
}

pub fn is_maximal_cohesive(set: &NodeSet, w: &InfluenceMatrix) -> Result<bool> {
    if !is_cohesive(set, w)? {
        return Err(Error::NotCohesive);
    }
    Ok((0..w.n())
        .filter(|&i| !set.contains(i))
        .all(|i| weight_into(w, i, set) <= 0.5))
}

/// Smallest maximal cohesive superset of a cohesive `set`: keeps adding any
/// outsider that puts more than half its weight inside.
pub fn cohesive_closure(set: &NodeSet, w: &InfluenceMatrix) -> Result<NodeSet> {
    if !is_cohesive(set, w)? {
        return Err(Error::NotCohesive);
    }
    Ok(closure_unchecked(set.clone(), w))
}

fn closure_unchecked(mut set: NodeSet, w: &InfluenceMatrix) -> NodeSet {
    loop {
        let joiner = (0..w.n()).find(|&i| !set.contains(i) && weight_into(w, i, &set) > 0.5);
        match joiner {
            Some(i) => set = set.union(&NodeSet(vec![i])),
            None => return set,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohesionReport {
    /// Inclusion-minimal cohesive sets, ordered by size then lexicographically.
    pub minimal_cohesive_sets: Vec<NodeSet>,
    /// Whether the full node set is the only maximal cohesive set.
    pub only_global_maximal: bool,
    /// False when the enumeration budget ran out; the list may then be partial.
    pub complete: bool,
}

impl CohesionReport {
    /// A proper maximal cohesive set, if one exists: the closure of the first
    /// minimal cohesive set whose closure is not the whole network.
    pub fn proper_maximal_set(&self, w: &InfluenceMatrix) -> Option<NodeSet> {
        self.minimal_cohesive_sets
            .iter()
            .map(|c| closure_unchecked(c.clone(), w))
            .find(|m| m.len() < w.n())
    }
}

/// Enumerates the inclusion-minimal cohesive sets.
///
/// Candidates are grown breadth-first by cardinality from each seed node,
/// which is kept as the smallest member. A non-cohesive candidate is extended
/// only through out-neighbors of one deficient member, drawn from the
/// largest cohesive subset of nodes not below the seed. Candidates that
/// contain an already-found minimal set are dropped, so every cohesive
/// candidate reached is minimal. `limit` caps the number of candidates
/// examined; when it is hit the report is marked incomplete.
///
/// The full node set is the only maximal cohesive set exactly when every
/// minimal cohesive set has the whole network as its closure.
pub fn enumerate_minimal_cohesive(w: &InfluenceMatrix, limit: Option<u64>) -> Result<CohesionReport> {
    let n = w.n();
    if n > 64 {
        return Err(Error::TooManyNodes(n));
    }
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let neighbor_masks: Vec<u64> = (0..n)
        .map(|i| w.out_neighbors(i).fold(0u64, |m, j| m | 1 << j))
        .collect();

    // pools[s]: union of all cohesive sets inside {s, .., n-1}
    let pools: Vec<u64> = (0..n)
        .map(|s| {
            let mut pool = full & !((1u64 << s) - 1);
            loop {
                let weak = (0..n).find(|&i| pool >> i & 1 == 1 && weight_into_mask(w.row(i), pool) < 0.5);
                match weak {
                    Some(i) => pool &= !(1 << i),
                    None => break pool,
                }
            }
        })
        .collect();

    let mut minimal: Vec<u64> = Vec::new();
    let mut frontier: BTreeSet<u64> = (0..n).filter(|&s| pools[s] >> s & 1 == 1).map(|s| 1u64 << s).collect();
    let mut explored: u64 = 0;
    let mut complete = true;

    'levels: while !frontier.is_empty() {
        let mut next = BTreeSet::new();
        let found_before = minimal.len();
        for &mask in &frontier {
            if limit.is_some_and(|l| explored >= l) {
                complete = false;
                break 'levels;
            }
            explored += 1;
            if minimal[..found_before].iter().any(|&c| c & !mask == 0) {
                continue;
            }
            let mut deficient = None;
            let mut best_options = u32::MAX;
            let pool = pools[mask.trailing_zeros() as usize];
            let mut m = mask;
            while m != 0 {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                if weight_into_mask(w.row(i), mask) < 0.5 {
                    let options = neighbor_masks[i] & pool & !mask;
                    if options.count_ones() < best_options {
                        best_options = options.count_ones();
                        deficient = Some(options);
                    }
                }
            }
            match deficient {
                None => minimal.push(mask),
                Some(mut options) => {
                    while options != 0 {
                        let j = options.trailing_zeros();
                        options &= options - 1;
                        next.insert(mask | 1 << j);
                    }
                }
            }
        }
        frontier = next;
    }

    let mut sets: Vec<NodeSet> = minimal.into_iter().map(NodeSet::from_mask).collect();
    sets.sort_by(NodeSet::cmp_by_size);
    let only_global_maximal = sets.iter().all(|c| closure_unchecked(c.clone(), w).len() == n);
    if !complete {
        log::warn!("cohesive-set enumeration stopped after {explored} candidates");
    }
    Ok(CohesionReport {
        minimal_cohesive_sets: sets,
        only_global_maximal,
        complete,
    })
}

/// Subgraph of `G(W)` keeping only decisive links.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisiveGraph {
    pub n: usize,
    pub edges: BTreeSet<(usize, usize)>,
}

impl DecisiveGraph {
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
        }
        adj
    }
}

/// Largest out-degree handled by plain subset enumeration.
const BRUTE_FORCE_DEGREE: usize = 20;
/// Largest out-degree handled at all (meet-in-the-middle above the brute-force limit).
pub const MAX_DECISIVE_DEGREE: usize = 25;

/// Decisive links of `W`. Link `(i, j)` is decisive when some subset `θ` of
/// `i`'s out-neighbors containing `j` carries more than half of `i`'s weight
/// while `θ` without `j` carries less than half.
pub fn decisive_links(w: &InfluenceMatrix) -> Result<DecisiveGraph> {
    let mut edges = BTreeSet::new();
    for i in 0..w.n() {
        let nb: Vec<(usize, f64)> = w.out_neighbors(i).map(|j| (j, w.get(i, j))).collect();
        let d = nb.len();
        if d > MAX_DECISIVE_DEGREE {
            return Err(Error::DegreeTooLarge {
                node: i,
                degree: d,
                limit: MAX_DECISIVE_DEGREE,
            });
        }
        let weights: Vec<f64> = nb.iter().map(|&(_, x)| x).collect();
        let decisive = if d <= BRUTE_FORCE_DEGREE {
            decisive_by_subset_sums(&weights)
        } else {
            decisive_meet_in_middle(&weights)
        };
        for (k, &(j, _)) in nb.iter().enumerate() {
            if decisive[k] {
                edges.insert((i, j));
            }
        }
    }
    Ok(DecisiveGraph { n: w.n(), edges })
}

fn decisive_by_subset_sums(weights: &[f64]) -> Vec<bool> {
    let d = weights.len();
    let mut sums = vec![0.0f64; 1 << d];
    for m in 1usize..(1 << d) {
        let low = m.trailing_zeros() as usize;
        sums[m] = sums[m & (m - 1)] + weights[low];
    }
    (0..d)
        .map(|k| {
            let bit = 1usize << k;
            (0..(1usize << d)).any(|m| m & bit == 0 && sums[m] < 0.5 && sums[m | bit] > 0.5)
        })
        .collect()
}

fn subset_sums(weights: &[f64]) -> Vec<f64> {
    let mut sums = vec![0.0f64; 1 << weights.len()];
    for m in 1usize..sums.len() {
        sums[m] = sums[m & (m - 1)] + weights[m.trailing_zeros() as usize];
    }
    sums
}

fn decisive_meet_in_middle(weights: &[f64]) -> Vec<bool> {
    (0..weights.len())
        .map(|k| {
            let wj = weights[k];
            let others: Vec<f64> = weights
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, &x)| x)
                .collect();
            let (left, right) = others.split_at(others.len() / 2);
            let a_sums = subset_sums(left);
            let mut b_sums = subset_sums(right);
            b_sums.sort_unstable_by(f64::total_cmp);
            // for each a, the largest b with a + b < 1/2 maximizes a + b + w_j
            a_sums.iter().any(|&a| {
                let idx = b_sums.partition_point(|&b| a + b < 0.5);
                idx > 0 && (a + b_sums[idx - 1]) + wj > 0.5
            })
        })
        .collect()
}

/// Strongly connected components (iterative Tarjan). Returns the component
/// id of every node; ids are assigned in reverse topological order.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut n_comp = 0;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < adj[v].len() {
                let u = adj[v][*next];
                *next += 1;
                if index[u] == UNSEEN {
                    index[u] = counter;
                    low[u] = counter;
                    counter += 1;
                    stack.push(u);
                    on_stack[u] = true;
                    call.push((u, 0));
                } else if on_stack[u] {
                    low[v] = low[v].min(index[u]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let u = stack.pop().expect("tarjan stack");
                        on_stack[u] = false;
                        comp[u] = n_comp;
                        if u == v {
                            break;
                        }
                    }
                    n_comp += 1;
                }
            }
        }
    }
    comp
}

/// Nodes reachable from every node: the members of the unique sink
/// component of the condensation, or empty when there are several sinks.
pub fn globally_reachable_nodes(g: &DecisiveGraph) -> NodeSet {
    let adj = g.successors();
    let comp = strongly_connected_components(&adj);
    let n_comp = comp.iter().map(|c| c + 1).max().unwrap_or(0);
    let mut is_sink = vec![true; n_comp];
    for &(i, j) in &g.edges {
        if comp[i] != comp[j] {
            is_sink[comp[i]] = false;
        }
    }
    let sinks: HashSet<usize> = (0..n_comp).filter(|&c| is_sink[c]).collect();
    if sinks.len() != 1 {
        return NodeSet::default();
    }
    (0..g.n).filter(|&i| sinks.contains(&comp[i])).collect()
}

/// True iff the condensation of `g` has exactly one sink component.
pub fn has_globally_reachable_node(g: &DecisiveGraph) -> bool {
    !globally_reachable_nodes(g).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::validate_and_normalize;

    fn three_node() -> InfluenceMatrix {
        validate_and_normalize(&[vec![0.4, 0.2, 0.4], vec![0.0, 1.0, 0.0], vec![0.3, 0.3, 0.4]]).unwrap()
    }

    fn set(v: &[usize]) -> NodeSet {
        NodeSet::new(v.iter().copied())
    }

    #[test]
    fn cohesive_predicates_on_three_node_matrix() {
        let w = three_node();
        assert!(is_cohesive(&set(&[0, 2]), &w).unwrap());
        assert!(is_cohesive(&NodeSet::full(3), &w).unwrap());
        assert!(!is_cohesive(&set(&[0]), &w).unwrap());
        assert!(is_maximal_cohesive(&set(&[0, 2]), &w).unwrap());
        assert!(is_maximal_cohesive(&set(&[1]), &w).unwrap());
        assert!(is_maximal_cohesive(&NodeSet::full(3), &w).unwrap());
        assert!(matches!(is_maximal_cohesive(&set(&[0]), &w), Err(Error::NotCohesive)));
        assert!(matches!(is_cohesive(&NodeSet::default(), &w), Err(Error::EmptySet)));
        assert!(matches!(
            is_cohesive(&set(&[3]), &w),
            Err(Error::NodeOutOfRange { node: 3, n: 3 })
        ));
    }

    #[test]
    fn closure() {
        let w = three_node();
        assert_eq!(cohesive_closure(&set(&[0, 2]), &w).unwrap(), set(&[0, 2]));
        assert_eq!(cohesive_closure(&NodeSet::full(3), &w).unwrap(), NodeSet::full(3));
        let chain = validate_and_normalize(&[vec![0.6, 0.4, 0.0], vec![0.6, 0.2, 0.2], vec![0.0, 0.4, 0.6]]).unwrap();
        assert_eq!(cohesive_closure(&set(&[0]), &chain).unwrap(), set(&[0, 1]));
        assert!(matches!(
            cohesive_closure(&set(&[2]), &three_node()),
            Err(Error::NotCohesive)
        ));
    }

    #[test]
    fn enumeration_examples() {
        let r = enumerate_minimal_cohesive(&three_node(), None).unwrap();
        assert_eq!(r.minimal_cohesive_sets, vec![set(&[1]), set(&[0, 2])]);
        assert!(!r.only_global_maximal);
        assert!(r.complete);

        let r = enumerate_minimal_cohesive(&InfluenceMatrix::uniform(3), None).unwrap();
        assert_eq!(r.minimal_cohesive_sets, vec![set(&[0, 1]), set(&[0, 2]), set(&[1, 2])]);
        assert!(r.only_global_maximal);

        let r = enumerate_minimal_cohesive(&InfluenceMatrix::identity(1), None).unwrap();
        assert_eq!(r.minimal_cohesive_sets, vec![set(&[0])]);
        assert!(r.only_global_maximal);
    }

    #[test]
    fn enumeration_budget() {
        let r = enumerate_minimal_cohesive(&InfluenceMatrix::uniform(6), Some(3)).unwrap();
        assert!(!r.complete);
    }

    #[test]
    fn report_json_shape() {
        let r = enumerate_minimal_cohesive(&three_node(), None).unwrap();
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"minimal_cohesive_sets":[[1],[0,2]],"only_global_maximal":false,"complete":true}"#
        );
    }

    #[test]
    fn decisive_examples() {
        let g = decisive_links(&three_node()).unwrap();
        assert!(g.edges.contains(&(0, 1)));
        assert!(g.edges.contains(&(1, 1)));

        let w = validate_and_normalize(&[vec![0.0, 0.5, 0.5], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let g = decisive_links(&w).unwrap();
        assert!(!g.edges.contains(&(0, 1)));
        assert!(!g.edges.contains(&(0, 2)));
    }

    /// Integer weights scaled by a power of two, so every subset sum is exact.
    fn dyadic_weights(rng: &mut rand_chacha::ChaCha8Rng, d: usize) -> Vec<f64> {
        use rand::Rng;
        let mut ints: Vec<u64> = (0..d - 1).map(|_| rng.random_range(1..=8)).collect();
        let partial: u64 = ints.iter().sum();
        let total = (partial + 1).next_power_of_two();
        ints.push(total - partial);
        ints.iter().map(|&k| k as f64 / total as f64).collect()
    }

    #[test]
    fn meet_in_middle_agrees_with_subset_sums() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for d in 2..=14 {
            for _ in 0..20 {
                let w = dyadic_weights(&mut rng, d);
                assert_eq!(decisive_by_subset_sums(&w), decisive_meet_in_middle(&w), "{w:?}");
            }
        }
        let w = dyadic_weights(&mut rng, 21);
        assert_eq!(decisive_by_subset_sums(&w), decisive_meet_in_middle(&w));
    }

    #[test]
    fn degree_limit() {
        let w = InfluenceMatrix::uniform(26);
        assert!(matches!(
            decisive_links(&w),
            Err(Error::DegreeTooLarge { degree: 26, .. })
        ));
        // degree 22 takes the meet-in-the-middle path; 16 links of 1/32 and
        // 6 of 1/12 are all decisive
        let mut rows = vec![vec![0.0; 22]; 22];
        for (i, row) in rows.iter_mut().enumerate() {
            if i == 0 {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = if j < 16 { 1.0 / 32.0 } else { 1.0 / 12.0 };
                }
            } else {
                row[i] = 1.0;
            }
        }
        let w = crate::net::validate_and_normalize(&rows).unwrap();
        let g = decisive_links(&w).unwrap();
        assert_eq!(g.edges.iter().filter(|e| e.0 == 0).count(), 22);
    }

    fn graph(n: usize, edges: &[(usize, usize)]) -> DecisiveGraph {
        DecisiveGraph {
            n,
            edges: edges.iter().copied().collect(),
        }
    }

    #[test]
    fn reachability_examples() {
        let complete: Vec<(usize, usize)> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).collect();
        assert!(has_globally_reachable_node(&graph(3, &complete)));
        assert!(!has_globally_reachable_node(&graph(
            4,
            &[(0, 1), (1, 0), (2, 3), (3, 2)]
        )));
        let path = graph(3, &[(0, 1), (1, 2)]);
        assert!(has_globally_reachable_node(&path));
        assert_eq!(globally_reachable_nodes(&path), set(&[2]));
    }
}
