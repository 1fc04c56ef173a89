//! Monte-Carlo sweeps of the minimum pinning number over random networks.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohesion::enumerate_minimal_cohesive;
use crate::control::minimal_pinning_set;
use crate::error::{Error, Result};
use crate::net::{gen_network, GraphGenConfig, GraphModel};

/// Two-sided 95% normal quantile used for the confidence half-width.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub family: GraphModel,
    pub n: usize,
    /// Link probability (Erdős–Rényi) or rewiring probability (Watts–Strogatz) values.
    pub params: Vec<f64>,
    pub replicates: usize,
    /// Ring-lattice out-degree, Watts–Strogatz only.
    pub mean_out_degree: usize,
    pub seed: u64,
    /// Cap on candidate sets examined per cohesive-set enumeration.
    pub enumeration_budget: Option<u64>,
    /// Cap on branch-and-bound nodes per pinning search.
    #[serde(default)]
    pub pinning_budget: Option<u64>,
}

impl SweepConfig {
    pub fn erdos_renyi(n: usize, params: Vec<f64>, replicates: usize, seed: u64) -> Self {
        Self {
            family: GraphModel::ErdosRenyi,
            n,
            params,
            replicates,
            mean_out_degree: 0,
            seed,
            enumeration_budget: None,
            pinning_budget: None,
        }
    }

    pub fn watts_strogatz(n: usize, mean_out_degree: usize, params: Vec<f64>, replicates: usize, seed: u64) -> Self {
        Self {
            family: GraphModel::WattsStrogatz,
            mean_out_degree,
            ..Self::erdos_renyi(n, params, replicates, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::ConfigInvalid("replicates must be at least 1".into()));
        }
        if self.params.is_empty() {
            return Err(Error::ConfigInvalid("no sweep parameters".into()));
        }
        for &p in &self.params {
            self.graph_config(p, 0).validate()?;
        }
        Ok(())
    }

    fn graph_config(&self, p: f64, seed: u64) -> GraphGenConfig {
        GraphGenConfig {
            model: self.family,
            n: self.n,
            p,
            mean_out_degree: self.mean_out_degree,
            seed,
        }
    }

    /// Seed of one replicate: an independent ChaCha stream per
    /// `(param index, replicate index)` under the sweep seed.
    pub fn replicate_seed(&self, param_index: usize, replicate: usize) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((param_index as u64) << 32) | replicate as u64);
        rng.next_u64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator; zero for a single sample).
    pub sd: f64,
    /// `1.96 · sd / √samples`.
    pub ci95: f64,
    /// Replicates whose enumeration hit the budget; excluded from the statistics.
    pub truncated_count: usize,
    /// Replicates entering the statistics.
    pub samples: usize,
    /// Replicates whose pinning search hit its budget (greedy size used).
    pub uncertified_count: usize,
}

impl SweepRow {
    /// Whether the 95% intervals of two rows overlap.
    pub fn ci_overlaps(&self, other: &SweepRow) -> bool {
        (self.mean - other.mean).abs() <= self.ci95 + other.ci95
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// CSV with header `param,mean,sd,ci95,truncated_count`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "param,mean,sd,ci95,truncated_count")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:?},{:?},{:?},{:?},{}",
                r.param, r.mean, r.sd, r.ci95, r.truncated_count
            )?;
        }
        Ok(())
    }

    /// Indices `k` where the mean drops from row `k` to row `k + 1` although
    /// the two confidence intervals do not overlap.
    pub fn significant_decreases(&self) -> Vec<usize> {
        self.rows
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].mean < w[0].mean && !w[0].ci_overlaps(&w[1]))
            .map(|(k, _)| k)
            .collect()
    }
}

enum Outcome {
    Solved { size: usize, certified: bool },
    Truncated,
}

/// Minimum pinning number of one generated network.
fn run_replicate(cfg: &SweepConfig, p: f64, seed: u64) -> Result<Outcome> {
    let w = gen_network(&cfg.graph_config(p, seed))?;
    let report = enumerate_minimal_cohesive(&w, cfg.enumeration_budget)?;
    if !report.complete {
        return Ok(Outcome::Truncated);
    }
    let sol = minimal_pinning_set(&report, cfg.pinning_budget)?;
    Ok(Outcome::Solved {
        size: sol.size,
        certified: sol.certified_optimal,
    })
}

/// Sample mean and standard deviation (`n - 1` denominator).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Runs every `(param, replicate)` pair in parallel and aggregates per param.
/// The result does not depend on the number of worker threads.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.params.len())
        .flat_map(|k| (0..cfg.replicates).map(move |r| (k, r)))
        .collect();
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|&(k, r)| run_replicate(cfg, cfg.params[k], cfg.replicate_seed(k, r)))
        .collect::<Result<_>>()?;

    let rows = cfg
        .params
        .iter()
        .enumerate()
        .map(|(k, &param)| {
            let chunk = &outcomes[k * cfg.replicates..(k + 1) * cfg.replicates];
            let mut sizes = Vec::new();
            let mut truncated_count = 0;
            let mut uncertified_count = 0;
            for o in chunk {
                match *o {
                    Outcome::Solved { size, certified } => {
                        sizes.push(size as f64);
                        if !certified {
                            uncertified_count += 1;
                        }
                    }
                    Outcome::Truncated => truncated_count += 1,
                }
            }
            let (mean, sd) = mean_sd(&sizes);
            let ci95 = Z95 * sd / (sizes.len() as f64).sqrt();
            SweepRow {
                param,
                mean,
                sd,
                ci95,
                truncated_count,
                samples: sizes.len(),
                uncertified_count,
            }
        })
        .collect();
    Ok(SweepResult {
        config: cfg.clone(),
        rows,
    })
}
