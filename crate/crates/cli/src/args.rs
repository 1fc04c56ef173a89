//! Command-line flags and their config-file counterparts.
//!
//! Every subcommand option is optional on the command line so that a value
//! from the config file can fill it in; a flag given on the command line
//! always wins.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "ctwm", version, about = "Weighted-median opinion dynamics experiments")]
pub struct Cli {
    /// TOML file with global keys and one table per subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel stages (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Directory receiving output artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random choice made by the command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the dynamics and classify the final state.
    Simulate(SimulateArgs),
    /// List minimal cohesive sets and decisive-link structure.
    Cohesion(CohesionArgs),
    /// Find a minimum pinning set, optionally checking a given one.
    Pinning(PinningArgs),
    /// Sweep the minimum pinning number over random networks.
    Sweep(SweepArgs),
    /// Fit and compare inertia models on estimation data.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Er,
    Ws,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Rk4,
    Euler,
}

/// Fills every `None` field of `$a` from `$b`.
macro_rules! fill {
    ($a:ident, $b:ident; $($f:ident),* $(,)?) => {
        $( if $a.$f.is_none() { $a.$f = $b.$f; } )*
    };
}

/// Network source shared by the matrix-consuming subcommands.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkArgs {
    /// Influence matrix file (`.json`, otherwise dense CSV).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Generate a random network of this family instead of loading one.
    #[arg(long, value_enum)]
    pub model: Option<Family>,
    /// Node count of the generated network.
    #[arg(long)]
    pub n: Option<usize>,
    /// Link probability (er) or rewiring probability (ws).
    #[arg(long)]
    pub p: Option<f64>,
    /// Ring-lattice out-degree (ws).
    #[arg(long)]
    pub degree: Option<usize>,
}

impl NetworkArgs {
    fn merge(&mut self, file: Self) {
        fill!(self, file; matrix, model, n, p, degree);
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub network: NetworkArgs,
    /// Initial opinions, comma separated (default: uniform on [-1, 1]).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub eq_tol: Option<f64>,
    /// Record every k-th step.
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Level-merging tolerance for equilibrium classification.
    #[arg(long)]
    pub cluster_tol: Option<f64>,
    /// Pinned nodes, comma separated; switches to the pinned dynamics.
    #[arg(long, value_delimiter = ',')]
    pub pinned: Option<Vec<usize>>,
    /// Pinning strength on pinned nodes.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// External opinion the pinned nodes are drawn to.
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<f64>,
}

impl SimulateArgs {
    pub fn merge(&mut self, file: Self) {
        self.network.merge(file.network);
        fill!(self, file; x0, step, t_max, eq_tol, stride, method, cluster_tol, pinned, gamma, target);
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CohesionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub network: NetworkArgs,
    /// Cap on candidate sets examined during enumeration.
    #[arg(long)]
    pub limit: Option<u64>,
}

impl CohesionArgs {
    pub fn merge(&mut self, file: Self) {
        self.network.merge(file.network);
        fill!(self, file; limit);
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct PinningArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub network: NetworkArgs,
    /// Node set to check for feasibility, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub pinned: Option<Vec<usize>>,
    /// Cap on candidate sets examined during enumeration.
    #[arg(long)]
    pub limit: Option<u64>,
    /// Cap on branch-and-bound nodes.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Also verify the minimum set by simulating this many random starts.
    #[arg(long)]
    pub verify_trials: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<f64>,
}

impl PinningArgs {
    pub fn merge(&mut self, file: Self) {
        self.network.merge(file.network);
        fill!(self, file; pinned, limit, budget, verify_trials, gamma, target);
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Parameter values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub params: Option<Vec<f64>>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Ring-lattice out-degree (ws).
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub enumeration_budget: Option<u64>,
    #[arg(long)]
    pub pinning_budget: Option<u64>,
}

impl SweepArgs {
    pub fn merge(&mut self, file: Self) {
        fill!(self, file; family, n, params, replicates, degree, enumeration_budget, pinning_budget);
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitArgs {
    /// Estimation CSV (`experiment,participant,question,round,estimate[,scale]`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Leading questions used for fitting.
    #[arg(long)]
    pub train_count: Option<usize>,
    /// End (exclusive) of the held-out question range; defaults to all remaining questions.
    #[arg(long)]
    pub holdout_end: Option<usize>,
    /// Leave each participant's own estimate out of the group aggregate.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub exclude_self: Option<bool>,
}

impl FitArgs {
    pub fn merge(&mut self, file: Self) {
        fill!(self, file; data, train_count, holdout_end, exclude_self);
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub simulate: SimulateArgs,
    pub cohesion: CohesionArgs,
    pub pinning: PinningArgs,
    pub sweep: SweepArgs,
    pub fit: FitArgs,
}

impl FileConfig {
    /// Reads `path`, resolving relative paths inside it against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        rebase(&mut cfg.out);
        rebase(&mut cfg.simulate.network.matrix);
        rebase(&mut cfg.cohesion.network.matrix);
        rebase(&mut cfg.pinning.network.matrix);
        rebase(&mut cfg.fit.data);
        Ok(cfg)
    }
}
