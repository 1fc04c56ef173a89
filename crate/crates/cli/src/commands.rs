use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use ctwm_core::cohesion::{decisive_links, globally_reachable_nodes, DecisiveGraph};
use ctwm_core::control::VerifyConfig;
use ctwm_core::dynamics::Method;
use ctwm_core::empirical::{load_dataset, ComparisonReport};
use ctwm_core::net::save_matrix_with_meta;
use ctwm_core::{
    classify_equilibrium, compare_models, enumerate_minimal_cohesive, gen_network, integrate, load_matrix,
    minimal_pinning_set, pinning_feasible, run_sweep, verify_pinning_by_simulation, CohesionReport, CtwmField,
    EquilibriumReport, GraphGenConfig, InfluenceMatrix, IntegratorConfig, NodeSet, PinnedField, PinningConfig,
    PinningSolution, SweepConfig, SweepRow,
};
use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{CohesionArgs, Family, FitArgs, MethodArg, NetworkArgs, PinningArgs, SimulateArgs, SweepArgs};
use crate::output::{emit, Metadata, OutputDir};

/// Default pinning strength on pinned nodes.
const DEFAULT_GAMMA: f64 = 0.5;
const DEFAULT_CLUSTER_TOL: f64 = 1e-5;

/// Outcome of a command that ran to completion.
pub enum Status {
    Done,
    NotConverged,
}

pub struct RunContext {
    pub seed: u64,
    pub out: OutputDir,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
enum NetworkSource {
    File { path: PathBuf },
    Generated(GraphGenConfig),
}

fn resolve_network(args: &NetworkArgs, seed: u64) -> Result<(NetworkSource, InfluenceMatrix)> {
    match (&args.matrix, args.model) {
        (Some(_), Some(_)) => bail!("give either --matrix or --model, not both"),
        (Some(path), None) => {
            let path = std::path::absolute(path)?;
            let w = load_matrix(&path).with_context(|| format!("loading matrix {}", path.display()))?;
            Ok((NetworkSource::File { path }, w))
        }
        (None, Some(family)) => {
            let n = args.n.context("--n is required with --model")?;
            let p = args.p.context("--p is required with --model")?;
            let cfg = match family {
                Family::Er => GraphGenConfig::erdos_renyi(n, p, seed),
                Family::Ws => {
                    GraphGenConfig::watts_strogatz(n, args.degree.context("--degree is required for ws")?, p, seed)
                }
            };
            let w = gen_network(&cfg)?;
            Ok((NetworkSource::Generated(cfg), w))
        }
        (None, None) => bail!("no network given: pass --matrix or --model"),
    }
}

/// Saves a generated network next to the other artifacts.
fn save_generated(ctx: &RunContext, source: &NetworkSource, w: &InfluenceMatrix, meta: &Metadata) -> Result<()> {
    if let NetworkSource::Generated(_) = source {
        let mut m = serde_json::Map::new();
        m.insert("metadata".into(), serde_json::to_value(meta)?);
        save_matrix_with_meta(w, ctx.out.path("matrix.json"), m)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateConfig {
    network: NetworkSource,
    x0: Vec<f64>,
    integrator: IntegratorConfig,
    cluster_tol: f64,
    pinning: Option<PinningConfig>,
}

#[derive(Serialize)]
struct SimulateSummary {
    converged: bool,
    final_time: f64,
    residual: f64,
    final_state: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    equilibrium: Option<EquilibriumReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_distance: Option<f64>,
}

pub fn simulate(ctx: &RunContext, args: SimulateArgs) -> Result<Status> {
    let (network, w) = resolve_network(&args.network, ctx.seed)?;
    let n = w.n();
    let x0 = match args.x0 {
        Some(x0) if x0.len() != n => bail!("--x0 has {} entries but the network has {n} nodes", x0.len()),
        Some(x0) => x0,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
        }
    };
    let defaults = IntegratorConfig::default();
    let integrator = IntegratorConfig {
        step: args.step.unwrap_or(defaults.step),
        t_max: args.t_max.unwrap_or(defaults.t_max),
        eq_tol: args.eq_tol.unwrap_or(defaults.eq_tol),
        sample_stride: args.stride.unwrap_or(defaults.sample_stride),
        method: match args.method {
            Some(MethodArg::Euler) => Method::Euler,
            Some(MethodArg::Rk4) | None => Method::Rk4,
        },
    };
    let pinning = match args.pinned {
        Some(nodes) => Some(PinningConfig::uniform(
            n,
            NodeSet::new(nodes),
            args.gamma.unwrap_or(DEFAULT_GAMMA),
            args.target.unwrap_or(0.0),
        )?),
        None => None,
    };
    let config = SimulateConfig {
        network,
        x0,
        integrator,
        cluster_tol: args.cluster_tol.unwrap_or(DEFAULT_CLUSTER_TOL),
        pinning,
    };
    let meta = Metadata::new("simulate", ctx.seed, &config)?;
    save_generated(ctx, &config.network, &w, &meta)?;

    let tr = match &config.pinning {
        Some(p) => integrate(&config.x0, &PinnedField::new(&w, p)?, &config.integrator)?,
        None => integrate(&config.x0, &CtwmField::new(&w), &config.integrator)?,
    };
    let final_state = tr.final_state().as_slice().to_vec();
    let summary = SimulateSummary {
        converged: tr.converged,
        final_time: tr.final_time(),
        residual: tr.residual,
        equilibrium: config
            .pinning
            .is_none()
            .then(|| classify_equilibrium(&final_state, &w, config.cluster_tol)),
        target_distance: config
            .pinning
            .as_ref()
            .map(|p| final_state.iter().fold(0.0, |m, v| f64::max(m, (v - p.target).abs()))),
        final_state,
    };
    let traj = ctx.out.csv("trajectory.csv", &meta, |w| tr.write_csv(w))?;
    info!("wrote {}", traj.display());
    let text = ctx.out.json("equilibrium.json", &summary, &meta)?;
    emit(|w| writeln!(w, "{text}"))?;
    if tr.converged {
        Ok(Status::Done)
    } else {
        warn!(
            "no convergence by t = {} (residual {:.3e})",
            tr.final_time(),
            tr.residual
        );
        Ok(Status::NotConverged)
    }
}

#[derive(Serialize)]
struct CohesionConfig {
    network: NetworkSource,
    limit: Option<u64>,
}

#[derive(Serialize)]
struct CohesionSummary {
    #[serde(flatten)]
    report: CohesionReport,
    proper_maximal_set: Option<NodeSet>,
    /// Absent when some out-degree is beyond the exact search limit.
    decisive_links: Option<Vec<(usize, usize)>>,
    globally_reachable: Option<NodeSet>,
}

pub fn cohesion(ctx: &RunContext, args: CohesionArgs) -> Result<Status> {
    let (network, w) = resolve_network(&args.network, ctx.seed)?;
    let config = CohesionConfig {
        network,
        limit: args.limit,
    };
    let meta = Metadata::new("cohesion", ctx.seed, &config)?;
    save_generated(ctx, &config.network, &w, &meta)?;

    let report = enumerate_minimal_cohesive(&w, config.limit)?;
    if !report.complete {
        warn!("enumeration limit reached; the list of minimal cohesive sets may be partial");
    }
    let decisive: Option<DecisiveGraph> = match decisive_links(&w) {
        Ok(g) => Some(g),
        Err(e) => {
            warn!("skipping decisive links: {e}");
            None
        }
    };
    let summary = CohesionSummary {
        proper_maximal_set: report.complete.then(|| report.proper_maximal_set(&w)).flatten(),
        globally_reachable: decisive.as_ref().map(globally_reachable_nodes),
        decisive_links: decisive.map(|g| g.edges.into_iter().collect()),
        report,
    };
    let text = ctx.out.json("cohesion.json", &summary, &meta)?;
    emit(|w| writeln!(w, "{text}"))?;
    Ok(Status::Done)
}

#[derive(Serialize)]
struct PinningRunConfig {
    network: NetworkSource,
    pinned: Option<NodeSet>,
    limit: Option<u64>,
    budget: Option<u64>,
    verify_trials: Option<usize>,
    gamma: f64,
    target: f64,
}

#[derive(Serialize)]
struct FeasibilityCheck {
    pinned: NodeSet,
    feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    uncovered_witness: Option<NodeSet>,
}

#[derive(Serialize)]
struct PinningSummary {
    #[serde(flatten)]
    minimum: PinningSolution,
    #[serde(skip_serializing_if = "Option::is_none")]
    check: Option<FeasibilityCheck>,
    /// Fraction of simulated random starts that reached the target.
    #[serde(skip_serializing_if = "Option::is_none")]
    verified_fraction: Option<f64>,
}

pub fn pinning(ctx: &RunContext, args: PinningArgs) -> Result<Status> {
    let (network, w) = resolve_network(&args.network, ctx.seed)?;
    let config = PinningRunConfig {
        network,
        pinned: args.pinned.map(NodeSet::new),
        limit: args.limit,
        budget: args.budget,
        verify_trials: args.verify_trials,
        gamma: args.gamma.unwrap_or(DEFAULT_GAMMA),
        target: args.target.unwrap_or(0.0),
    };
    let meta = Metadata::new("pinning", ctx.seed, &config)?;
    save_generated(ctx, &config.network, &w, &meta)?;

    let report = enumerate_minimal_cohesive(&w, config.limit)?;
    let minimum = minimal_pinning_set(&report, config.budget)?;
    if !minimum.certified_optimal {
        warn!("search budget exhausted; the reported set may not be minimum");
    }
    let check = match &config.pinned {
        Some(p) => {
            if let Some(bad) = p.iter().find(|&i| i >= w.n()) {
                bail!("pinned node {bad} is out of range for {} nodes", w.n());
            }
            let (feasible, uncovered_witness) = pinning_feasible(p, &report)?;
            Some(FeasibilityCheck {
                pinned: p.clone(),
                feasible,
                uncovered_witness,
            })
        }
        None => None,
    };
    let verified_fraction = match config.verify_trials {
        Some(trials) => {
            let cfg = PinningConfig::uniform(w.n(), minimum.pinned.clone(), config.gamma, config.target)?;
            let verify = VerifyConfig {
                seed: ctx.seed,
                ..VerifyConfig::default()
            };
            Some(verify_pinning_by_simulation(&w, &cfg, trials, 1e-4, &verify)?)
        }
        None => None,
    };
    let summary = PinningSummary {
        minimum,
        check,
        verified_fraction,
    };
    let text = ctx.out.json("pinning.json", &summary, &meta)?;
    emit(|w| writeln!(w, "{text}"))?;
    Ok(Status::Done)
}

pub fn sweep(ctx: &RunContext, args: SweepArgs) -> Result<Status> {
    let n = args.n.unwrap_or(15);
    let replicates = args.replicates.unwrap_or(30);
    let mut cfg = match args.family.unwrap_or(Family::Er) {
        Family::Er => {
            let params = args.params.unwrap_or_else(|| vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
            SweepConfig::erdos_renyi(n, params, replicates, ctx.seed)
        }
        Family::Ws => {
            let params = args.params.unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75, 1.0]);
            SweepConfig::watts_strogatz(n, args.degree.unwrap_or(4), params, replicates, ctx.seed)
        }
    };
    cfg.enumeration_budget = args.enumeration_budget;
    cfg.pinning_budget = args.pinning_budget;
    let meta = Metadata::new("sweep", ctx.seed, &cfg)?;

    let result = run_sweep(&cfg)?;
    let path = ctx.out.csv("sweep.csv", &meta, |w| result.write_csv(w))?;
    info!("wrote {}", path.display());
    emit(|w| result.write_csv(w))?;
    for SweepRow {
        param,
        truncated_count,
        uncertified_count,
        ..
    } in &result.rows
    {
        if *truncated_count > 0 || *uncertified_count > 0 {
            warn!("param {param}: {truncated_count} truncated, {uncertified_count} uncertified replicates");
        }
    }
    Ok(Status::Done)
}

#[derive(Serialize)]
struct FitConfig {
    data: PathBuf,
    train_count: usize,
    holdout: std::ops::Range<usize>,
    include_self: bool,
}

pub fn fit(ctx: &RunContext, args: FitArgs) -> Result<Status> {
    let data_path = std::path::absolute(args.data.context("--data is required")?)?;
    let data = load_dataset(&data_path).with_context(|| format!("loading dataset {}", data_path.display()))?;
    let questions = data
        .experiments
        .iter()
        .map(|e| e.questions.len())
        .min()
        .context("dataset has no experiments")?;
    let train_count = args.train_count.unwrap_or(20);
    let config = FitConfig {
        data: data_path,
        train_count,
        holdout: train_count..args.holdout_end.unwrap_or(questions),
        include_self: !args.exclude_self.unwrap_or(false),
    };
    let meta = Metadata::new("fit", ctx.seed, &config)?;
    let report: ComparisonReport =
        compare_models(&data, config.train_count, config.holdout.clone(), config.include_self)?;
    let text = ctx.out.json("fit.json", &report, &meta)?;
    emit(|w| writeln!(w, "{text}"))?;
    Ok(Status::Done)
}
