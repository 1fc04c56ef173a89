//! Continuous-time weighted-median (CTWM) opinion dynamics.
//!
//! Each node of an influence network relaxes toward the weighted median of
//! the opinions it listens to:
//!
//! ```text
//! dx/dt = Med(x; W) - x
//! ```
//!
//! The crate provides the median operator, the structural machinery that
//! decides the long-run behavior of these dynamics (cohesive sets, decisive
//! links, equilibrium classification), pinning control toward an external
//! opinion, and experiment harnesses for network sweeps and inertia fitting.
//!
//! Node indices are zero-based throughout.

pub mod cohesion;
pub mod control;
pub mod dynamics;
pub mod empirical;
mod error;
pub mod experiments;
pub mod median;
pub mod net;

pub use cohesion::{
    cohesive_closure, decisive_links, enumerate_minimal_cohesive, has_globally_reachable_node, is_cohesive,
    is_maximal_cohesive, CohesionReport, DecisiveGraph, NodeSet,
};
pub use control::{minimal_pinning_set, pinning_feasible, verify_pinning_by_simulation, PinningSolution};
pub use dynamics::{
    classify_equilibrium, ctwm_rhs, integrate, order_statistics, pinned_rhs, Classification, CtwmField,
    EquilibriumReport, IntegratorConfig, OpinionState, PinnedField, PinnedForm, PinningConfig, Trajectory, VectorField,
};
pub use empirical::{
    compare_models, fit_inertia, predict_and_score, wilcoxon_signed_rank, Aggregator, EstimationDataset, FitOptions,
    FitResult, WilcoxonResult,
};
pub use error::{Error, Result};
pub use experiments::{run_sweep, SweepConfig, SweepResult, SweepRow};
pub use median::{median_operator, weighted_median, MedianOperator, MedianResult, Multiplicity};
pub use net::{
    gen_network, load_matrix, save_matrix, validate_and_normalize, GraphGenConfig, GraphModel, InfluenceMatrix,
};
