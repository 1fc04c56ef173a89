//! CTWM and pinned dynamics, fixed-step integration and equilibrium
//! classification.

mod equilibrium;
mod integrate;

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::cohesion::NodeSet;
use crate::error::{Error, Result};
use crate::median::MedianOperator;
use crate::net::InfluenceMatrix;

pub use equilibrium::{classify_equilibrium, order_statistics, Classification, EquilibriumReport, OrderStatistics};
pub use integrate::{integrate, ButcherTableau, IntegratorConfig, Method, Trajectory};

/// Opinion vector, one entry per node.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpinionState(Vec<f64>);

impl OpinionState {
    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Infinity-norm distance to `other`.
    pub fn dist_inf(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl From<Vec<f64>> for OpinionState {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for OpinionState {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for OpinionState {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Autonomous right-hand side `dx/dt = f(x)`.
pub trait VectorField {
    fn dim(&self) -> usize;
    /// Writes `f(x)` into `out`; both slices have length [`dim`](Self::dim).
    fn eval(&self, x: &[f64], out: &mut [f64]);
}

/// `f(x) = Med(x; W) - x`.
#[derive(Debug, Clone)]
pub struct CtwmField {
    median: MedianOperator,
}

impl CtwmField {
    pub fn new(w: &InfluenceMatrix) -> Self {
        Self {
            median: MedianOperator::new(w),
        }
    }
}

impl VectorField for CtwmField {
    fn dim(&self) -> usize {
        self.median.n()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        self.median.apply_into(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o -= xi;
        }
    }
}

/// External input applied to a subset of nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinningConfig {
    pub pinned: NodeSet,
    /// Per-node attraction to the target: in `(0, 1]` on pinned nodes, zero elsewhere.
    pub gamma: Vec<f64>,
    pub target: f64,
}

impl PinningConfig {
    /// Same `gamma` on every pinned node.
    pub fn uniform(n: usize, pinned: NodeSet, gamma: f64, target: f64) -> Result<Self> {
        let g = (0..n).map(|i| if pinned.contains(i) { gamma } else { 0.0 }).collect();
        let cfg = Self {
            pinned,
            gamma: g,
            target,
        };
        cfg.validate(n)?;
        Ok(cfg)
    }

    /// No node pinned.
    pub fn none(n: usize, target: f64) -> Self {
        Self {
            pinned: NodeSet::default(),
            gamma: vec![0.0; n],
            target,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.gamma.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.gamma.len(),
            });
        }
        if let Some(bad) = self.pinned.iter().find(|&i| i >= n) {
            return Err(Error::NodeOutOfRange { node: bad, n });
        }
        if !self.target.is_finite() {
            return Err(Error::ConfigInvalid("pinning target must be finite".into()));
        }
        for (i, &g) in self.gamma.iter().enumerate() {
            let ok = if self.pinned.contains(i) {
                g > 0.0 && g <= 1.0
            } else {
                g == 0.0
            };
            if !ok {
                return Err(Error::ConfigInvalid(format!(
                    "gamma[{i}] = {g} inconsistent with pinned set {}",
                    self.pinned
                )));
            }
        }
        Ok(())
    }
}

/// Which form of the pinned dynamics to use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PinnedForm {
    /// `dx_i/dt = γ_i u + (1 - γ_i) Med_i(x) - x_i`; `u·1` is an equilibrium.
    #[default]
    Relaxation,
    /// `dx_i/dt = γ_i u + (1 - γ_i) (Med_i(x) - x_i)`, kept for comparison only.
    Additive,
}

#[derive(Debug, Clone)]
pub struct PinnedField {
    median: MedianOperator,
    gamma: Vec<f64>,
    target: f64,
    form: PinnedForm,
}

impl PinnedField {
    pub fn new(w: &InfluenceMatrix, cfg: &PinningConfig) -> Result<Self> {
        Self::with_form(w, cfg, PinnedForm::Relaxation)
    }

    pub fn with_form(w: &InfluenceMatrix, cfg: &PinningConfig, form: PinnedForm) -> Result<Self> {
        cfg.validate(w.n())?;
        Ok(Self {
            median: MedianOperator::new(w),
            gamma: cfg.gamma.clone(),
            target: cfg.target,
            form,
        })
    }
}

impl VectorField for PinnedField {
    fn dim(&self) -> usize {
        self.median.n()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        self.median.apply_into(x, out);
        let u = self.target;
        for ((o, &xi), &g) in out.iter_mut().zip(x).zip(&self.gamma) {
            let med = *o;
            *o = match self.form {
                // γu + (1 − γ)Med − x, arranged to vanish exactly at x = u = Med
                PinnedForm::Relaxation => g * (u - xi) + (1.0 - g) * (med - xi),
                PinnedForm::Additive => g * u + (1.0 - g) * (med - xi),
            };
        }
    }
}

fn eval_checked(field: &impl VectorField, x: &[f64]) -> Result<OpinionState> {
    if x.len() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: x.len(),
        });
    }
    let mut out = vec![0.0; x.len()];
    field.eval(x, &mut out);
    Ok(out.into())
}

/// `Med(x; W) - x`.
pub fn ctwm_rhs(x: &[f64], w: &InfluenceMatrix) -> Result<OpinionState> {
    eval_checked(&CtwmField::new(w), x)
}

/// Right-hand side of the pinned dynamics in relaxation form.
pub fn pinned_rhs(x: &[f64], w: &InfluenceMatrix, cfg: &PinningConfig) -> Result<OpinionState> {
    eval_checked(&PinnedField::new(w, cfg)?, x)
}
