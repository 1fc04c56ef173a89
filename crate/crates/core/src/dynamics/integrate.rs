use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{OpinionState, VectorField};
use crate::error::{Error, Result};

/// Coefficients of an explicit Runge–Kutta scheme.
#[derive(Debug, Clone, Copy)]
pub struct ButcherTableau {
    /// Strictly lower-triangular stage matrix, row-major `stages × stages`.
    pub a: &'static [f64],
    pub b: &'static [f64],
    pub c: &'static [f64],
}

impl ButcherTableau {
    pub const CLASSIC_RK4: Self = Self {
        a: &[
            0.0, 0.0, 0.0, 0.0, //
            0.5, 0.0, 0.0, 0.0, //
            0.0, 0.5, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0,
        ],
        b: &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
        c: &[0.0, 0.5, 0.5, 1.0],
    };

    pub const EULER: Self = Self {
        a: &[0.0],
        b: &[1.0],
        c: &[0.0],
    };

    pub fn stages(&self) -> usize {
        self.b.len()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4,
    Euler,
}

impl Method {
    pub fn tableau(self) -> ButcherTableau {
        match self {
            Method::Rk4 => ButcherTableau::CLASSIC_RK4,
            Method::Euler => ButcherTableau::EULER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub step: f64,
    pub t_max: f64,
    /// Convergence threshold on `‖f(x)‖∞`.
    pub eq_tol: f64,
    /// Keep every `sample_stride`-th step in the trajectory.
    pub sample_stride: usize,
    pub method: Method,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 0.01,
            t_max: 200.0,
            eq_tol: 1e-9,
            sample_stride: 10,
            method: Method::Rk4,
        }
    }
}

impl IntegratorConfig {
    pub const MAX_STEP: f64 = 0.1;
    /// Consecutive samples below `eq_tol` required to declare convergence.
    pub const SETTLE_SAMPLES: usize = 3;

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= Self::MAX_STEP) {
            return Err(Error::ConfigInvalid(format!(
                "step {} must lie in (0, {}]",
                self.step,
                Self::MAX_STEP
            )));
        }
        if !(self.eq_tol.is_finite() && self.eq_tol > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "eq_tol {} must be finite and positive",
                self.eq_tol
            )));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "t_max {} must be finite and non-negative",
                self.t_max
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::ConfigInvalid("sample_stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<OpinionState>,
    pub converged: bool,
    /// `‖f(x)‖∞` at the final state.
    pub residual: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &OpinionState {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial time")
    }

    /// CSV with header `t,x_0,...,x_{n-1}`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.states.first().map_or(0, |s| s.len());
        write!(out, "t")?;
        for i in 0..n {
            write!(out, ",x_{i}")?;
        }
        writeln!(out)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(out, "{t:?}")?;
            for v in x.iter() {
                write!(out, ",{v:?}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Fixed-step explicit Runge–Kutta integration of `field` from `x0`.
///
/// Stops with `converged = true` once `‖f(x)‖∞ < eq_tol` at
/// [`IntegratorConfig::SETTLE_SAMPLES`] consecutive sample times, or as soon
/// as the residual is exactly zero (the scheme then cannot move the state).
/// Otherwise runs until `t_max`. The last state is always recorded.
pub fn integrate(x0: &[f64], field: &impl VectorField, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let n = field.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState(0.0));
    }

    let tableau = cfg.method.tableau();
    let stages = tableau.stages();
    let h = cfg.step;
    // t_max / h may land a rounding error above an integer
    let total_steps = (cfg.t_max / h - 1e-9).ceil().max(0.0) as u64;

    let mut x = x0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; stages];
    let mut probe = vec![0.0; n];

    field.eval(&x, &mut k[0]);
    let mut residual = sup_norm(&k[0]);

    let mut times = vec![0.0];
    let mut states = vec![OpinionState::from(x.clone())];
    let mut settled = usize::from(residual < cfg.eq_tol);
    let mut converged = residual == 0.0 || settled >= IntegratorConfig::SETTLE_SAMPLES;
    let mut step_no: u64 = 0;

    while !converged && step_no < total_steps {
        // k[0] already holds f(x)
        for s in 1..stages {
            probe.copy_from_slice(&x);
            for (r, kr) in k.iter().enumerate().take(s) {
                let a = tableau.a[s * stages + r];
                if a != 0.0 {
                    for (p, kv) in probe.iter_mut().zip(kr) {
                        *p += h * a * kv;
                    }
                }
            }
            field.eval(&probe, &mut k[s]);
        }
        for (i, xi) in x.iter_mut().enumerate() {
            let incr: f64 = tableau.b.iter().zip(&k).map(|(b, ks)| b * ks[i]).sum();
            *xi += h * incr;
        }
        step_no += 1;
        let t = step_no as f64 * h;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState(t));
        }

        field.eval(&x, &mut k[0]);
        residual = sup_norm(&k[0]);

        let sample = step_no.is_multiple_of(cfg.sample_stride as u64);
        if sample {
            settled = if residual < cfg.eq_tol { settled + 1 } else { 0 };
            converged = residual == 0.0 || settled >= IntegratorConfig::SETTLE_SAMPLES;
        } else if residual == 0.0 {
            converged = true;
        }
        if sample || converged || step_no == total_steps {
            times.push(t);
            states.push(OpinionState::from(x.clone()));
        }
    }

    Ok(Trajectory {
        times,
        states,
        converged,
        residual,
    })
}
