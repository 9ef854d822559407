//! Integration engines and the energy functional of assembled ansätze.
//!
//! Three backends share one result type:
//!
//! * [`radial`] for functions of `|y - a|` on `ℝⁿ` or a ball centered at `a`;
//! * [`axisym`] for integrands invariant under rotations about an axis, reduced to a
//!   half-plane `(t, s)` with weight `ω_{n-2} s^{n-2}`;
//! * [`mc`] for everything else, importance sampled around the spikes.
//!
//! Deterministic backends refine until two successive levels agree to `rel_tol` and report
//! the last difference as the error bound.

pub mod axisym;
pub(crate) mod functional;
pub mod gauss;
pub mod mc;
pub mod radial;

pub use axisym::{AxialFrame, AxisymRegion};
pub use functional::{energy_I, grad_pairing, grad_pairings, Direction, Method, Pairings, PairingPlan};
pub use mc::integrate_mc;
pub use radial::{integrate_half_line, integrate_radial};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Radial1D,
    Axisym2D,
    ImportanceMC,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    /// Refinement difference (deterministic) or one standard error (Monte Carlo).
    pub stderr_or_bound: f64,
    pub backend: Backend,
}

impl IntegralResult {
    pub(crate) fn scaled(self, c: f64) -> IntegralResult {
        IntegralResult { value: c * self.value, stderr_or_bound: c.abs() * self.stderr_or_bound, ..self }
    }
}

/// Settings of the deterministic backends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadOptions {
    /// Stop when successive refinements differ by less than this, relative to `∫|f|`.
    pub rel_tol: f64,
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Number of panel doublings allowed after the initial level.
    pub max_level: u32,
    /// Absolute floor on the accepted change, for integrands that cancel to rounding level.
    pub abs_tol: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-10, order: 20, max_level: 9, abs_tol: 0.0 }
    }
}

impl QuadOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Configuration(format!("quadrature.rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        if !(2..=64).contains(&self.order) {
            return Err(Error::Configuration(format!("quadrature.order must lie in 2..=64, got {}", self.order)));
        }
        if !(self.abs_tol >= 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::Configuration("quadrature.abs_tol must be finite and non-negative".into()));
        }
        if self.max_level > 14 {
            return Err(Error::Configuration("quadrature.max_level must be at most 14".into()));
        }
        Ok(())
    }
}

/// Monte Carlo plan: sample count, master seed and the proposal mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MCPlan {
    pub n_samples: usize,
    pub master_seed: u64,
    /// Weight of the uniform proposal on the domain.
    pub uniform_weight: f64,
    /// Weights of the per-spike proposals; `None` splits `1 - uniform_weight` equally.
    pub spike_weights: Option<Vec<f64>>,
    /// Samples per independently seeded chunk.
    pub chunk: usize,
}

impl Default for MCPlan {
    fn default() -> Self {
        MCPlan { n_samples: 2_000_000, master_seed: 0x5eed, uniform_weight: 0.2, spike_weights: None, chunk: 65_536 }
    }
}

impl MCPlan {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1000 {
            return Err(Error::Configuration(format!("mc.n_samples must be at least 1000, got {}", self.n_samples)));
        }
        if self.chunk == 0 {
            return Err(Error::Configuration("mc.chunk must be positive".into()));
        }
        if !(self.uniform_weight > 0.0 && self.uniform_weight <= 1.0) {
            return Err(Error::Configuration("mc.uniform_weight must lie in (0, 1]".into()));
        }
        if let Some(w) = &self.spike_weights {
            if w.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::Configuration("mc.spike_weights must be positive".into()));
            }
            let total = self.uniform_weight + w.iter().sum::<f64>();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Configuration(format!("mc mixture weights sum to {total}, expected 1")));
            }
        }
        Ok(())
    }

    /// Mixture weights `(uniform, spike_1, …, spike_m)` for `m` spikes.
    pub(crate) fn mixture(&self, m: usize) -> Result<(f64, Vec<f64>)> {
        self.validate()?;
        match &self.spike_weights {
            Some(w) if w.len() == m => Ok((self.uniform_weight, w.clone())),
            Some(w) => Err(Error::Configuration(format!(
                "mc.spike_weights has {} entries for {m} spikes",
                w.len()
            ))),
            None if m == 0 => Ok((1.0, vec![])),
            None => Ok((self.uniform_weight, vec![(1.0 - self.uniform_weight) / m as f64; m])),
        }
    }
}
