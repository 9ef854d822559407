//! Multispike blow-up ansätze for the slightly subcritical Dirichlet problem
//!
//! ```text
//! -Δu = |u|^{p-1} u / [ln(e + |u|)]^ε   in Ω,   u = 0 on ∂Ω,   p = (n+2)/(n-2)
//! ```
//!
//! The crate builds sums of projected Aubin–Talenti bubbles
//! `u = Σ α_i γ_i Pδ_(a_i, λ_i)` and checks, by independent quadrature, the
//! asymptotic expansions that drive the finite-dimensional reduction of the
//! problem: bubble norms and interactions, gradient pairings of the energy,
//! the reduced landscape `F̃(x) = m/2 - Σ ln Λ_i(x)` and its critical points,
//! and the ε-dependent concentration rates of the resulting families.
//!
//! Module map:
//!
//! * [`bubble`]: bubble profiles, the nonlinearity `f_ε`, universal constants.
//! * [`domain`]: model domains with closed-form Green/Robin functions and `Pδ`.
//! * [`interactions`]: the interaction scalar `ε_ij` and pairwise inner products.
//! * [`quadrature`]: radial, axisymmetric and Monte Carlo engines; energy and gradient pairings.
//! * [`reduced`]: `M(x)`, `ρ(x)`, `Λ(x)`, `F̃` and certified critical points.
//! * [`constructor`]: the ε-family of ansätze, reduced residuals, refinement, diagnostics.
//! * [`lab`]: ladder studies, rate fits and reports.
//! * [`cli`]: JSON run configuration and the command implementations behind the binary.

pub mod bubble;
pub mod cli;
pub mod constructor;
pub mod domain;
mod error;
pub mod interactions;
pub mod lab;
pub mod linalg;
pub mod quadrature;
pub mod reduced;

pub use error::{Error, Result};

pub use bubble::{BubbleParams, Dimension, Nonlinearity, UniversalConstants};
pub use constructor::SpikeAnsatz;
pub use reduced::SpikePattern;
pub use domain::{BallDomain, GreenDomain, ProjectedBubble, WholeSpace};
pub use quadrature::{Backend, IntegralResult, MCPlan, QuadOptions};
