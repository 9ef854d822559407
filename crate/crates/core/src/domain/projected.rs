use super::{Domain, GreenDomain};
use crate::bubble::{psi0_profile, BubbleParams, Dimension, MAX_DIM};
use crate::{Error, Result};

/// Below this value of `λ·d(a, ∂Ω)` the first-order projection is flagged as unreliable.
pub const DEFAULT_LAMBDA_D_THRESHOLD: f64 = 10.0;

/// First-order projection `Pδ = δ - φ` with `φ(y) = c₀ λ^{-(n-2)/2} H(a, y)`.
///
/// The exact projection differs by a harmonic term of size `O(λ^{-(n+2)/2} d^{-n})`, which is
/// never evaluated; tolerances downstream account for it.
#[derive(Clone, Debug)]
pub struct ProjectedBubble {
    pub base: BubbleParams,
    pub domain: Domain,
    /// `λ · d(a, ∂Ω)`.
    pub lambda_d: f64,
    /// Set when `lambda_d` is below the construction threshold.
    pub warning: Option<String>,
    amp: f64,
}

impl ProjectedBubble {
    pub fn new(base: BubbleParams, domain: Domain) -> Result<Self> {
        Self::with_threshold(base, domain, DEFAULT_LAMBDA_D_THRESHOLD)
    }

    pub fn with_threshold(base: BubbleParams, domain: Domain, threshold: f64) -> Result<Self> {
        if base.a.len() != domain.dim().n() {
            return Err(Error::InvalidParameter("bubble and domain dimensions differ".into()));
        }
        if !domain.contains(&base.a) {
            return Err(Error::OutsideDomain(format!("bubble center {:?}", base.a)));
        }
        let lambda_d = base.lambda * domain.dist_boundary_unchecked(&base.a);
        let warning = (lambda_d < threshold)
            .then(|| format!("lambda * d = {lambda_d:.3} is below {threshold}; projection model error is large"));
        let dim = base.dim();
        let amp = dim.c0() * base.lambda.powf(-dim.k());
        Ok(ProjectedBubble { base, domain, lambda_d, warning, amp })
    }

    pub fn dim(&self) -> Dimension {
        self.base.dim()
    }

    pub fn lambda(&self) -> f64 {
        self.base.lambda
    }

    /// `φ(y) = c₀ λ^{-(n-2)/2} H(a, y)`.
    #[inline]
    pub fn phi(&self, y: &[f64]) -> f64 {
        self.amp * self.domain.robin(&self.base.a, y)
    }

    #[inline]
    pub fn value(&self, y: &[f64]) -> f64 {
        self.base.value(y) - self.phi(y)
    }

    /// Checked evaluation.
    pub fn value_checked(&self, y: &[f64]) -> Result<f64> {
        if !self.domain.contains(y) {
            return Err(Error::OutsideDomain(format!("y = {y:?}")));
        }
        Ok(self.value(y))
    }

    /// `∇_y Pδ`.
    pub fn grad_into(&self, y: &[f64], out: &mut [f64]) {
        let n = y.len();
        self.base.grad_into(y, out);
        let mut h = [0.0; MAX_DIM];
        self.domain.robin_grad_y(&self.base.a, y, &mut h[..n]);
        for i in 0..n {
            out[i] -= self.amp * h[i];
        }
    }

    /// `λ ∂Pδ/∂λ = ψ⁰ + (n-2)/2 · φ`.
    #[inline]
    pub fn lambda_derivative(&self, y: &[f64]) -> f64 {
        let dim = self.dim();
        psi0_profile(dim, self.base.lambda, self.base.dist2(y)) + dim.k() * self.phi(y)
    }

    /// `λ^{-1} ∂Pδ/∂a = ψ¹ - c₀ λ^{-n/2} ∂H/∂a (a, y)`.
    pub fn a_derivative_into(&self, y: &[f64], out: &mut [f64]) {
        let n = y.len();
        self.base.psi1_into(y, out);
        let mut h = [0.0; MAX_DIM];
        self.domain.robin_grad_x(&self.base.a, y, &mut h[..n]);
        let c = self.amp / self.base.lambda;
        for i in 0..n {
            out[i] -= c * h[i];
        }
    }
}
