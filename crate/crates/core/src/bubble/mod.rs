//! Aubin–Talenti bubbles, the nonlinearity family `f_ε` and the universal constants.

mod constants;
mod loglog;
mod nonlinearity;

pub use constants::{constants_for, orthogonality_integral, UniversalConstants};
pub use loglog::{loglog_decompose, LogLogSplit};
pub use nonlinearity::{Nonlinearity, MAX_EPS};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported space dimension. Hot integrands keep points in stack buffers of this size.
pub const MAX_DIM: usize = 12;

/// Space dimension `n ≥ 3` together with the critical exponent `p = (n+2)/(n-2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl TryFrom<usize> for Dimension {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Dimension::new(n)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

impl Dimension {
    pub fn new(n: usize) -> Result<Self> {
        if (3..=MAX_DIM).contains(&n) {
            Ok(Dimension(n))
        } else {
            Err(Error::Dimension(n))
        }
    }

    #[inline]
    pub fn n(self) -> usize {
        self.0
    }

    #[inline]
    pub fn nf(self) -> f64 {
        self.0 as f64
    }

    /// Critical exponent `p = (n+2)/(n-2)`.
    #[inline]
    pub fn p(self) -> f64 {
        (self.nf() + 2.0) / (self.nf() - 2.0)
    }

    /// `(n-2)/2`, the scaling weight of the bubble.
    #[inline]
    pub fn k(self) -> f64 {
        (self.nf() - 2.0) / 2.0
    }

    /// The existence theorem for multispike families needs `n ≥ 4`; `n = 3` is accepted
    /// everywhere but flagged by callers.
    pub fn within_theorem(self) -> bool {
        self.0 >= 4
    }

    /// Bubble amplitude `c₀ = (n(n-2))^{(n-2)/4}`.
    #[inline]
    pub fn c0(self) -> f64 {
        (self.nf() * (self.nf() - 2.0)).powf((self.nf() - 2.0) / 4.0)
    }

    /// Surface area of the unit sphere `S^{n-1}`.
    pub fn sphere_area(self) -> f64 {
        sphere_area(self.0 - 1)
    }

    /// Surface area of `S^{n-2}`, the weight of the off-axis radius in axisymmetric integrals.
    pub fn axial_sphere_area(self) -> f64 {
        sphere_area(self.0 - 2)
    }
}

/// `Γ(m/2)` for a positive integer `m`.
pub(crate) fn gamma_half(m: usize) -> f64 {
    assert!(m > 0);
    let mut g = if m % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if m % 2 == 0 { 1.0 } else { 0.5 };
    let target = m as f64 / 2.0;
    while x < target - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Area of the unit sphere `S^d ⊂ ℝ^{d+1}`.
pub(crate) fn sphere_area(d: usize) -> f64 {
    let m = d + 1;
    2.0 * std::f64::consts::PI.powf(m as f64 / 2.0) / gamma_half(m)
}

/// Center `a` and concentration rate `λ > 0` of one bubble `δ_(a,λ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    pub a: Vec<f64>,
    pub lambda: f64,
}

impl BubbleParams {
    pub fn new(a: Vec<f64>, lambda: f64) -> Result<Self> {
        Dimension::new(a.len())?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("bubble center has non-finite coordinates".into()));
        }
        Ok(BubbleParams { a, lambda })
    }

    pub fn dim(&self) -> Dimension {
        Dimension(self.a.len())
    }

    pub fn dist2(&self, y: &[f64]) -> f64 {
        dist2(&self.a, y)
    }

    /// `δ_(a,λ)(y) = c₀ λ^{(n-2)/2} (1 + λ²|y-a|²)^{-(n-2)/2}`.
    pub fn value(&self, y: &[f64]) -> f64 {
        delta_profile(self.dim(), self.lambda, self.dist2(y))
    }

    /// `ψ⁰ = λ ∂δ/∂λ`.
    pub fn psi0(&self, y: &[f64]) -> f64 {
        psi0_profile(self.dim(), self.lambda, self.dist2(y))
    }

    /// `ψ¹ = (1/λ) ∂δ/∂a`, one entry per coordinate.
    pub fn psi1(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.a.len()];
        self.psi1_into(y, &mut out);
        out
    }

    pub fn psi1_into(&self, y: &[f64], out: &mut [f64]) {
        let dim = self.dim();
        let c = psi1_radial_factor(dim, self.lambda, self.dist2(y));
        for ((o, yi), ai) in out.iter_mut().zip(y).zip(&self.a) {
            *o = c * (yi - ai);
        }
    }

    /// Gradient of `δ` in `y`; equals `-λ ψ¹`.
    pub fn grad_into(&self, y: &[f64], out: &mut [f64]) {
        self.psi1_into(y, out);
        for o in out.iter_mut() {
            *o *= -self.lambda;
        }
    }
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Bubble value as a function of the squared distance to its center.
#[inline]
pub fn delta_profile(dim: Dimension, lambda: f64, r2: f64) -> f64 {
    let k = dim.k();
    dim.c0() * lambda.powf(k) * (1.0 + lambda * lambda * r2).powf(-k)
}

/// `ψ⁰` as a function of the squared distance:
/// `c₀ (n-2)/2 · λ^{(n-2)/2} (1 - λ²r²)(1 + λ²r²)^{-n/2}`.
#[inline]
pub fn psi0_profile(dim: Dimension, lambda: f64, r2: f64) -> f64 {
    let k = dim.k();
    let s = lambda * lambda * r2;
    dim.c0() * k * lambda.powf(k) * (1.0 - s) * (1.0 + s).powf(-dim.nf() / 2.0)
}

/// `ψ¹ = c · (y - a)` with this `c`.
#[inline]
pub fn psi1_radial_factor(dim: Dimension, lambda: f64, r2: f64) -> f64 {
    let k = dim.k();
    let s = lambda * lambda * r2;
    (dim.nf() - 2.0) * dim.c0() * lambda.powf(k + 1.0) * (1.0 + s).powf(-dim.nf() / 2.0)
}
