//! The ε-family of multispike ansätze.
//!
//! A certified critical point `x̄` of `F̃` with its minimizer `Λ(x̄)` fixes the leading
//! behaviour of every parameter through the change of variables
//!
//! ```text
//! λ_i^{-(n-2)/2} = c̄ (Λ_i(x̄) + ζ_i) (ε/|ln ε|)^{1/2},   c̄ = ((n-2)Γ₁/Γ₂)^{1/2},
//! α_i = 1 + β_i,   a_i = x̄_i + ξ_i.
//! ```
//!
//! [`asymptotic_ansatz`] takes `β = ζ = ξ = 0`; [`refine`] solves the reduced equations for
//! the shifts.

mod field;
mod refine;
mod report;
mod residual;

pub use field::{assemble, plane_grid, sample_field, Field, FieldTable};
pub use refine::{linearized_operator, refine, RefineOptions, RefineReport, Shifts};
pub use report::{concentration_report, ConcentrationReport, SpikeMass};
pub use residual::{reduced_residual, ReducedResidual, ResidualBackend};

use serde::{Deserialize, Serialize};

use crate::bubble::{dist2, BubbleParams, Dimension, UniversalConstants};
use crate::domain::{Domain, GreenDomain};
use crate::reduced::{CriticalPoint, SpikePattern};
use crate::{Error, Result};

/// `u = Σ α_i γ_i Pδ_(a_i, λ_i)` at a given `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeAnsatz {
    pub pattern: SpikePattern,
    pub eps: f64,
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
    pub a: Vec<Vec<f64>>,
}

impl SpikeAnsatz {
    pub fn new(pattern: SpikePattern, eps: f64, alpha: Vec<f64>, lambda: Vec<f64>, a: Vec<Vec<f64>>) -> Result<Self> {
        let s = SpikeAnsatz { pattern, eps, alpha, lambda, a };
        s.validate()?;
        Ok(s)
    }

    /// Shapes agree, `ε ≥ 0`, `α ≥ 0` and `λ > 0`. A zero amplitude is allowed so that the zero
    /// function has a representation.
    pub fn validate(&self) -> Result<()> {
        let m = self.pattern.m();
        if self.alpha.len() != m || self.lambda.len() != m || self.a.len() != m {
            return Err(Error::InvalidParameter(format!("ansatz vectors must have length m = {m}")));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps = {} must be non-negative", self.eps)));
        }
        if self.alpha.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(Error::InvalidParameter("alpha must be finite and non-negative".into()));
        }
        if self.lambda.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be finite and positive".into()));
        }
        let n = self.a[0].len();
        if self.a.iter().any(|p| p.len() != n || p.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidParameter("spike centers must be finite points of one dimension".into()));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.pattern.m()
    }

    pub fn bubbles(&self) -> Result<Vec<BubbleParams>> {
        self.a.iter().zip(&self.lambda).map(|(a, l)| BubbleParams::new(a.clone(), *l)).collect()
    }

    /// `max_i α_i c₀ λ_i^{(n-2)/2}`, the sup norm of the leading profile.
    pub fn peak(&self) -> Result<f64> {
        let dim = Dimension::new(self.a[0].len())?;
        Ok(self
            .alpha
            .iter()
            .zip(&self.lambda)
            .map(|(a, l)| a * dim.c0() * l.powf(dim.k()))
            .fold(0.0, f64::max))
    }

    pub fn membership(&self, dom: &Domain, cfg: &MembershipConfig) -> MembershipFlags {
        let r = dom.length_scale();
        let mut f = MembershipFlags::default();
        let mut warnings = Vec::new();
        for i in 0..self.m() {
            if (self.alpha[i] - 1.0).abs() >= cfg.nu0 {
                f.alpha = false;
                warnings.push(format!("|alpha_{i} - 1| = {:.3e}", (self.alpha[i] - 1.0).abs()));
            }
            let ll = self.lambda[i].ln().max(f64::MIN_POSITIVE).ln();
            if self.lambda[i] > 1.0 && self.eps * ll >= cfg.nu0 {
                f.loglog = false;
                warnings.push(format!("eps * lnln(lambda_{i}) = {:.3e}", self.eps * ll));
            }
            let d = if dom.contains(&self.a[i]) { dom.dist_boundary_unchecked(&self.a[i]) } else { 0.0 };
            if d <= cfg.d0 * r {
                f.boundary = false;
                warnings.push(format!("d(a_{i}, boundary) = {d:.3e}"));
            }
            if self.lambda[i] * d <= cfg.lambda_d_min {
                f.lambda_d = false;
                warnings.push(format!("lambda_{i} * d_{i} = {:.3e}", self.lambda[i] * d));
            }
            for j in 0..i {
                let q = self.lambda[i] / self.lambda[j];
                if q.max(1.0 / q) >= cfg.ratio_max {
                    f.ratio = false;
                    warnings.push(format!("lambda_{i}/lambda_{j} = {q:.3e}"));
                }
                let dij = dist2(&self.a[i], &self.a[j]).sqrt();
                if dij <= cfg.d0_prime * r {
                    f.separation = false;
                    warnings.push(format!("|a_{i} - a_{j}| = {dij:.3e}"));
                }
            }
        }
        f.warnings = warnings;
        f
    }
}

/// Thresholds of the admissible parameter set; distances are fractions of the domain radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MembershipConfig {
    pub nu0: f64,
    pub d0: f64,
    pub d0_prime: f64,
    pub ratio_max: f64,
    pub lambda_d_min: f64,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        MembershipConfig { nu0: 0.5, d0: 0.05, d0_prime: 0.3, ratio_max: 10.0, lambda_d_min: 10.0 }
    }
}

/// Which admissibility conditions hold. Violations are reported, never fatal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipFlags {
    pub alpha: bool,
    pub loglog: bool,
    pub ratio: bool,
    pub separation: bool,
    pub boundary: bool,
    pub lambda_d: bool,
    pub warnings: Vec<String>,
}

impl Default for MembershipFlags {
    fn default() -> Self {
        MembershipFlags {
            alpha: true,
            loglog: true,
            ratio: true,
            separation: true,
            boundary: true,
            lambda_d: true,
            warnings: Vec::new(),
        }
    }
}

impl MembershipFlags {
    pub fn admissible(&self) -> bool {
        self.alpha && self.loglog && self.ratio && self.separation && self.boundary && self.lambda_d
    }
}

/// `(ε/|ln ε|)^{1/2}`.
pub fn eps_scale(eps: f64) -> f64 {
    (eps / eps.ln().abs()).sqrt()
}

/// `λ = [c̄ μ (ε/|ln ε|)^{1/2}]^{-2/(n-2)}`.
pub fn lambda_from_mu(dim: Dimension, cbar: f64, eps: f64, mu: f64) -> f64 {
    (cbar * mu * eps_scale(eps)).powf(-1.0 / dim.k())
}

/// Inverse of [`lambda_from_mu`]: `λ^{-(n-2)/2} (|ln ε|/ε)^{1/2} / c̄`.
pub fn mu_from_lambda(dim: Dimension, cbar: f64, eps: f64, lambda: f64) -> f64 {
    lambda.powf(-dim.k()) / (cbar * eps_scale(eps))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < (-1.0f64).exp()) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must lie in (0, 1/e)")));
    }
    Ok(())
}

/// Leading-order ansatz `α = 1`, `a = x̄`, `λ_i = [c̄Λ_i(x̄)(ε/|ln ε|)^{1/2}]^{-2/(n-2)}`.
pub fn asymptotic_ansatz(
    eps: f64,
    pattern: &SpikePattern,
    cp: &CriticalPoint,
    consts: &UniversalConstants,
) -> Result<SpikeAnsatz> {
    check_eps(eps)?;
    if cp.x.len() != pattern.m() {
        return Err(Error::InvalidParameter("critical point and pattern sizes differ".into()));
    }
    let dim = Dimension::new(cp.x[0].len())?;
    if dim.n() != consts.n {
        return Err(Error::InvalidParameter("constants computed for another dimension".into()));
    }
    let lambda = cp.lambda.iter().map(|mu| lambda_from_mu(dim, consts.cbar, eps, *mu)).collect();
    SpikeAnsatz::new(pattern.clone(), eps, vec![1.0; pattern.m()], lambda, cp.x.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::constants_for;
    use crate::domain::BallDomain;
    use crate::reduced::{find_critical_points, SearchConfig};

    fn center_cp(n: usize) -> (Domain, CriticalPoint) {
        let dom: Domain = BallDomain::unit(n).unwrap().into();
        let cps = find_critical_points(&SpikePattern::positive(1).unwrap(), &dom, &SearchConfig::default()).unwrap();
        (dom, cps.into_iter().next().unwrap())
    }

    #[test]
    fn scaling_identity_round_trip() {
        let (_, cp) = center_cp(4);
        let c = constants_for(Dimension::new(4).unwrap()).unwrap();
        for eps in [1e-2, 1e-4, 1e-6] {
            let s = asymptotic_ansatz(eps, &SpikePattern::positive(1).unwrap(), &cp, &c).unwrap();
            let lhs = s.lambda[0].powf(-1.0) * (eps.ln().abs() / eps).sqrt();
            assert!((lhs / (c.cbar * cp.lambda[0]) - 1.0).abs() < 1e-13);
            let mu = mu_from_lambda(Dimension::new(4).unwrap(), c.cbar, eps, s.lambda[0]);
            assert!((mu / cp.lambda[0] - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn blow_up_rate_is_exact() {
        let (_, cp) = center_cp(5);
        let d = Dimension::new(5).unwrap();
        let c = constants_for(d).unwrap();
        let pat = SpikePattern::positive(1).unwrap();
        let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
            .iter()
            .map(|&e| asymptotic_ansatz(e, &pat, &cp, &c).unwrap().peak().unwrap() / (e.ln().abs() / e).sqrt())
            .collect();
        for r in &ratios {
            assert!((r / ratios[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn log_lambda_tracks_log_eps() {
        let (_, cp) = center_cp(4);
        let c = constants_for(Dimension::new(4).unwrap()).unwrap();
        let pat = SpikePattern::positive(1).unwrap();
        let dev: Vec<f64> = [1e-2, 1e-4, 1e-8, 1e-16, 1e-32]
            .iter()
            .map(|&e| {
                let l = asymptotic_ansatz(e, &pat, &cp, &c).unwrap().lambda[0];
                (l.ln() * 2.0 / e.ln().abs() - 1.0).abs()
            })
            .collect();
        assert!(dev.windows(2).all(|w| w[1] < w[0]), "{dev:?}");
    }

    #[test]
    fn eps_out_of_range() {
        let (_, cp) = center_cp(4);
        let c = constants_for(Dimension::new(4).unwrap()).unwrap();
        let pat = SpikePattern::positive(1).unwrap();
        for e in [0.0, -1.0, 0.5, f64::NAN] {
            assert!(asymptotic_ansatz(e, &pat, &cp, &c).is_err());
        }
    }

    #[test]
    fn membership_flags() {
        let (dom, cp) = center_cp(4);
        let c = constants_for(Dimension::new(4).unwrap()).unwrap();
        let s = asymptotic_ansatz(1e-4, &SpikePattern::positive(1).unwrap(), &cp, &c).unwrap();
        assert!(s.membership(&dom, &MembershipConfig::default()).admissible());
        let mut bad = s.clone();
        bad.alpha[0] = 1.7;
        bad.a[0][0] = 0.99;
        let f = bad.membership(&dom, &MembershipConfig::default());
        assert!(!f.alpha && !f.boundary && !f.admissible());
        assert_eq!(f.warnings.len(), 3);
    }
}
