use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{delta_profile, psi0_profile, Dimension, MAX_DIM};
use crate::quadrature::{integrate_radial, IntegralResult, QuadOptions};
use crate::Result;

/// Dimension-dependent constants of the bubble expansions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniversalConstants {
    pub n: usize,
    /// Bubble amplitude `c₀`.
    pub c0: f64,
    /// `S_n^{n/2} = ∫ δ^{p+1} = ∫ |∇δ|²`.
    pub sn_pow: f64,
    /// `c̄₁ = c₀^{p+1} ∫ (1+|x|²)^{-(n+2)/2}`, the interaction normalization.
    pub cbar1: f64,
    /// `Γ₁ = (2/(n-2)) ∫ δ^p ln(δ) ψ⁰`, coefficient of the ε-term in the λ-equation.
    pub gamma1: f64,
    /// `Γ₂ = (n-2) c̄₁ / 2`.
    pub gamma2: f64,
    /// `Γ₃ = c̄₁ / 2`.
    pub gamma3: f64,
    /// `c̄ = ((n-2) Γ₁ / Γ₂)^{1/2}`, the blow-up rate constant.
    pub cbar: f64,
}

/// Constants for `dim`, computed once per dimension by radial quadrature.
pub fn constants_for(dim: Dimension) -> Result<UniversalConstants> {
    static CACHE: [OnceLock<UniversalConstants>; MAX_DIM + 1] = [const { OnceLock::new() }; MAX_DIM + 1];
    let slot = &CACHE[dim.n()];
    if let Some(c) = slot.get() {
        return Ok(*c);
    }
    let c = compute(dim)?;
    Ok(*slot.get_or_init(|| c))
}

fn compute(dim: Dimension) -> Result<UniversalConstants> {
    let opts = QuadOptions { rel_tol: 1e-13, order: 24, max_level: 10, abs_tol: 0.0 };
    let n = dim.nf();
    let c0 = dim.c0();
    let cp1 = c0.powf(2.0 * n / (n - 2.0));
    let sn = integrate_radial(dim, |r| (1.0 + r * r).powf(-n), 1.0, None, &opts)?.value * cp1;
    let i1 = integrate_radial(dim, |r| (1.0 + r * r).powf(-(n + 2.0) / 2.0), 1.0, None, &opts)?.value * cp1;
    // ∫ δ^p ψ⁰ = 0, so only the ln(1+r²) part of ln δ contributes
    let p = dim.p();
    let g1 = -integrate_radial(
        dim,
        |r| {
            let r2 = r * r;
            delta_profile(dim, 1.0, r2).powf(p) * psi0_profile(dim, 1.0, r2) * r2.ln_1p()
        },
        1.0,
        None,
        &opts,
    )?
    .value;
    let gamma2 = (n - 2.0) * i1 / 2.0;
    Ok(UniversalConstants {
        n: dim.n(),
        c0,
        sn_pow: sn,
        cbar1: i1,
        gamma1: g1,
        gamma2,
        gamma3: i1 / 2.0,
        cbar: ((n - 2.0) * g1 / gamma2).sqrt(),
    })
}

/// `∫_{ℝⁿ} δ_(0,1)^p ψ⁰_(0,1)`, which vanishes identically.
pub fn orthogonality_integral(dim: Dimension) -> Result<IntegralResult> {
    let p = dim.p();
    let opts = QuadOptions { rel_tol: 1e-13, order: 24, max_level: 10, abs_tol: 0.0 };
    integrate_radial(
        dim,
        |r| delta_profile(dim, 1.0, r * r).powf(p) * psi0_profile(dim, 1.0, r * r),
        1.0,
        None,
        &opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // ∫_{ℝⁿ} (1+|x|²)^{-s} dx = π^{n/2} Γ(s - n/2) / Γ(s)
    fn beta_form(n: usize, s: f64) -> f64 {
        let nf = n as f64;
        PI.powf(nf / 2.0) * statrs::function::gamma::gamma(s - nf / 2.0) / statrs::function::gamma::gamma(s)
    }

    #[test]
    fn match_beta_closed_forms() {
        for n in 3..=6 {
            let d = Dimension::new(n).unwrap();
            let c = constants_for(d).unwrap();
            let cp1 = d.c0().powf(2.0 * n as f64 / (n as f64 - 2.0));
            let s = cp1 * beta_form(n, n as f64);
            let c1 = cp1 * beta_form(n, (n as f64 + 2.0) / 2.0);
            assert!((c.sn_pow - s).abs() < 1e-10 * s, "n={n}");
            assert!((c.cbar1 - c1).abs() < 1e-10 * c1, "n={n}");
            assert_eq!(c.gamma2 / c.gamma3, n as f64 - 2.0);
            assert!(c.gamma1 > 0.0);
        }
    }

    #[test]
    fn n4_values() {
        let c = constants_for(Dimension::new(4).unwrap()).unwrap();
        assert!((c.sn_pow - 32.0 * PI * PI / 3.0).abs() < 1e-9);
        assert!((c.cbar1 - 32.0 * PI * PI).abs() < 1e-9);
        assert!((c.cbar - 6f64.powf(-0.5)).abs() < 1e-10);
    }

    #[test]
    fn gamma1_relates_to_sobolev_constant() {
        // integrating by parts in r gives Γ₁ = (n-2) S_n^{n/2} / (2n)
        for n in 3..=7 {
            let c = constants_for(Dimension::new(n).unwrap()).unwrap();
            let nf = n as f64;
            assert!((c.gamma1 - (nf - 2.0) * c.sn_pow / (2.0 * nf)).abs() < 1e-10 * c.gamma1, "n={n}");
        }
    }

    #[test]
    fn gamma1_from_log_of_delta() {
        // the defining form with ln δ in place of -k ln(1+r²)
        let d = Dimension::new(5).unwrap();
        let p = d.p();
        let opts = QuadOptions { rel_tol: 1e-12, ..Default::default() };
        let raw = integrate_radial(
            d,
            |r| {
                let dl = delta_profile(d, 1.0, r * r);
                dl.powf(p) * dl.ln() * psi0_profile(d, 1.0, r * r)
            },
            1.0,
            None,
            &opts,
        )
        .unwrap()
        .value;
        let c = constants_for(d).unwrap();
        assert!((2.0 / 3.0 * raw - c.gamma1).abs() < 1e-9 * c.gamma1);
    }

    #[test]
    fn orthogonality() {
        for n in 3..=6 {
            let r = orthogonality_integral(Dimension::new(n).unwrap()).unwrap();
            assert!(r.value.abs() < 1e-10, "n={n}: {}", r.value);
        }
    }
}
