use serde::{Deserialize, Serialize};

use super::SpikeAnsatz;
use crate::bubble::{Nonlinearity, UniversalConstants};
use crate::domain::{grad_g_a, grad_h_a, green_g, robin_h, Domain, GreenDomain};
use crate::quadrature::{grad_pairings, PairingPlan};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ResidualBackend {
    /// Leading terms of the expansions, remainders dropped.
    Asymptotic,
    /// Gradient pairings integrated with `v = 0`.
    Quadrature(PairingPlan),
}

/// Derivatives of the reduced energy `K_ε(α, λ, a)`:
/// `r_alpha_i = ∂K/∂α_i`, `r_lambda_i = λ_i∂K/∂λ_i`, `r_a_i = λ_i^{-1}∂K/∂a_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedResidual {
    pub r_alpha: Vec<f64>,
    pub r_lambda: Vec<f64>,
    pub r_a: Vec<Vec<f64>>,
    /// Integration error bounds in the same layout, quadrature backend only.
    pub bounds: Option<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)>,
    pub quadrature: bool,
}

impl ReducedResidual {
    pub fn max_abs(&self) -> f64 {
        self.r_alpha
            .iter()
            .chain(&self.r_lambda)
            .chain(self.r_a.iter().flatten())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

pub fn reduced_residual(
    ansatz: &SpikeAnsatz,
    dom: &Domain,
    consts: &UniversalConstants,
    backend: &ResidualBackend,
) -> Result<ReducedResidual> {
    ansatz.validate()?;
    let dim = dom.dim();
    if consts.n != dim.n() || ansatz.a[0].len() != dim.n() {
        return Err(Error::InvalidParameter("ansatz, domain and constants dimensions differ".into()));
    }
    match backend {
        ResidualBackend::Asymptotic => asymptotic(ansatz, dom, consts),
        ResidualBackend::Quadrature(plan) => quadrature(ansatz, dom, plan),
    }
}

fn asymptotic(s: &SpikeAnsatz, dom: &Domain, c: &UniversalConstants) -> Result<ReducedResidual> {
    let dim = dom.dim();
    let (m, n, k) = (s.m(), dim.n(), dim.k());
    let nf = dim.nf();
    let mut r_alpha = Vec::with_capacity(m);
    let mut r_lambda = Vec::with_capacity(m);
    let mut r_a = Vec::with_capacity(m);
    for i in 0..m {
        let li = s.lambda[i];
        if li <= 1.0 {
            return Err(Error::InvalidParameter(format!("lambda_{i} = {li} must exceed 1")));
        }
        r_alpha.push(-(dim.p() - 1.0) * c.sn_pow * (s.alpha[i] - 1.0));
        let mut inter = robin_h(dom, &s.a[i], &s.a[i])? / li.powf(nf - 2.0);
        let mut grad = grad_h_a(dom, &s.a[i], &s.a[i])?;
        grad.iter_mut().for_each(|g| *g /= li.powf(nf - 2.0));
        for j in (0..m).filter(|j| *j != i) {
            let gg = s.pattern.gamma(i) * s.pattern.gamma(j);
            let w = (li * s.lambda[j]).powf(k);
            inter -= gg * green_g(dom, &s.a[i], &s.a[j])? / w;
            let ga = grad_g_a(dom, &s.a[i], &s.a[j])?;
            for d in 0..n {
                grad[d] -= gg * ga[d] / w;
            }
        }
        r_lambda.push(c.gamma1 * s.eps / li.ln() - c.gamma2 * inter);
        r_a.push(grad.iter().map(|g| 2.0 * c.gamma3 * g / li).collect());
    }
    Ok(ReducedResidual { r_alpha, r_lambda, r_a, bounds: None, quadrature: false })
}

fn quadrature(s: &SpikeAnsatz, dom: &Domain, plan: &PairingPlan) -> Result<ReducedResidual> {
    let nl = Nonlinearity::new(dom.dim(), s.eps)?;
    let p = grad_pairings(s, dom, &nl, plan)?;
    let m = s.m();
    let mut out = ReducedResidual {
        r_alpha: vec![],
        r_lambda: vec![],
        r_a: vec![],
        bounds: Some((vec![], vec![], vec![])),
        quadrature: true,
    };
    let b = out.bounds.as_mut().unwrap();
    for i in 0..m {
        let g = s.pattern.gamma(i);
        let ag = s.alpha[i] * g;
        out.r_alpha.push(g * p.alpha[i].value);
        out.r_lambda.push(ag * p.lambda[i].value);
        out.r_a.push(p.a[i].iter().map(|v| ag * v.value).collect());
        b.0.push(p.alpha[i].stderr_or_bound);
        b.1.push(ag.abs() * p.lambda[i].stderr_or_bound);
        b.2.push(p.a[i].iter().map(|v| ag.abs() * v.stderr_or_bound).collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::{constants_for, Dimension};
    use crate::constructor::asymptotic_ansatz;
    use crate::domain::BallDomain;
    use crate::quadrature::QuadOptions;
    use crate::reduced::{find_critical_points, SearchConfig, SpikePattern};

    fn setup(eps: f64) -> (Domain, SpikeAnsatz, UniversalConstants) {
        let dom: Domain = BallDomain::unit(4).unwrap().into();
        let pat = SpikePattern::positive(1).unwrap();
        let cp = find_critical_points(&pat, &dom, &SearchConfig::default()).unwrap().remove(0);
        let c = constants_for(dom.dim()).unwrap();
        let s = asymptotic_ansatz(eps, &pat, &cp, &c).unwrap();
        (dom, s, c)
    }

    #[test]
    fn alpha_residual_vanishes_at_unit_amplitude() {
        let (dom, s, c) = setup(1e-3);
        let r = reduced_residual(&s, &dom, &c, &ResidualBackend::Asymptotic).unwrap();
        assert_eq!(r.r_alpha, vec![0.0]);
        assert!(r.r_a[0].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lambda_residual_is_of_order_eps_over_log() {
        let mut ratios = Vec::new();
        for eps in [1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 1e-5, 1e-6] {
            let (dom, s, c) = setup(eps);
            let r = reduced_residual(&s, &dom, &c, &ResidualBackend::Asymptotic).unwrap();
            // Substituting the change of variables: r = Γ₁ ε/|ln ε| (|ln ε|/ln λ - (n-2)).
            let lnl = s.lambda[0].ln();
            let oracle = c.gamma1 * eps * (1.0 / lnl - 2.0 / eps.ln().abs());
            assert!((r.r_lambda[0] - oracle).abs() < 1e-12 * eps, "{} vs {oracle}", r.r_lambda[0]);
            ratios.push((r.r_lambda[0] / (eps / eps.ln().abs())).abs());
        }
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(hi < 2.0 * c_gamma1() && lo > 0.0, "{ratios:?}");
    }

    fn c_gamma1() -> f64 {
        constants_for(Dimension::new(4).unwrap()).unwrap().gamma1
    }

    #[test]
    fn backends_agree_for_central_spike() {
        let (dom, s, c) = setup(1e-3);
        let a = reduced_residual(&s, &dom, &c, &ResidualBackend::Asymptotic).unwrap();
        let plan = PairingPlan::deterministic(QuadOptions { rel_tol: 1e-9, ..Default::default() });
        let q = reduced_residual(&s, &dom, &c, &ResidualBackend::Quadrature(plan)).unwrap();
        // Compare against the leading magnitude: the two terms nearly cancel at the ansatz.
        let lead = c.gamma1 * s.eps / s.lambda[0].ln();
        assert!((a.r_lambda[0] - q.r_lambda[0]).abs() < 0.25 * lead, "{a:?} {q:?}");
    }

    #[test]
    fn a_residual_coefficient_off_center() {
        // ε = 0, α = 1: the a-pairing is c̄₁ ∂_aH(a,a)/λ^{n-1} up to O(λ^{-n} ln λ).
        let dom: Domain = BallDomain::unit(4).unwrap().into();
        let c = constants_for(dom.dim()).unwrap();
        let t: f64 = 0.3;
        // unit ball, n = 4: H(x,x) = (1-|x|²)^{-2}, and ∂_aH(a,a) is half its derivative
        let dh = 2.0 * t / (1.0 - t * t).powi(3);
        let plan = PairingPlan::deterministic(QuadOptions { rel_tol: 1e-10, ..Default::default() });
        let mut gaps = Vec::new();
        for lambda in [100.0f64, 200.0, 400.0] {
            let s = SpikeAnsatz::new(SpikePattern::positive(1).unwrap(), 0.0, vec![1.0], vec![lambda], vec![vec![
                t, 0.0, 0.0, 0.0,
            ]])
            .unwrap();
            let oracle = c.cbar1 * dh / lambda.powi(3);
            let a = reduced_residual(&s, &dom, &c, &ResidualBackend::Asymptotic).unwrap();
            assert!((a.r_a[0][0] / oracle - 1.0).abs() < 1e-12);
            let q = reduced_residual(&s, &dom, &c, &ResidualBackend::Quadrature(plan.clone())).unwrap();
            gaps.push((q.r_a[0][0] / oracle - 1.0).abs());
        }
        assert!(gaps[2] < 0.02, "{gaps:?}");
        assert!(gaps[2] < gaps[0], "{gaps:?}");
    }
}
