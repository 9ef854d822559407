//! Interaction between two bubbles.
//!
//! ```text
//! ε_ij = (λ_i/λ_j + λ_j/λ_i + λ_iλ_j|a_i - a_j|²)^{-(n-2)/2}
//! ```
//!
//! and the inner products `⟨Pδ_i, Pδ_j⟩`, `⟨Pδ_j, λ_i∂_λPδ_i⟩`, `⟨Pδ_j, λ_i^{-1}∂_aPδ_i⟩`, both
//! from their leading-order expansions and by direct integration of `∫ δ_j^p w`.

use serde::{Deserialize, Serialize};

use crate::bubble::{constants_for, delta_profile, dist2, BubbleParams, Dimension, MAX_DIM};
use crate::domain::{grad_h_a, robin_h, Domain, GreenDomain, ProjectedBubble};
use crate::quadrature::functional::Geometry;
use crate::quadrature::{IntegralResult, PairingPlan};
use crate::{Error, Result};

/// Above this `ε_ij` the pair expansions are flagged.
pub const EPS_SMALL: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikePair {
    pub bi: BubbleParams,
    pub bj: BubbleParams,
    pub gi: i8,
    pub gj: i8,
}

impl SpikePair {
    pub fn new(bi: BubbleParams, bj: BubbleParams) -> Result<Self> {
        if bi.a.len() != bj.a.len() {
            return Err(Error::InvalidParameter("bubbles live in different dimensions".into()));
        }
        Ok(SpikePair { bi, bj, gi: 1, gj: 1 })
    }

    pub fn with_signs(mut self, gi: i8, gj: i8) -> Result<Self> {
        if ![gi, gj].iter().all(|g| *g == 1 || *g == -1) {
            return Err(Error::InvalidParameter("signs must be +1 or -1".into()));
        }
        self.gi = gi;
        self.gj = gj;
        Ok(self)
    }

    /// The same pair with the roles of `i` and `j` exchanged.
    pub fn swapped(&self) -> Self {
        SpikePair { bi: self.bj.clone(), bj: self.bi.clone(), gi: self.gj, gj: self.gi }
    }
}

fn k_of(b: &BubbleParams) -> f64 {
    (b.a.len() as f64 - 2.0) / 2.0
}

fn big_e(bi: &BubbleParams, bj: &BubbleParams) -> f64 {
    bi.lambda / bj.lambda + bj.lambda / bi.lambda + bi.lambda * bj.lambda * dist2(&bi.a, &bj.a)
}

pub fn eps_ij(bi: &BubbleParams, bj: &BubbleParams) -> f64 {
    big_e(bi, bj).powf(-k_of(bi))
}

/// `λ_i ∂ε_ij/∂λ_i`.
pub fn deps_dlambda_scaled(bi: &BubbleParams, bj: &BubbleParams) -> f64 {
    let k = k_of(bi);
    let e = big_e(bi, bj);
    let de = bi.lambda / bj.lambda - bj.lambda / bi.lambda + bi.lambda * bj.lambda * dist2(&bi.a, &bj.a);
    -k * e.powf(-k - 1.0) * de
}

/// `λ_i^{-1} ∂ε_ij/∂a_i`.
pub fn deps_da_scaled(bi: &BubbleParams, bj: &BubbleParams) -> Vec<f64> {
    let k = k_of(bi);
    let c = -k * big_e(bi, bj).powf(-k - 1.0) * 2.0 * bj.lambda;
    bi.a.iter().zip(&bj.a).map(|(x, y)| c * (x - y)).collect()
}

/// Leading terms of the three pair inner products with their remainder scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairExpansion {
    /// `⟨Pδ_i, Pδ_j⟩ ≈ c̄₁(ε_ij - H(a_i,a_j)/(λ_iλ_j)^{(n-2)/2})`.
    pub pp: f64,
    /// `⟨Pδ_j, λ_i∂Pδ_i/∂λ_i⟩ ≈ c̄₁(λ_i∂ε_ij/∂λ_i + (n-2)/2 · H/(λ_iλ_j)^{(n-2)/2})`.
    pub plam: f64,
    /// `⟨Pδ_j, λ_i^{-1}∂Pδ_i/∂a_i⟩ ≈ c̄₁(λ_i^{-1}∂ε_ij/∂a_i - λ_i^{-1}(λ_iλ_j)^{-(n-2)/2}∂_aH(a_i,a_j))`.
    pub pa: Vec<f64>,
    /// `Σ_k ln(λ_kd_k)/(λ_kd_k)^n + ε_ij^{n/(n-2)} ln(1/ε_ij)`.
    pub r1: f64,
    /// `Σ_k ln(λ_kd_k)/(λ_kd_k)^n + λ_j|a_i - a_j| ε_ij^{(n+1)/(n-2)}`.
    pub r2: f64,
    pub eps_ij: f64,
    pub warnings: Vec<String>,
}

pub fn pair_inner_asymptotic(pair: &SpikePair, dom: &Domain) -> Result<PairExpansion> {
    let dim = dom.dim();
    let (bi, bj) = (&pair.bi, &pair.bj);
    if bi.a.len() != dim.n() || bj.a.len() != dim.n() {
        return Err(Error::InvalidParameter("pair and domain dimensions differ".into()));
    }
    let c1 = constants_for(dim)?.cbar1;
    let nf = dim.nf();
    let k = dim.k();
    let e = eps_ij(bi, bj);
    let h = robin_h(dom, &bi.a, &bj.a)?;
    let ha = grad_h_a(dom, &bi.a, &bj.a)?;
    let w = (bi.lambda * bj.lambda).powf(-k);
    let da = deps_da_scaled(bi, bj);
    let mut warnings = Vec::new();
    let mut boundary = 0.0;
    for (name, b) in [("i", bi), ("j", bj)] {
        let ld = b.lambda * dom.dist_boundary_unchecked(&b.a);
        if ld < crate::domain::DEFAULT_LAMBDA_D_THRESHOLD {
            warnings.push(format!("lambda_{name} d_{name} = {ld:.3e} is not large"));
        }
        if ld.is_finite() {
            boundary += ld.ln().max(0.0) / ld.powf(nf);
        }
    }
    if e > EPS_SMALL {
        warnings.push(format!("eps_ij = {e:.3e} is not small"));
    }
    let r1 = boundary + e.powf(nf / (nf - 2.0)) * (1.0 / e).ln().max(0.0);
    let r2 = boundary + bj.lambda * dist2(&bi.a, &bj.a).sqrt() * e.powf((nf + 1.0) / (nf - 2.0));
    Ok(PairExpansion {
        pp: c1 * (e - h * w),
        plam: c1 * (deps_dlambda_scaled(bi, bj) + k * h * w),
        pa: (0..dim.n()).map(|d| c1 * (da[d] - w * ha[d] / bi.lambda)).collect(),
        r1,
        r2,
        eps_ij: e,
        warnings,
    })
}

/// Pair inner products by integration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairIntegrals {
    /// `∫ δ_i^p Pδ_j = ⟨Pδ_i, Pδ_j⟩`.
    pub pp: IntegralResult,
    /// `∫ δ_j^p λ_i∂_λPδ_i`.
    pub plam: IntegralResult,
    /// `∫ δ_j^p λ_i^{-1}∂_aPδ_i`, by component.
    pub pa: Vec<IntegralResult>,
    /// `∫ (Pδ_j)_+^p Pδ_i`.
    pub estf: IntegralResult,
}

/// Axisymmetric quadrature when both centers are collinear with the ball center (any two
/// points in whole space), Monte Carlo otherwise or when the plan asks for it.
pub fn pair_inner_quadrature(pair: &SpikePair, dom: &Domain, plan: &PairingPlan) -> Result<PairIntegrals> {
    let dim: Dimension = dom.dim();
    let n = dim.n();
    let p = dim.p();
    let pi = ProjectedBubble::with_threshold(pair.bi.clone(), dom.clone(), 0.0)?;
    let pj = ProjectedBubble::with_threshold(pair.bj.clone(), dom.clone(), 0.0)?;
    let geom = Geometry::resolve(
        dom,
        &[(pair.bi.a.as_slice(), pair.bi.lambda), (pair.bj.a.as_slice(), pair.bj.lambda)],
        plan,
    )?;
    let axis = geom.axis().map(|e| e.to_vec());
    let na = if axis.is_some() { 1 } else { n };
    let res = geom.integrate(
        dom,
        3 + na,
        |y, out| {
            let di = delta_profile(dim, pi.base.lambda, pi.base.dist2(y));
            let dj = delta_profile(dim, pj.base.lambda, pj.base.dist2(y));
            let djp = dj.powf(p);
            let pdi = pi.value(y);
            out[0] = di.powf(p) * pj.value(y);
            out[1] = djp * pi.lambda_derivative(y);
            out[2] = pj.value(y).max(0.0).powf(p) * pdi;
            let mut g = [0.0; MAX_DIM];
            pi.a_derivative_into(y, &mut g[..n]);
            match &axis {
                Some(e) => out[3] = djp * (0..n).map(|d| g[d] * e[d]).sum::<f64>(),
                None => (0..n).for_each(|d| out[3 + d] = djp * g[d]),
            }
        },
        plan,
    )?;
    let pa = match &axis {
        Some(e) => e.iter().map(|c| res[3].scaled(*c)).collect(),
        None => res[3..].to_vec(),
    };
    Ok(PairIntegrals { pp: res[0], plam: res[1], pa, estf: res[2] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BallDomain, WholeSpace};
    use crate::quadrature::{MCPlan, QuadOptions};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn b(a: Vec<f64>, l: f64) -> BubbleParams {
        BubbleParams::new(a, l).unwrap()
    }

    fn det() -> PairingPlan {
        PairingPlan::deterministic(QuadOptions { rel_tol: 1e-9, ..Default::default() })
    }

    #[test]
    fn coincident_equal_bubbles() {
        for n in 3..=7 {
            let x = b(vec![0.1; n], 17.0);
            let want = 2f64.powf(-(n as f64 - 2.0) / 2.0);
            assert!((eps_ij(&x, &x) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn separated_limit() {
        let l = 1e3;
        let bi = b(vec![0.3, 0.0, 0.0, 0.0], l);
        let bj = b(vec![-0.2, 0.0, 0.0, 0.0], l);
        let lead = (l * l * 0.25).powf(-1.0);
        assert!((eps_ij(&bi, &bj) / lead - 1.0).abs() < 1e-4);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.random_range(3..=6);
            let ai: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
            let aj: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
            let (li, lj) = (rng.random_range(2.0..50.0), rng.random_range(2.0..50.0));
            let (bi, bj) = (b(ai.clone(), li), b(aj.clone(), lj));
            let h = 1e-5;
            let fd = (eps_ij(&b(ai.clone(), li * (1.0 + h)), &bj) - eps_ij(&b(ai.clone(), li * (1.0 - h)), &bj))
                / (2.0 * h);
            let an = deps_dlambda_scaled(&bi, &bj);
            assert!((fd - an).abs() < 1e-8 * an.abs().max(1e-3 * eps_ij(&bi, &bj)), "{fd} vs {an}");
            let g = deps_da_scaled(&bi, &bj);
            for d in 0..n {
                let hx = 1e-6;
                let mut p = ai.clone();
                let mut m = ai.clone();
                p[d] += hx;
                m[d] -= hx;
                let fd = (eps_ij(&b(p, li), &bj) - eps_ij(&b(m, li), &bj)) / (2.0 * hx) / li;
                let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
                assert!((fd - g[d]).abs() < 1e-8 * scale.max(1e-300), "{fd} vs {}", g[d]);
            }
        }
    }

    #[test]
    fn decreasing_in_distance() {
        let bi = b(vec![0.0; 4], 20.0);
        let mut last = f64::INFINITY;
        for k in 0..50 {
            let e = eps_ij(&bi, &b(vec![0.02 * k as f64, 0.0, 0.0, 0.0], 35.0));
            assert!(e < last);
            last = e;
        }
    }

    proptest! {
        #[test]
        fn interaction_bound(n in 3usize..8, li in 1.0f64..1e4, lj in 1.0f64..1e4, d in 1e-3f64..2.0) {
            let bi = b(vec![0.0; n], li);
            let mut aj = vec![0.0; n];
            aj[0] = d;
            let bj = b(aj, lj);
            let bound = (li * lj * d * d).powf(-(n as f64 - 2.0) / 2.0);
            prop_assert!(eps_ij(&bi, &bj) <= (1.0 + 1e-12) * bound);
            prop_assert_eq!(eps_ij(&bi, &bj), eps_ij(&bj, &bi));
        }
    }

    #[test]
    fn asymptotic_symmetry_and_lambda_derivative() {
        let dom: Domain = BallDomain::unit(4).unwrap().into();
        let pair = SpikePair::new(b(vec![0.3, 0.1, 0.0, 0.0], 40.0), b(vec![-0.2, -0.3, 0.1, 0.0], 55.0)).unwrap();
        let x = pair_inner_asymptotic(&pair, &dom).unwrap();
        let y = pair_inner_asymptotic(&pair.swapped(), &dom).unwrap();
        assert!((x.pp - y.pp).abs() <= 1e-14 * x.pp.abs());
        let h = 1e-5;
        let at = |l: f64| {
            let mut q = pair.clone();
            q.bi.lambda = l;
            pair_inner_asymptotic(&q, &dom).unwrap().pp
        };
        let fd = (at(40.0 * (1.0 + h)) - at(40.0 * (1.0 - h))) / (2.0 * h);
        assert!((fd - x.plam).abs() < 1e-7 * x.plam.abs(), "{fd} vs {}", x.plam);
        assert!(x.warnings.is_empty());
    }

    #[test]
    fn whole_space_normalization() {
        let dom: Domain = WholeSpace::new(4).unwrap().into();
        let c1 = constants_for(dom.dim()).unwrap().cbar1;
        let pair = SpikePair::new(b(vec![0.0; 4], 1.0), b(vec![1e3, 0.0, 0.0, 0.0], 1.0)).unwrap();
        let q = pair_inner_quadrature(&pair, &dom, &det()).unwrap();
        let r = q.pp.value / eps_ij(&pair.bi, &pair.bj);
        assert!((r / c1 - 1.0).abs() < 0.01, "{r} vs {c1}");
        let x = pair_inner_asymptotic(&pair, &dom).unwrap();
        assert!((x.pp / q.pp.value - 1.0).abs() < 0.01);
    }

    #[test]
    fn self_pair_is_norm() {
        let dom: Domain = BallDomain::unit(4).unwrap().into();
        let c = constants_for(dom.dim()).unwrap();
        let x = b(vec![0.0; 4], 320.0);
        let q = pair_inner_quadrature(&SpikePair::new(x.clone(), x).unwrap(), &dom, &det()).unwrap();
        let lead = c.sn_pow - c.cbar1 / (320.0f64 * 320.0);
        let rem = (320.0f64).ln() / 320f64.powi(4);
        assert!((q.pp.value - lead).abs() < 50.0 * c.cbar1 * rem, "{} vs {lead}", q.pp.value);
    }

    #[test]
    fn collinear_pair_expansion() {
        let dom: Domain = BallDomain::unit(4).unwrap().into();
        let pair = SpikePair::new(b(vec![0.4, 0.0, 0.0, 0.0], 200.0), b(vec![-0.3, 0.0, 0.0, 0.0], 250.0)).unwrap();
        let q = pair_inner_quadrature(&pair, &dom, &det()).unwrap();
        let x = pair_inner_asymptotic(&pair, &dom).unwrap();
        assert!((q.pp.value / x.pp - 1.0).abs() < 0.05, "{:?} vs {}", q.pp, x.pp);
        assert!(q.pa[1].value == 0.0 && q.pa[2].value == 0.0);
    }

    #[test]
    fn off_axis_pairs_need_monte_carlo() {
        let dom: Domain = BallDomain::unit(3).unwrap().into();
        let pair = SpikePair::new(b(vec![0.4, 0.0, 0.0], 20.0), b(vec![0.0, 0.3, 0.0], 20.0)).unwrap();
        assert!(matches!(pair_inner_quadrature(&pair, &dom, &det()), Err(Error::Configuration(_))));
        let mc = PairingPlan { mc: MCPlan::default().with_samples(100_000), ..Default::default() };
        let r = pair_inner_quadrature(&pair, &dom, &mc).unwrap();
        assert_eq!(r.pp.backend, crate::quadrature::Backend::ImportanceMC);
        assert_eq!(r.pa.len(), 3);
    }

    #[test]
    fn backends_agree_on_random_collinear_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dom: Domain = BallDomain::unit(4).unwrap().into();
        let mut hits = 0;
        for c in 0..10 {
            let mut e: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nrm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            e.iter_mut().for_each(|v| *v /= nrm);
            let (ti, tj) = (rng.random_range(0.1..0.6), -rng.random_range(0.1..0.6));
            let pair = SpikePair::new(
                b(e.iter().map(|v| v * ti).collect(), rng.random_range(5.0..20.0)),
                b(e.iter().map(|v| v * tj).collect(), rng.random_range(5.0..20.0)),
            )
            .unwrap();
            let d = pair_inner_quadrature(&pair, &dom, &det()).unwrap();
            let plan = PairingPlan::monte_carlo(MCPlan::default().with_samples(200_000).with_seed(c));
            let m = pair_inner_quadrature(&pair, &dom, &plan).unwrap();
            if (d.pp.value - m.pp.value).abs() <= 3.0 * m.pp.stderr_or_bound {
                hits += 1;
            }
        }
        // Three standard errors cover 99.7%; allow one stray draw in ten.
        assert!(hits >= 9, "{hits}");
    }
}
