use serde::{Deserialize, Serialize};

use super::axisym::{integrate_axisym_vec, AxialFrame, AxisymRegion, Focus};
use super::mc::{integrate_mc_vec, SpikeProposal};
use super::{IntegralResult, MCPlan, QuadOptions};
use crate::bubble::{Nonlinearity, MAX_DIM};
use crate::constructor::{assemble, SpikeAnsatz};
use crate::domain::{Domain, GreenDomain};
use crate::{Error, Result};

/// Which engine evaluates integrals over the domain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Axisymmetric quadrature when the spike centers are collinear with the domain center,
    /// Monte Carlo otherwise.
    #[default]
    Auto,
    Deterministic,
    MonteCarlo,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairingPlan {
    pub method: Method,
    pub quad: QuadOptions,
    pub mc: MCPlan,
}

impl PairingPlan {
    pub fn deterministic(quad: QuadOptions) -> Self {
        PairingPlan { method: Method::Deterministic, quad, ..Default::default() }
    }

    pub fn monte_carlo(mc: MCPlan) -> Self {
        PairingPlan { method: Method::MonteCarlo, mc, ..Default::default() }
    }
}

/// Test direction for `⟨∇I_ε(u), w⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `w = Pδ_i`.
    Alpha(usize),
    /// `w = λ_i ∂Pδ_i/∂λ_i`.
    Lambda(usize),
    /// `w = λ_i^{-1} ∂Pδ_i/∂(a_i)_k`.
    A(usize, usize),
}

/// Resolved integration geometry for a set of concentration points.
pub(crate) enum Geometry {
    Axial { frame: AxialFrame, region: AxisymRegion, foci: Vec<Focus> },
    Sampled { spikes: Vec<SpikeProposal> },
}

impl Geometry {
    pub(crate) fn resolve(dom: &Domain, centers: &[(&[f64], f64)], plan: &PairingPlan) -> Result<Geometry> {
        let sampled = || Geometry::Sampled {
            spikes: centers.iter().map(|(a, l)| SpikeProposal { a: a.to_vec(), lambda: *l }).collect(),
        };
        if plan.method == Method::MonteCarlo {
            return Ok(sampled());
        }
        match axial(dom, centers) {
            Ok(g) => Ok(g),
            Err(Error::Configuration(_)) if plan.method == Method::Auto => Ok(sampled()),
            Err(e) => Err(e),
        }
    }

    pub(crate) fn axis(&self) -> Option<&[f64]> {
        match self {
            Geometry::Axial { frame, .. } => Some(&frame.axis),
            Geometry::Sampled { .. } => None,
        }
    }

    pub(crate) fn integrate<F>(&self, dom: &Domain, k: usize, f: F, plan: &PairingPlan) -> Result<Vec<IntegralResult>>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        match self {
            Geometry::Axial { frame, region, foci } => {
                integrate_axisym_vec(dom.dim(), frame, *region, foci, k, f, &plan.quad)
            }
            Geometry::Sampled { spikes } => integrate_mc_vec(dom, spikes, k, f, &plan.mc),
        }
    }
}

fn axial(dom: &Domain, centers: &[(&[f64], f64)]) -> Result<Geometry> {
    let pts: Vec<&[f64]> = centers.iter().map(|c| c.0).collect();
    let (origin, region, length) = match dom.as_ball() {
        Some(b) => (b.center.clone(), AxisymRegion::Ball { center_t: 0.0, radius: b.radius }, b.radius),
        None => {
            let o = pts.first().map(|p| p.to_vec()).unwrap_or_else(|| vec![0.0; dom.dim().n()]);
            let len = pts.iter().map(|p| crate::bubble::dist2(p, &o).sqrt()).fold(1.0, f64::max);
            (o, AxisymRegion::Whole, len)
        }
    };
    let frame = AxialFrame::through(&origin, &pts, 1e-12, length)?;
    let foci = centers.iter().map(|(a, l)| Focus { t: frame.t(a), scale: 1.0 / l }).collect();
    Ok(Geometry::Axial { frame, region, foci })
}

fn ansatz_geometry(ansatz: &SpikeAnsatz, dom: &Domain, plan: &PairingPlan) -> Result<Geometry> {
    let centers: Vec<(&[f64], f64)> = ansatz.a.iter().map(|a| a.as_slice()).zip(ansatz.lambda.iter().copied()).collect();
    Geometry::resolve(dom, &centers, plan)
}

fn check(ansatz: &SpikeAnsatz, dom: &Domain, nl: &Nonlinearity) -> Result<()> {
    if nl.dim() != dom.dim() {
        return Err(Error::InvalidParameter("nonlinearity and domain dimensions differ".into()));
    }
    ansatz.validate()
}

/// `I_ε(u) = ½∫|∇u|² - ∫F_ε(u)` for `u = Σ α_i γ_i Pδ_i`.
///
/// The Dirichlet part is `½∫(Σ α_i γ_i δ_i^p) u`, which equals `½∫|∇u|²` up to the boundary
/// trace of the first-order projection.
#[allow(non_snake_case)]
pub fn energy_I(ansatz: &SpikeAnsatz, dom: &Domain, nl: &Nonlinearity, plan: &PairingPlan) -> Result<IntegralResult> {
    check(ansatz, dom, nl)?;
    let field = assemble(ansatz, dom)?;
    let geom = ansatz_geometry(ansatz, dom, plan)?;
    let r = geom.integrate(
        dom,
        1,
        |y, out| {
            let u = field.value(y);
            out[0] = 0.5 * field.source(y) * u - nl.antiderivative(u);
        },
        plan,
    )?;
    Ok(r[0])
}

/// `⟨∇I_ε(u), w⟩` for one direction.
pub fn grad_pairing(
    ansatz: &SpikeAnsatz,
    dom: &Domain,
    nl: &Nonlinearity,
    dir: Direction,
    plan: &PairingPlan,
) -> Result<IntegralResult> {
    pairings(ansatz, dom, nl, &[dir], plan).map(|v| v[0])
}

/// All pairings at once: `Pδ_i`, `λ_i∂_λPδ_i` and the `n` components of `λ_i^{-1}∂_aPδ_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pairings {
    pub alpha: Vec<IntegralResult>,
    pub lambda: Vec<IntegralResult>,
    pub a: Vec<Vec<IntegralResult>>,
}

pub fn grad_pairings(ansatz: &SpikeAnsatz, dom: &Domain, nl: &Nonlinearity, plan: &PairingPlan) -> Result<Pairings> {
    let m = ansatz.m();
    let n = dom.dim().n();
    let mut dirs = Vec::with_capacity(m * (n + 2));
    for i in 0..m {
        dirs.push(Direction::Alpha(i));
        dirs.push(Direction::Lambda(i));
        dirs.extend((0..n).map(|k| Direction::A(i, k)));
    }
    let v = pairings(ansatz, dom, nl, &dirs, plan)?;
    let mut it = v.chunks(n + 2);
    let mut out = Pairings { alpha: vec![], lambda: vec![], a: vec![] };
    for _ in 0..m {
        let c = it.next().unwrap();
        out.alpha.push(c[0]);
        out.lambda.push(c[1]);
        out.a.push(c[2..].to_vec());
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum Kernel {
    P(usize),
    L(usize),
    /// a-derivative projected on the symmetry axis.
    AxialA(usize),
    A(usize, usize),
}

fn pairings(
    ansatz: &SpikeAnsatz,
    dom: &Domain,
    nl: &Nonlinearity,
    dirs: &[Direction],
    plan: &PairingPlan,
) -> Result<Vec<IntegralResult>> {
    check(ansatz, dom, nl)?;
    let n = dom.dim().n();
    for d in dirs {
        let (Direction::Alpha(i) | Direction::Lambda(i) | Direction::A(i, _)) = *d;
        if i >= ansatz.m() || matches!(d, Direction::A(_, k) if *k >= n) {
            return Err(Error::InvalidParameter(format!("direction {d:?} out of range")));
        }
    }
    let field = assemble(ansatz, dom)?;
    let geom = ansatz_geometry(ansatz, dom, plan)?;
    let axis = geom.axis().map(|a| a.to_vec());
    let mut kernels: Vec<Kernel> = Vec::new();
    let mut map = Vec::with_capacity(dirs.len());
    for d in dirs {
        let (kern, factor) = match (*d, &axis) {
            (Direction::Alpha(i), _) => (Kernel::P(i), 1.0),
            (Direction::Lambda(i), _) => (Kernel::L(i), 1.0),
            (Direction::A(i, k), Some(e)) => (Kernel::AxialA(i), e[k]),
            (Direction::A(i, k), None) => (Kernel::A(i, k), 1.0),
        };
        let idx = match kernels.iter().position(|q| *q == kern) {
            Some(j) => j,
            None => {
                kernels.push(kern);
                kernels.len() - 1
            }
        };
        map.push((idx, factor));
    }
    // The integrand cancels exactly at a solution; measure convergence against the size of the
    // terms that cancel rather than against the integrand itself.
    let mut plan = plan.clone();
    if plan.quad.abs_tol == 0.0 {
        let s = crate::bubble::constants_for(dom.dim())?.sn_pow;
        let mass: f64 = ansatz.alpha.iter().map(|a| a.abs().powf(nl.p())).sum();
        plan.quad.abs_tol = 1e-3 * plan.quad.rel_tol * s * mass.max(1.0);
    }
    let plan = &plan;
    let res = geom.integrate(
        dom,
        kernels.len(),
        |y, out| {
            let r = field.source(y) - nl.f(field.value(y));
            let mut g = [0.0; MAX_DIM];
            for (slot, kern) in out.iter_mut().zip(&kernels) {
                let w = match *kern {
                    Kernel::P(i) => field.bubbles[i].value(y),
                    Kernel::L(i) => field.bubbles[i].lambda_derivative(y),
                    Kernel::AxialA(i) => {
                        field.bubbles[i].a_derivative_into(y, &mut g[..n]);
                        let e = axis.as_deref().unwrap();
                        (0..n).map(|k| g[k] * e[k]).sum()
                    }
                    Kernel::A(i, k) => {
                        field.bubbles[i].a_derivative_into(y, &mut g[..n]);
                        g[k]
                    }
                };
                *slot = r * w;
            }
        },
        plan,
    )?;
    Ok(map.into_iter().map(|(idx, f)| res[idx].scaled(f)).collect())
}

/// `∫_{B(center, r)} f` for a ball inside the domain, with the integration geometry of the
/// ansatz. Falls back to Monte Carlo when `center` is off the symmetry axis.
pub(crate) fn integrate_near<F>(
    ansatz: &SpikeAnsatz,
    dom: &Domain,
    center: &[f64],
    radius: f64,
    f: F,
    plan: &PairingPlan,
) -> Result<IntegralResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let geom = ansatz_geometry(ansatz, dom, plan)?;
    if let Geometry::Axial { frame, foci, .. } = &geom {
        if frame.off_axis(center) <= 1e-12 * dom.length_scale() {
            let t = frame.t(center);
            let region = AxisymRegion::Ball { center_t: t, radius };
            let mut inside: Vec<Focus> = foci.iter().copied().filter(|q| (q.t - t).abs() < radius).collect();
            if inside.is_empty() {
                inside.push(Focus { t, scale: radius });
            }
            let r = integrate_axisym_vec(dom.dim(), frame, region, &inside, 1, |y, out| out[0] = f(y), &plan.quad)?;
            return Ok(r[0]);
        }
        if plan.method == Method::Deterministic {
            return Err(Error::Configuration("ball center is off the symmetry axis".into()));
        }
    }
    let spikes: Vec<SpikeProposal> =
        ansatz.a.iter().zip(&ansatz.lambda).map(|(a, l)| SpikeProposal { a: a.clone(), lambda: *l }).collect();
    let r2 = radius * radius;
    let r = integrate_mc_vec(
        dom,
        &spikes,
        1,
        |y, out| out[0] = if crate::bubble::dist2(y, center) < r2 { f(y) } else { 0.0 },
        &plan.mc,
    )?;
    Ok(r[0])
}

/// `∫_Ω f` with the integration geometry of the ansatz.
pub(crate) fn integrate_over<F>(ansatz: &SpikeAnsatz, dom: &Domain, f: F, plan: &PairingPlan) -> Result<IntegralResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let geom = ansatz_geometry(ansatz, dom, plan)?;
    geom.integrate(dom, 1, |y, out| out[0] = f(y), plan).map(|v| v[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::constants_for;
    use crate::domain::{BallDomain, WholeSpace};
    use crate::reduced::SpikePattern;

    fn ball(n: usize) -> Domain {
        BallDomain::unit(n).unwrap().into()
    }

    fn plan() -> PairingPlan {
        PairingPlan::deterministic(QuadOptions { rel_tol: 1e-9, ..Default::default() })
    }

    fn single(n: usize, lambda: f64, alpha: f64, eps: f64, gamma: i8) -> SpikeAnsatz {
        SpikeAnsatz::new(SpikePattern::new(vec![gamma]).unwrap(), eps, vec![alpha], vec![lambda], vec![vec![0.0; n]])
            .unwrap()
    }

    #[test]
    fn zero_field_has_zero_energy() {
        let dom = ball(4);
        let nl = Nonlinearity::new(dom.dim(), 0.1).unwrap();
        let e = energy_I(&single(4, 50.0, 0.0, 0.1, 1), &dom, &nl, &plan()).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn energy_is_even() {
        let dom = ball(4);
        let nl = Nonlinearity::new(dom.dim(), 0.01).unwrap();
        let a = energy_I(&single(4, 40.0, 1.0, 0.01, 1), &dom, &nl, &plan()).unwrap();
        let b = energy_I(&single(4, 40.0, 1.0, 0.01, -1), &dom, &nl, &plan()).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn single_bubble_energy_is_sobolev_over_n() {
        for n in [3, 4, 5] {
            let dom = ball(n);
            let nl = Nonlinearity::new(dom.dim(), 0.0).unwrap();
            let e = energy_I(&single(n, 300.0, 1.0, 0.0, 1), &dom, &nl, &plan()).unwrap();
            let s = constants_for(dom.dim()).unwrap().sn_pow;
            let rel = (e.value / (s / n as f64) - 1.0).abs();
            assert!(rel < 0.01, "n={n}: {} vs {}", e.value, s / n as f64);
        }
    }

    #[test]
    fn energy_decreases_toward_center() {
        let dom = ball(4);
        let nl = Nonlinearity::new(dom.dim(), 0.0).unwrap();
        let mut last = f64::INFINITY;
        for r in [0.6, 0.4, 0.2, 0.0] {
            let ans = SpikeAnsatz::new(
                SpikePattern::positive(1).unwrap(),
                0.0,
                vec![1.0],
                vec![60.0],
                vec![vec![r, 0.0, 0.0, 0.0]],
            )
            .unwrap();
            let e = energy_I(&ans, &dom, &nl, &plan()).unwrap().value;
            assert!(e < last, "r={r}: {e} not below {last}");
            last = e;
        }
    }

    #[test]
    fn exact_bubble_is_critical_in_whole_space() {
        let dom: Domain = WholeSpace::new(4).unwrap().into();
        let nl = Nonlinearity::new(dom.dim(), 0.0).unwrap();
        let ans = single(4, 7.0, 1.0, 0.0, 1);
        let p = grad_pairings(&ans, &dom, &nl, &plan()).unwrap();
        let s = constants_for(dom.dim()).unwrap().sn_pow;
        assert!(p.lambda[0].value.abs() < 1e-8 * s, "{:?}", p.lambda[0]);
        assert!(p.alpha[0].value.abs() < 1e-8 * s, "{:?}", p.alpha[0]);
        assert!(p.a[0].iter().all(|v| v.value.abs() < 1e-8 * s));
    }

    #[test]
    fn alpha_direction_leading_term() {
        // ⟨∇I(u), Pδ⟩ ≈ α(1 - α^{p-1}) S at α = 1.05, up to O(λ^{-(n-2)}) and O(ε lnln λ).
        let dom = ball(4);
        let d = dom.dim();
        let s = constants_for(d).unwrap().sn_pow;
        let nl = Nonlinearity::new(d, 1e-4).unwrap();
        let alpha: f64 = 1.05;
        let lam = 200.0;
        let ans = single(4, lam, alpha, 1e-4, 1);
        let got = grad_pairing(&ans, &dom, &nl, Direction::Alpha(0), &plan()).unwrap().value;
        let lead = alpha * (1.0 - alpha.powf(d.p() - 1.0)) * s;
        let budget = 20.0 * (1.0 / (lam * lam) + 1e-4 * (lam.ln()).ln()) * s;
        assert!((got - lead).abs() < budget, "{got} vs {lead} (budget {budget})");
    }

    #[test]
    fn central_spike_has_no_a_pairing() {
        let dom = ball(4);
        let nl = Nonlinearity::new(dom.dim(), 1e-3).unwrap();
        let ans = single(4, 100.0, 1.0, 1e-3, 1);
        let p = grad_pairings(&ans, &dom, &nl, &plan()).unwrap();
        assert!(p.a[0].iter().all(|v| v.value.abs() < 1e-12));
    }

    #[test]
    fn backends_agree_off_axis() {
        let dom = ball(3);
        let nl = Nonlinearity::new(dom.dim(), 0.05).unwrap();
        let ans = SpikeAnsatz::new(
            SpikePattern::new(vec![1, -1]).unwrap(),
            0.05,
            vec![1.0, 1.0],
            vec![12.0, 15.0],
            vec![vec![0.3, 0.1, 0.0], vec![-0.2, -0.3, 0.1]],
        )
        .unwrap();
        assert!(matches!(
            energy_I(&ans, &dom, &nl, &plan()),
            Err(Error::Configuration(_))
        ));
        let auto = PairingPlan { mc: MCPlan::default().with_samples(400_000), ..Default::default() };
        let mc = energy_I(&ans, &dom, &nl, &auto).unwrap();
        assert_eq!(mc.backend, super::super::Backend::ImportanceMC);
        // Rotating the configuration onto a common axis is impossible, so compare with a second
        // seed instead.
        let other = PairingPlan { mc: auto.mc.clone().with_seed(99), ..auto.clone() };
        let mc2 = energy_I(&ans, &dom, &nl, &other).unwrap();
        let se = (mc.stderr_or_bound.powi(2) + mc2.stderr_or_bound.powi(2)).sqrt();
        assert!((mc.value - mc2.value).abs() < 4.0 * se);
    }

    #[test]
    fn mc_matches_axisym_on_collinear_pair() {
        let dom = ball(4);
        let nl = Nonlinearity::new(dom.dim(), 0.01).unwrap();
        let ans = SpikeAnsatz::new(
            SpikePattern::new(vec![1, 1]).unwrap(),
            0.01,
            vec![1.0, 1.0],
            vec![10.0, 14.0],
            vec![vec![0.4, 0.0, 0.0, 0.0], vec![-0.3, 0.0, 0.0, 0.0]],
        )
        .unwrap();
        let det = energy_I(&ans, &dom, &nl, &plan()).unwrap();
        let mc = energy_I(&ans, &dom, &nl, &PairingPlan::monte_carlo(MCPlan::default().with_samples(400_000))).unwrap();
        assert!((det.value - mc.value).abs() < 3.0 * mc.stderr_or_bound + det.stderr_or_bound, "{det:?} {mc:?}");
    }
}
