use serde::{Deserialize, Serialize};

use super::{assemble, SpikeAnsatz};
use crate::bubble::constants_for;
use crate::domain::{Domain, GreenDomain};
use crate::quadrature::functional::{integrate_near, integrate_over};
use crate::quadrature::{IntegralResult, PairingPlan};
use crate::reduced::CriticalPoint;
use crate::{Error, Result};

/// Dirichlet mass `∫_{B(x̄_i, r)} |∇u|²` around one limit point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeMass {
    pub spike: usize,
    pub requested_radius: f64,
    /// `min(r, d(x̄_i, ∂Ω))`.
    pub radius: f64,
    pub clipped: bool,
    pub mass: IntegralResult,
    /// `mass / S_n^{n/2}`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusRow {
    pub radius: f64,
    pub spikes: Vec<SpikeMass>,
    /// Total mass minus the masses of the balls of this row.
    pub exterior: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub eps: f64,
    pub sobolev: f64,
    pub total: IntegralResult,
    /// `total / (m S_n^{n/2})`.
    pub total_ratio: f64,
    pub rows: Vec<RadiusRow>,
}

/// Dirichlet masses of `u` near each limit point `x̄_i`, for every radius in `radii`.
pub fn concentration_report(
    ansatz: &SpikeAnsatz,
    dom: &Domain,
    cp: &CriticalPoint,
    radii: &[f64],
    plan: &PairingPlan,
) -> Result<ConcentrationReport> {
    if cp.x.len() != ansatz.m() {
        return Err(Error::InvalidParameter("critical point and ansatz sizes differ".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    let s = constants_for(dom.dim())?.sn_pow;
    let field = assemble(ansatz, dom)?;
    let energy = |y: &[f64]| field.grad_sq(y);
    let total = integrate_over(ansatz, dom, energy, plan)?;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut spikes = Vec::with_capacity(ansatz.m());
        let mut inside = 0.0;
        for (i, x) in cp.x.iter().enumerate() {
            let d = dom.dist_boundary_unchecked(x);
            let radius = r.min(d);
            let mass = integrate_near(ansatz, dom, x, radius, energy, plan)?;
            inside += mass.value;
            spikes.push(SpikeMass {
                spike: i,
                requested_radius: r,
                radius,
                clipped: radius < r,
                ratio: mass.value / s,
                mass,
            });
        }
        rows.push(RadiusRow { radius: r, spikes, exterior: total.value - inside });
    }
    Ok(ConcentrationReport {
        eps: ansatz.eps,
        sobolev: s,
        total_ratio: total.value / (ansatz.m() as f64 * s),
        total,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructor::asymptotic_ansatz;
    use crate::domain::BallDomain;
    use crate::quadrature::{integrate_radial, QuadOptions};
    use crate::bubble::{psi1_radial_factor, Dimension};
    use crate::reduced::{find_critical_points, SearchConfig, SpikePattern};

    #[test]
    fn central_mass_near_sobolev() {
        let dom: Domain = BallDomain::unit(4).unwrap().into();
        let pat = SpikePattern::positive(1).unwrap();
        let cp = find_critical_points(&pat, &dom, &SearchConfig::default()).unwrap().remove(0);
        let c = constants_for(dom.dim()).unwrap();
        let s = asymptotic_ansatz(1e-4, &pat, &cp, &c).unwrap();
        let plan = PairingPlan::deterministic(QuadOptions { rel_tol: 1e-9, ..Default::default() });
        let rep = concentration_report(&s, &dom, &cp, &[0.25, 0.5], &plan).unwrap();
        let q = rep.rows[0].spikes[0].ratio;
        assert!((0.97..=1.01).contains(&q), "{q}");
        // Oracle: whole-space mass of |∇δ|² outside B(0, 0.25), radial closed-form integrand.
        let d = Dimension::new(4).unwrap();
        let lam = s.lambda[0];
        let inner = integrate_radial(
            d,
            |r| {
                let g = psi1_radial_factor(d, lam, r * r) * lam * r;
                g * g
            },
            1.0 / lam,
            Some(0.25),
            &QuadOptions { rel_tol: 1e-10, ..Default::default() },
        )
        .unwrap()
        .value;
        let tail = c.sn_pow - inner;
        assert!(tail / c.sn_pow < 0.03, "{tail}");
        // the projection changes ∇u by O(λ^{-(n-2)/2}) inside the ball
        assert!((q - inner / c.sn_pow).abs() < 1e-3, "{q} vs {}", inner / c.sn_pow);
        assert!(!rep.rows[0].spikes[0].clipped);
        assert!(rep.rows[1].exterior < rep.rows[0].exterior);
    }
}
