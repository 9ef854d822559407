use rayon::prelude::*;

use super::fit::{affine_fit, rate_fit, richardson_zero};
use super::{Check, LadderPoint, LadderStudy, StudyConfig, StudyId, Thresholds};
use crate::bubble::{constants_for, delta_profile, loglog_decompose, psi0_profile, Nonlinearity, UniversalConstants};
use crate::constructor::{lambda_from_mu, SpikeAnsatz};
use crate::domain::{grad_h_a, robin_h, BallDomain, Domain, GreenDomain, ProjectedBubble};
use crate::interactions::{deps_dlambda_scaled, eps_ij, pair_inner_asymptotic, pair_inner_quadrature, SpikePair};
use crate::quadrature::axisym::{integrate_axisym_vec, Focus};
use crate::quadrature::{grad_pairings, AxialFrame, AxisymRegion, IntegralResult, PairingPlan};
use crate::reduced::{landscape_point, SpikePattern};
use crate::{BubbleParams, Result};

fn domain(cfg: &StudyConfig) -> Result<Domain> {
    Ok(BallDomain::new(vec![0.0; cfg.n], cfg.radius)?.into())
}

fn plan(cfg: &StudyConfig) -> PairingPlan {
    PairingPlan { quad: cfg.quad.clone(), mc: cfg.mc.clone(), ..PairingPlan::default() }
}

fn err(r: &IntegralResult) -> f64 {
    r.stderr_or_bound
}

/// Exponent check on `|residual|` against the ladder variable, or `None` when a residual vanishes.
fn exponent_check(name: &str, xs: &[f64], res: &[f64], limit: f64, at_most: bool) -> (Option<super::RateFit>, Option<Check>) {
    let ys: Vec<f64> = res.iter().map(|r| r.abs()).collect();
    match rate_fit(xs, &ys) {
        Ok(f) => {
            let c = if at_most { Check::at_most(name, f.exponent, limit) } else { Check::at_least(name, f.exponent, limit) };
            (Some(f), Some(c))
        }
        Err(_) => (None, None),
    }
}

struct NormPoint {
    lambda: f64,
    direct: Vec<IntegralResult>,
    exterior: Vec<IntegralResult>,
    h: f64,
}

fn norm_point(cfg: &StudyConfig, dom: &Domain, a: &[f64], lambda: f64) -> Result<NormPoint> {
    let dim = dom.dim();
    let n = dim.n();
    let p = dim.p();
    let norm_a = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut axis = vec![0.0; n];
    if norm_a > 0.0 {
        axis.iter_mut().zip(a).for_each(|(e, v)| *e = v / norm_a);
    } else {
        axis[0] = 1.0;
    }
    let frame = AxialFrame::new(vec![0.0; n], &axis)?;
    let pb = ProjectedBubble::with_threshold(BubbleParams::new(a.to_vec(), lambda)?, dom.clone(), 0.0)?;
    let h = robin_h(dom, a, a)?;
    let foci = [Focus { t: frame.t(a), scale: 1.0 / lambda }];
    let direct = integrate_axisym_vec(
        dim,
        &frame,
        AxisymRegion::Ball { center_t: 0.0, radius: cfg.radius },
        &foci,
        3,
        |y, out| {
            let dp = delta_profile(dim, lambda, pb.base.dist2(y)).powf(p);
            out[0] = dp * pb.value(y);
            out[1] = dp * pb.lambda_derivative(y);
            out[2] = dp * (dom.robin(a, y) - h);
        },
        &cfg.quad,
    )?;
    let exterior = integrate_axisym_vec(
        dim,
        &frame,
        AxisymRegion::Exterior { center_t: 0.0, radius: cfg.radius },
        &foci,
        3,
        |y, out| {
            let r2 = pb.base.dist2(y);
            let d = delta_profile(dim, lambda, r2);
            let dp = d.powf(p);
            out[0] = dp * d;
            out[1] = dp * psi0_profile(dim, lambda, r2);
            out[2] = dp;
        },
        &cfg.quad,
    )?;
    Ok(NormPoint { lambda, direct, exterior, h })
}

/// `‖Pδ‖²` or `⟨Pδ, λ∂_λPδ⟩` along a λ-ladder.
///
/// The residual is evaluated from the pieces that are small by themselves: the part of the
/// integrals outside Ω and the variation of `H(a, ·)` inside it, since the direct measurement
/// cancels to rounding level at the top of the ladder. The direct value is kept as `measured`
/// and the two routes are cross-checked.
pub(super) fn norm(cfg: &StudyConfig) -> Result<LadderStudy> {
    let dom = domain(cfg)?;
    let dim = dom.dim();
    let c = constants_for(dim)?;
    let t = cfg.thresholds();
    let (nf, k) = (dim.nf(), dim.k());
    let a = cfg.centers().remove(0);
    let d = dom.dist_boundary_unchecked(&a);
    let ladder = cfg.ladder();
    let raw: Vec<NormPoint> = ladder.par_iter().map(|l| norm_point(cfg, &dom, &a, *l)).collect::<Result<_>>()?;
    let lambda_dir = cfg.study == StudyId::NormLambdaDerivative;
    let mut points = Vec::with_capacity(raw.len());
    let mut worst_consistency = 0.0f64;
    for q in &raw {
        let l = q.lambda;
        let amp = dim.c0() * l.powf(-k);
        let corr = c.cbar1 * q.h / l.powf(nf - 2.0);
        let (e, ie) = (&q.exterior, &q.direct);
        let (measured, predicted, residual, error, direct_err) = if lambda_dir {
            let r = -e[1].value + k * amp * (ie[2].value - q.h * e[2].value);
            let er = err(&e[1]) + k * amp * (err(&ie[2]) + q.h.abs() * err(&e[2]));
            (ie[1].value, k * corr, r, er, err(&ie[1]))
        } else {
            let r = -e[0].value - amp * ie[2].value + amp * q.h * e[2].value;
            let er = err(&e[0]) + amp * (err(&ie[2]) + q.h.abs() * err(&e[2]));
            (ie[0].value, c.sn_pow - corr, r, er, err(&ie[0]))
        };
        let gap = (measured - predicted - residual).abs();
        let budget = 10.0 * (direct_err + error) + 64.0 * f64::EPSILON * c.sn_pow;
        worst_consistency = worst_consistency.max(gap / budget);
        let ld = l * d;
        points.push(LadderPoint {
            x: l,
            series: None,
            measured,
            predicted,
            residual,
            error,
            normalized: Some(residual / (c.sn_pow * ld.ln() / ld.powf(nf))),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let res: Vec<f64> = points.iter().map(|p| p.residual).collect();
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let (fit, ex) = exponent_check("remainder_exponent", &xs, &res, -(nf - t.exponent_slack), true);
    match ex {
        Some(ch) => checks.push(ch),
        None => notes.push("a residual vanished; exponent not fitted".into()),
    }
    // coefficient of λ^{-(n-2)} from the direct values, with a λ^{-2} correction column
    let target = if lambda_dir { k * c.cbar1 * raw[0].h } else { c.cbar1 * raw[0].h };
    let ys: Vec<f64> = points
        .iter()
        .map(|p| {
            let s = if lambda_dir { p.measured } else { c.sn_pow - p.measured };
            s * p.x.powf(nf - 2.0)
        })
        .collect();
    let gs: Vec<f64> = xs.iter().map(|l| l.powi(-2)).collect();
    let (coef, _) = affine_fit(&gs, &ys);
    if target != 0.0 {
        checks.push(Check::at_most("coefficient_rel_error", (coef / target - 1.0).abs(), t.coefficient_tol));
    }
    notes.push(format!("fitted coefficient {coef:.10e}, expected {target:.10e}"));
    if !lambda_dir {
        let top = points.last().unwrap();
        checks.push(Check::at_most("endpoint_rel_gap", (top.measured / c.sn_pow - 1.0).abs(), t.endpoint_tol));
    }
    checks.push(Check::at_most("decomposition_consistency", worst_consistency, 1.0));
    Ok(LadderStudy::conclude(cfg.clone(), points, fit, checks, notes, true))
}

/// Two-spike inner products along a λ-ladder, `λ_j = lambda_ratio · λ_i`.
pub(super) fn pair(cfg: &StudyConfig) -> Result<LadderStudy> {
    let dom = domain(cfg)?;
    let dim = dom.dim();
    let c = constants_for(dim)?;
    let t = cfg.thresholds();
    let centers = cfg.centers();
    if centers.len() != 2 {
        return Err(crate::Error::Configuration("pair studies take exactly two centers".into()));
    }
    let gamma = cfg.gamma();
    let plan = plan(cfg);
    let ladder = cfg.ladder();
    let rows: Vec<_> = ladder
        .par_iter()
        .map(|&l| -> Result<_> {
            let bi = BubbleParams::new(centers[0].clone(), l)?;
            let bj = BubbleParams::new(centers[1].clone(), cfg.lambda_ratio * l)?;
            let pair = SpikePair::new(bi, bj)?.with_signs(gamma[0], gamma[1])?;
            let q = pair_inner_quadrature(&pair, &dom, &plan)?;
            let qs = pair_inner_quadrature(&pair.swapped(), &dom, &plan)?;
            let asym = pair_inner_asymptotic(&pair, &dom)?;
            Ok((l, q, qs, asym))
        })
        .collect::<Result<_>>()?;
    let estf = cfg.study == StudyId::PairEstf;
    let mut points = Vec::with_capacity(rows.len());
    for (l, q, _, asym) in &rows {
        let (measured, predicted, error) = if estf {
            (q.estf.value - q.pp.value, 0.0, err(&q.estf) + err(&q.pp))
        } else {
            (q.pp.value, asym.pp, err(&q.pp))
        };
        let residual = measured - predicted;
        points.push(LadderPoint {
            x: *l,
            series: None,
            measured,
            predicted,
            residual,
            error,
            normalized: Some(residual / (c.cbar1 * asym.r1)),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let res: Vec<f64> = points.iter().map(|p| p.residual).collect();
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let (fit, ex) = exponent_check("remainder_exponent", &xs, &res, -(dim.nf() - t.exponent_slack), true);
    match ex {
        Some(ch) => checks.push(ch),
        None => notes.push("a residual vanished; exponent not fitted".into()),
    }
    let sup = points.iter().filter_map(|p| p.normalized).fold(0.0f64, |m, v| m.max(v.abs()));
    checks.push(Check::at_most("normalized_sup", sup, t.remainder_constant));
    let top = points.last().unwrap();
    let (_, q, qs, asym) = rows.last().unwrap();
    if !estf {
        checks.push(Check::at_most("top_relative_residual", (top.residual / top.predicted).abs(), t.pair_rel_tol));
    }
    let asym_gap = ((q.pp.value - qs.pp.value) / q.pp.value).abs();
    checks.push(Check::at_most("swap_asymmetry", asym_gap, t.pair_rel_tol));
    notes.push(format!("eps_ij at the top rung {:.3e}", asym.eps_ij));
    for w in &asym.warnings {
        notes.push(w.clone());
    }
    Ok(LadderStudy::conclude(cfg.clone(), points, fit, checks, notes, true))
}

struct GradientGeometry {
    pattern: SpikePattern,
    centers: Vec<Vec<f64>>,
    big_lambda: Vec<f64>,
}

fn ansatz_at(g: &GradientGeometry, dim: crate::Dimension, c: &UniversalConstants, eps: f64) -> Result<SpikeAnsatz> {
    let lambda = g.big_lambda.iter().map(|m| lambda_from_mu(dim, c.cbar, eps, *m)).collect();
    SpikeAnsatz::new(g.pattern.clone(), eps, vec![1.0; g.pattern.m()], lambda, g.centers.clone())
}

/// Remainder scales of the three gradient expansions for spike `i`.
fn remainder(study: StudyId, s: &SpikeAnsatz, dom: &Domain, i: usize, tau: f64) -> Result<f64> {
    let dim = dom.dim();
    let nf = dim.nf();
    let b = s.bubbles()?;
    let li = s.lambda[i];
    let di = dom.dist_boundary_unchecked(&s.a[i]);
    let lll = (dim.k() * li.ln()).ln().max(1.0);
    let eps = s.eps;
    let boundary_n: f64 = b
        .iter()
        .map(|bb| {
            let ld = bb.lambda * dom.dist_boundary_unchecked(&bb.a);
            ld.ln().max(0.0) / ld.powf(nf)
        })
        .sum();
    let mut r = match study {
        StudyId::GradientAlpha => {
            eps * lll + b.iter().map(|bb| (bb.lambda * dom.dist_boundary_unchecked(&bb.a)).powf(2.0 - nf)).sum::<f64>()
        }
        StudyId::GradientLambda => {
            eps / li.ln().powi(2)
                + (li * di).powf(-(2.0 * nf - 4.0))
                + li.powf(-(1.0 - tau) * nf) * di.powf(-2.0 * nf)
                + (eps * lll).powi(2)
                + boundary_n
        }
        _ => (eps * lll).powi(2) + boundary_n,
    };
    for j in (0..s.m()).filter(|j| *j != i) {
        let e = eps_ij(&b[i], &b[j]);
        let ln_inv = (1.0 / e).ln().max(0.0);
        r += match study {
            StudyId::GradientAlpha => e,
            StudyId::GradientLambda => e.powf(nf / (nf - 2.0)) * ln_inv + e * e * ln_inv.powf(2.0 * (nf - 2.0) / nf),
            _ => {
                let dist = crate::bubble::dist2(&s.a[i], &s.a[j]).sqrt();
                e.powf(nf / (nf - 2.0)) * ln_inv
                    + e * e * ln_inv.powf(2.0 * (nf - 2.0) / nf)
                    + b[j].lambda * dist * e.powf((nf + 1.0) / (nf - 2.0))
            }
        };
    }
    Ok(r)
}

/// Unit vector used to report the a-direction: along `a_i`, or the first axis at the center.
fn report_axis(a: &[f64]) -> Vec<f64> {
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut e = vec![0.0; a.len()];
    if norm > 0.0 {
        e.iter_mut().zip(a).for_each(|(x, v)| *x = v / norm);
    } else {
        e[0] = 1.0;
    }
    e
}

/// Leading terms of the gradient pairings at `α = 1` for spike `i`.
fn gradient_prediction(study: StudyId, s: &SpikeAnsatz, dom: &Domain, c: &UniversalConstants, i: usize) -> Result<f64> {
    let dim = dom.dim();
    let (nf, k) = (dim.nf(), dim.k());
    let b = s.bubbles()?;
    let li = s.lambda[i];
    let ai = &s.a[i];
    let alpha = s.alpha[i];
    Ok(match study {
        StudyId::GradientAlpha => alpha * (1.0 - alpha.powf(dim.p() - 1.0)) * c.sn_pow,
        StudyId::GradientLambda => {
            let mut v = c.gamma1 * s.eps / li.ln() - c.gamma2 * robin_h(dom, ai, ai)? / li.powf(nf - 2.0);
            for j in (0..s.m()).filter(|j| *j != i) {
                let gg = s.pattern.gamma(i) * s.pattern.gamma(j);
                let w = (li * s.lambda[j]).powf(-k);
                v -= gg * c.cbar1 * (deps_dlambda_scaled(&b[i], &b[j]) + k * robin_h(dom, ai, &s.a[j])? * w);
            }
            v
        }
        _ => {
            let e = report_axis(ai);
            let gh = grad_h_a(dom, ai, ai)?;
            let mut v: f64 = (0..dim.n()).map(|d| c.cbar1 * gh[d] * e[d]).sum::<f64>() / li.powf(nf - 1.0);
            for j in (0..s.m()).filter(|j| *j != i) {
                let gg = s.pattern.gamma(i) * s.pattern.gamma(j);
                let pa = pair_inner_asymptotic(&SpikePair::new(b[i].clone(), b[j].clone())?, dom)?.pa;
                v -= gg * (0..dim.n()).map(|d| pa[d] * e[d]).sum::<f64>();
            }
            v
        }
    })
}

/// Measured `(value, error)` of the gradient pairing of spike `i` for `study`.
fn gradient_measure(study: StudyId, s: &SpikeAnsatz, dom: &Domain, plan: &PairingPlan) -> Result<Vec<(f64, f64)>> {
    let nl = Nonlinearity::new(dom.dim(), s.eps)?;
    let p = grad_pairings(s, dom, &nl, plan)?;
    Ok((0..s.m())
        .map(|i| {
            let g = s.pattern.gamma(i);
            let ag = s.alpha[i] * g;
            match study {
                StudyId::GradientAlpha => (g * p.alpha[i].value, err(&p.alpha[i])),
                StudyId::GradientLambda => (ag * p.lambda[i].value, ag.abs() * err(&p.lambda[i])),
                _ => {
                    let e = report_axis(&s.a[i]);
                    let v: f64 = p.a[i].iter().zip(&e).map(|(r, x)| r.value * x).sum();
                    let er: f64 = p.a[i].iter().zip(&e).map(|(r, x)| err(r) * x.abs()).sum();
                    (ag * v, ag.abs() * er)
                }
            }
        })
        .collect())
}

/// Gradient pairings of the ansatz (`v = 0`) along an ε-ladder, one series per spike.
pub(super) fn gradient(cfg: &StudyConfig) -> Result<LadderStudy> {
    let dom = domain(cfg)?;
    let dim = dom.dim();
    let c = constants_for(dim)?;
    let t: Thresholds = cfg.thresholds();
    let pattern = SpikePattern::new(cfg.gamma())?;
    let centers = cfg.centers();
    let lp = landscape_point(&centers, &pattern, &dom)?;
    let geom = GradientGeometry { pattern, centers, big_lambda: lp.lambda.lambda.clone() };
    let plan = plan(cfg);
    let study = cfg.study;
    let ladder = cfg.ladder();
    let m = geom.pattern.m();
    let rows: Vec<_> = ladder
        .par_iter()
        .map(|&eps| -> Result<_> {
            let s = ansatz_at(&geom, dim, &c, eps)?;
            let meas = gradient_measure(study, &s, &dom, &plan)?;
            // same geometry at a larger ε, for the sign of the ε-term
            let bumped = if study == StudyId::GradientLambda {
                let mut s2 = s.clone();
                s2.eps = (2.0 * eps).min(0.3);
                Some(gradient_measure(study, &s2, &dom, &plan)?)
            } else {
                None
            };
            Ok((s, meas, bumped))
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::new();
    let mut monotone_violations = 0usize;
    let mut sup_tau = [0.0f64; 2];
    for i in 0..m {
        for (s, meas, bumped) in &rows {
            let (measured, error) = meas[i];
            let predicted = gradient_prediction(study, s, &dom, &c, i)?;
            let residual = measured - predicted;
            let rem = remainder(study, s, &dom, i, t.tau)?;
            if let Some(b) = bumped {
                if b[i].0 <= measured {
                    monotone_violations += 1;
                }
                for (slot, tau) in sup_tau.iter_mut().zip([0.05, 0.2]) {
                    let r = remainder(study, s, &dom, i, tau)?;
                    *slot = slot.max((residual / (c.sn_pow * r)).abs());
                }
            }
            points.push(LadderPoint {
                x: s.eps,
                series: (m > 1).then(|| format!("spike {i}")),
                measured,
                predicted,
                residual,
                error,
                normalized: Some(residual / (c.sn_pow * rem)),
            });
        }
    }
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let sup = points.iter().filter_map(|p| p.normalized).fold(0.0f64, |a, v| a.max(v.abs()));
    checks.push(Check::at_most("normalized_sup", sup, t.remainder_constant));
    let mut fit = None;
    for i in 0..m {
        let series: Vec<&LadderPoint> = points.iter().skip(i * ladder.len()).take(ladder.len()).collect();
        let xs: Vec<f64> = series.iter().map(|p| 1.0 / p.x).collect();
        let ys: Vec<f64> = series.iter().map(|p| p.normalized.unwrap()).collect();
        let (f, ch) = exponent_check("normalized_growth", &xs, &ys, t.growth_slack, true);
        match ch {
            Some(ch) => checks.push(ch),
            None => notes.push(format!("spike {i}: a normalized residual vanished; growth not fitted")),
        }
        if i == 0 {
            fit = f;
        }
    }
    if study == StudyId::GradientLambda {
        checks.push(Check::at_most("eps_monotonicity_violations", monotone_violations as f64, 0.0));
        notes.push(format!(
            "normalized sup at tau = 0.05: {:.3e}; at tau = 0.2: {:.3e}; at tau = {}: {sup:.3e}",
            sup_tau[0], sup_tau[1], t.tau
        ));
    }
    for w in rows.last().map(|(s, _, _)| s.membership(&dom, &Default::default()).warnings).unwrap_or_default() {
        notes.push(w);
    }
    Ok(LadderStudy::conclude(cfg.clone(), points, fit, checks, notes, true))
}

/// `(ln λ)²` times the remainder of the log-log split, one series per amplitude plus `U = 1`.
pub(super) fn loglog(cfg: &StudyConfig) -> Result<LadderStudy> {
    let dim = crate::Dimension::new(cfg.n)?;
    let t = cfg.thresholds();
    let ladder = cfg.ladder();
    let mut us = cfg.u_values.clone();
    if !us.contains(&1.0) {
        us.push(1.0);
    }
    let mut points = Vec::new();
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let mut fit = None;
    for &u in &us {
        let limit = -2.0 * u.ln().powi(2) / (dim.nf() - 2.0).powi(2);
        let vals: Vec<f64> = ladder
            .iter()
            .map(|&l| l.ln().powi(2) * loglog_decompose(dim, l, u).remainder)
            .collect();
        for (&l, &v) in ladder.iter().zip(&vals) {
            points.push(LadderPoint {
                x: l,
                series: Some(format!("U={u}")),
                measured: v,
                predicted: limit,
                residual: v - limit,
                error: 0.0,
                normalized: None,
            });
        }
        let xs: Vec<f64> = ladder.iter().map(|l| 1.0 / l.ln()).collect();
        let extrapolated = richardson_zero(&xs, &vals)?;
        let name = format!("extrapolated_limit_U={u}");
        if u == 1.0 {
            checks.push(Check::at_most(&name, extrapolated.abs(), t.extrapolation_tol * 1e-3));
        } else {
            checks.push(Check::at_most(&name, (extrapolated / limit - 1.0).abs(), t.extrapolation_tol));
            let first = (vals[0] - limit).abs();
            let last = (vals[vals.len() - 1] - limit).abs();
            checks.push(Check::at_most(&format!("trend_U={u}"), last / first, 1.0));
            if fit.is_none() {
                let lls: Vec<f64> = ladder.iter().map(|l| l.ln()).collect();
                let res: Vec<f64> = vals.iter().map(|v| v - limit).collect();
                fit = exponent_check("rate", &lls, &res, 0.0, true).0;
            }
        }
        notes.push(format!("U = {u}: extrapolated {extrapolated:.8e}, limit {limit:.8e}"));
    }
    Ok(LadderStudy::conclude(cfg.clone(), points, fit, checks, notes, false))
}

#[cfg(test)]
mod tests {
    use super::super::{run_study, Status};
    use super::*;

    #[test]
    fn loglog_study_passes_for_default_amplitudes() {
        let s = run_study(&StudyConfig::new(StudyId::Loglog)).unwrap();
        assert_eq!(s.status, Status::Pass, "{:?}", s.checks);
        // residual in 1/ln λ decays like (ln λ)^{-1}
        let f = s.fit.unwrap();
        assert!((f.exponent + 1.0).abs() < 0.2, "{f:?}");
    }

    #[test]
    fn norm_residual_pieces_agree_with_direct_values() {
        let mut cfg = StudyConfig::new(StudyId::NormExpansion);
        cfg.ladder = Some(vec![20.0, 40.0, 80.0, 160.0]);
        let s = run_study(&cfg).unwrap();
        let c = s.checks.iter().find(|c| c.name == "decomposition_consistency").unwrap();
        assert!(c.pass, "{c:?}");
    }

    #[test]
    fn off_center_norm_study_sees_the_robin_coefficient() {
        // H(a, a) = (1 - |a|²)^{-2} at |a| = 0.3
        let mut cfg = StudyConfig::new(StudyId::NormExpansion);
        cfg.centers = Some(vec![vec![0.3, 0.0, 0.0, 0.0]]);
        cfg.ladder = Some(vec![40.0, 80.0, 160.0, 320.0, 640.0]);
        let s = run_study(&cfg).unwrap();
        let c = s.checks.iter().find(|c| c.name == "coefficient_rel_error").unwrap();
        assert!(c.pass, "{:?}", s);
    }

    #[test]
    fn central_a_pairing_vanishes() {
        let mut cfg = StudyConfig::new(StudyId::GradientA);
        cfg.centers = Some(vec![vec![0.0; 4]]);
        cfg.ladder = Some(vec![1e-2, 1e-3, 1e-4, 1e-5]);
        let s = run_study(&cfg).unwrap();
        for p in &s.points {
            assert_eq!(p.predicted, 0.0);
            assert!(p.measured.abs() <= 10.0 * p.error + 1e-13, "{p:?}");
        }
    }

    #[test]
    fn studies_are_reproducible() {
        let mut cfg = StudyConfig::new(StudyId::PairExpansion);
        cfg.ladder = Some(vec![20.0, 40.0, 80.0, 160.0]);
        let a = serde_json::to_string(&run_study(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_study(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
