//! Radial integrals `∫ f(|y|) dy = ω_{n-1} ∫ f(r) r^{n-1} dr`.

use super::gauss::{gauss_legendre, panel, KahanSum};
use super::{Backend, IntegralResult, QuadOptions};
use crate::bubble::Dimension;
use crate::{Error, Result};

const INITIAL_PANELS: usize = 8;

/// `∫_0^upper f(r) dr` (or `∫_0^∞` when `upper` is `None`) through `r = scale · t/(1-t)`.
///
/// Panels are uniform in `t` and doubled until the change is below `rel_tol · ∫|f|`.
pub fn integrate_half_line<F>(f: F, scale: f64, upper: Option<f64>, opts: &QuadOptions) -> Result<IntegralResult>
where
    F: Fn(f64) -> f64,
{
    if !(scale > 0.0) {
        return Err(Error::InvalidParameter(format!("radial scale must be positive, got {scale}")));
    }
    let t_max = match upper {
        None => 1.0,
        Some(r) if r > 0.0 => r / (r + scale),
        Some(r) => return Err(Error::InvalidParameter(format!("upper limit must be positive, got {r}"))),
    };
    let rule = gauss_legendre(opts.order);
    let g = |t: f64| {
        let one_m = 1.0 - t;
        if one_m <= 0.0 {
            return (0.0, 0.0);
        }
        let v = f(scale * t / one_m) * scale / (one_m * one_m);
        (v, v.abs())
    };
    let level = |panels: usize| {
        let h = t_max / panels as f64;
        let mut acc = KahanSum::default();
        let mut abs = KahanSum::default();
        for i in 0..panels {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            acc.add(panel(rule, a, b, |t| g(t).0));
            abs.add(panel(rule, a, b, |t| g(t).1));
        }
        (acc.value(), abs.value())
    };

    let mut panels = INITIAL_PANELS;
    let (mut prev, _) = level(panels);
    let mut diff = f64::INFINITY;
    for _ in 0..=opts.max_level {
        panels *= 2;
        let (cur, l1) = level(panels);
        diff = (cur - prev).abs();
        if !cur.is_finite() {
            return Err(Error::QuadratureNotConverged { best: cur, achieved: f64::NAN });
        }
        if diff <= (opts.rel_tol * l1).max(opts.abs_tol).max(f64::MIN_POSITIVE) {
            return Ok(IntegralResult { value: cur, stderr_or_bound: diff, backend: Backend::Radial1D });
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged { best: prev, achieved: diff / prev.abs().max(f64::MIN_POSITIVE) })
}

/// `∫_{B(0, upper)} f(|y|) dy`, or the whole-space integral when `upper` is `None`.
pub fn integrate_radial<F>(
    dim: Dimension,
    f: F,
    scale: f64,
    upper: Option<f64>,
    opts: &QuadOptions,
) -> Result<IntegralResult>
where
    F: Fn(f64) -> f64,
{
    let n1 = dim.n() as i32 - 1;
    let omega = dim.sphere_area();
    integrate_half_line(|r| f(r) * r.powi(n1), scale, upper, opts).map(|r| r.scaled(omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn beta_integral_n4() {
        let d = Dimension::new(4).unwrap();
        let r = integrate_radial(d, |r| (1.0 + r * r).powi(-4), 1.0, None, &QuadOptions::default()).unwrap();
        assert!((r.value - PI * PI / 6.0).abs() < 1e-11 * PI * PI / 6.0, "{}", r.value);
    }

    #[test]
    fn ball_volume() {
        let d = Dimension::new(4).unwrap();
        let r = integrate_radial(d, |_| 1.0, 1.0, Some(1.0), &QuadOptions::default()).unwrap();
        assert!((r.value - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let opts = QuadOptions { max_level: 1, ..Default::default() };
        let e = integrate_half_line(|r| (r * 1e4).sin().abs(), 1.0, Some(10.0), &opts).unwrap_err();
        assert!(matches!(e, Error::QuadratureNotConverged { .. }));
    }
}
