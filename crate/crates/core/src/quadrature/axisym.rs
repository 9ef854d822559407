//! Integrals of axisymmetric integrands.
//!
//! Points are written `y = origin + t·axis + s·w` with `w ⊥ axis`, so that
//! `∫ f dy = ω_{n-2} ∫∫ f(t, s) s^{n-2} ds dt`. The half-plane is cut into slabs at the
//! midpoints between consecutive foci (the points where the integrand concentrates), and each
//! slab is integrated in polar coordinates `(ρ, θ)` around its focus. Radial panels grow
//! geometrically from the focus scale, and angular panels break wherever the slab boundary
//! changes from a plane to the sphere.

use rayon::prelude::*;

use super::gauss::{gauss_legendre, KahanSum};
use super::{Backend, IntegralResult, QuadOptions};
use crate::bubble::{dist2, Dimension, MAX_DIM};
use crate::{Error, Result};

/// Orthonormal pair `(axis, w)` through `origin`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxialFrame {
    pub origin: Vec<f64>,
    pub axis: Vec<f64>,
    pub perp: Vec<f64>,
}

impl AxialFrame {
    pub fn new(origin: Vec<f64>, axis: &[f64]) -> Result<Self> {
        let n = origin.len();
        if axis.len() != n || n < 2 {
            return Err(Error::InvalidParameter("axis and origin dimensions differ".into()));
        }
        let norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter("axis must be non-zero".into()));
        }
        let axis: Vec<f64> = axis.iter().map(|v| v / norm).collect();
        // Gram–Schmidt on the coordinate vector least aligned with the axis.
        let j = (0..n).min_by(|&i, &k| axis[i].abs().total_cmp(&axis[k].abs())).unwrap();
        let mut perp: Vec<f64> = (0..n).map(|i| if i == j { 1.0 } else { 0.0 } - axis[j] * axis[i]).collect();
        let pn = perp.iter().map(|v| v * v).sum::<f64>().sqrt();
        perp.iter_mut().for_each(|v| *v /= pn);
        Ok(AxialFrame { origin, axis, perp })
    }

    /// The line through `origin` containing every point of `points`, if there is one.
    /// When all points coincide with the origin, the first coordinate axis is used.
    pub fn through(origin: &[f64], points: &[&[f64]], rel_tol: f64, length: f64) -> Result<Self> {
        let n = origin.len();
        let far = points
            .iter()
            .map(|p| (dist2(p, origin), *p))
            .max_by(|a, b| a.0.total_cmp(&b.0));
        let axis: Vec<f64> = match far {
            Some((d2, p)) if d2.sqrt() > rel_tol * length => p.iter().zip(origin).map(|(a, b)| a - b).collect(),
            _ => (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
        };
        let frame = AxialFrame::new(origin.to_vec(), &axis)?;
        for p in points {
            if frame.off_axis(p) > rel_tol * length {
                return Err(Error::Configuration(
                    "points are not collinear with the domain center; the axisymmetric backend does not apply".into(),
                ));
            }
        }
        Ok(frame)
    }

    pub fn t(&self, y: &[f64]) -> f64 {
        y.iter().zip(&self.origin).zip(&self.axis).map(|((y, o), e)| (y - o) * e).sum()
    }

    pub fn off_axis(&self, y: &[f64]) -> f64 {
        let t = self.t(y);
        let mut s2 = 0.0;
        for i in 0..y.len() {
            let r = y[i] - self.origin[i] - t * self.axis[i];
            s2 += r * r;
        }
        s2.sqrt()
    }

    #[inline]
    pub fn point(&self, t: f64, s: f64, out: &mut [f64]) {
        for i in 0..out.len() {
            out[i] = self.origin[i] + t * self.axis[i] + s * self.perp[i];
        }
    }
}

/// Integration region in frame coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AxisymRegion {
    /// Ball of the given radius centered on the axis at `t = center_t`.
    Ball { center_t: f64, radius: f64 },
    /// Complement of that ball; takes a single focus inside it.
    Exterior { center_t: f64, radius: f64 },
    Whole,
}

/// A point on the axis where the integrand concentrates at length `scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Focus {
    pub t: f64,
    pub scale: f64,
}

const THETA_PANELS: usize = 4;

struct Slab {
    focus: Focus,
    lo: Option<f64>,
    hi: Option<f64>,
    thetas: Vec<f64>,
}

/// `∫_region f(y) dy` for each of the `k` components produced by `f(y, out)`.
///
/// Every focus must lie inside the region. The returned bound for each component is the
/// difference between the last two refinement levels.
pub fn integrate_axisym_vec<F>(
    dim: Dimension,
    frame: &AxialFrame,
    region: AxisymRegion,
    foci: &[Focus],
    k: usize,
    f: F,
    opts: &QuadOptions,
) -> Result<Vec<IntegralResult>>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    opts.validate()?;
    if frame.origin.len() != dim.n() {
        return Err(Error::InvalidParameter("frame dimension differs from n".into()));
    }
    let slabs = build_slabs(region, foci)?;
    let max_level = opts.max_level.min(6);
    let mut prev = eval_level(dim, frame, region, &slabs, k, &f, opts.order, 0, foci);
    let mut diff = vec![f64::INFINITY; k];
    for level in 1..=max_level.max(1) {
        let cur = eval_level(dim, frame, region, &slabs, k, &f, opts.order, level, foci);
        let mut done = true;
        for c in 0..k {
            diff[c] = (cur.0[c] - prev.0[c]).abs();
            if !cur.0[c].is_finite() {
                return Err(Error::QuadratureNotConverged { best: cur.0[c], achieved: f64::NAN });
            }
            if diff[c] > (opts.rel_tol * cur.1[c]).max(opts.abs_tol).max(f64::MIN_POSITIVE) {
                done = false;
            }
        }
        prev = cur;
        if done {
            return Ok((0..k)
                .map(|c| IntegralResult { value: prev.0[c], stderr_or_bound: diff[c], backend: Backend::Axisym2D })
                .collect());
        }
    }
    let worst = (0..k)
        .map(|c| diff[c] / prev.1[c].max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max);
    Err(Error::QuadratureNotConverged { best: prev.0[0], achieved: worst })
}

/// Scalar form of [`integrate_axisym_vec`].
pub fn integrate_axisym<F>(
    dim: Dimension,
    frame: &AxialFrame,
    region: AxisymRegion,
    foci: &[Focus],
    f: F,
    opts: &QuadOptions,
) -> Result<IntegralResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    integrate_axisym_vec(dim, frame, region, foci, 1, |y, out| out[0] = f(y), opts).map(|v| v[0])
}

fn build_slabs(region: AxisymRegion, foci: &[Focus]) -> Result<Vec<Slab>> {
    if foci.is_empty() {
        return Err(Error::InvalidParameter("axisymmetric integration needs at least one focus".into()));
    }
    let mut fs: Vec<Focus> = foci.to_vec();
    fs.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut merged: Vec<Focus> = Vec::with_capacity(fs.len());
    for f in fs {
        if !(f.scale > 0.0) {
            return Err(Error::InvalidParameter("focus scale must be positive".into()));
        }
        match merged.last_mut() {
            Some(last) if (f.t - last.t).abs() <= 1e-14 * (1.0 + f.t.abs()) => last.scale = last.scale.min(f.scale),
            _ => merged.push(f),
        }
    }
    match region {
        AxisymRegion::Ball { center_t, radius } => {
            if merged.iter().any(|f| (f.t - center_t).abs() >= radius) {
                return Err(Error::OutsideDomain("integration focus outside the region".into()));
            }
        }
        AxisymRegion::Exterior { center_t, radius } => {
            if merged.len() != 1 || (merged[0].t - center_t).abs() >= radius {
                return Err(Error::InvalidParameter("exterior integration needs one focus inside the ball".into()));
            }
        }
        AxisymRegion::Whole => {}
    }
    let mut slabs = Vec::with_capacity(merged.len());
    for (i, f) in merged.iter().enumerate() {
        let lo = (i > 0).then(|| 0.5 * (merged[i - 1].t + f.t));
        let hi = (i + 1 < merged.len()).then(|| 0.5 * (merged[i + 1].t + f.t));
        let mut thetas = vec![0.0, std::f64::consts::PI];
        for plane in [lo, hi].into_iter().flatten() {
            match region {
                AxisymRegion::Ball { center_t, radius } => {
                    let x = plane - center_t;
                    if x.abs() < radius {
                        thetas.push((radius * radius - x * x).sqrt().atan2(plane - f.t));
                    }
                }
                AxisymRegion::Whole => thetas.push(std::f64::consts::FRAC_PI_2),
                AxisymRegion::Exterior { .. } => unreachable!("single slab"),
            }
        }
        thetas.sort_by(f64::total_cmp);
        thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        slabs.push(Slab { focus: *f, lo, hi, thetas });
    }
    Ok(slabs)
}

fn rho_max(region: AxisymRegion, slab: &Slab, cos: f64) -> f64 {
    let mut r = f64::INFINITY;
    if cos > 0.0 {
        if let Some(hi) = slab.hi {
            r = r.min((hi - slab.focus.t) / cos);
        }
    } else if cos < 0.0 {
        if let Some(lo) = slab.lo {
            r = r.min((lo - slab.focus.t) / cos);
        }
    }
    if let AxisymRegion::Ball { center_t, radius } | AxisymRegion::Exterior { center_t, radius } = region {
        let tau = slab.focus.t - center_t;
        let b = tau * cos;
        let disc = (b * b - tau * tau + radius * radius).max(0.0);
        // numerically stable positive root of ρ² + 2bρ + (τ² - R²) = 0
        let c = tau * tau - radius * radius;
        let root = if b <= 0.0 { -b + disc.sqrt() } else { -c / (b + disc.sqrt()) };
        r = r.min(root);
    }
    r
}

#[allow(clippy::too_many_arguments)]
fn eval_level<F>(
    dim: Dimension,
    frame: &AxialFrame,
    region: AxisymRegion,
    slabs: &[Slab],
    k: usize,
    f: &F,
    order: usize,
    level: u32,
    foci: &[Focus],
) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let rule = gauss_legendre(order);
    let n = dim.n();
    let omega = dim.axial_sphere_area();
    let split = 1usize << level;
    let span = {
        let lo = foci.iter().map(|f| f.t).fold(f64::INFINITY, f64::min);
        let hi = foci.iter().map(|f| f.t).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    // angular panels of every slab, each evaluated independently
    let mut tasks = Vec::new();
    for (si, slab) in slabs.iter().enumerate() {
        for w in slab.thetas.windows(2) {
            let m = THETA_PANELS * split;
            let h = (w[1] - w[0]) / m as f64;
            for j in 0..m {
                tasks.push((si, w[0] + j as f64 * h, w[0] + (j + 1) as f64 * h));
            }
        }
    }
    let partial: Vec<(Vec<f64>, Vec<f64>)> = tasks
        .par_iter()
        .map(|&(si, th0, th1)| {
            let slab = &slabs[si];
            let h0 = 0.25 * slab.focus.scale;
            let tail_start = 8.0 * (span + slab.focus.scale.max(h0));
            let mut acc = vec![KahanSum::default(); k];
            let mut abs = vec![KahanSum::default(); k];
            let mut y = [0.0; MAX_DIM];
            let mut vals = vec![0.0; k];
            let half = 0.5 * (th1 - th0);
            let mid = 0.5 * (th1 + th0);
            for (xq, wq) in rule.nodes.iter().zip(&rule.weights) {
                let th = mid + half * xq;
                let (sin, cos) = th.sin_cos();
                let wt = wq * half * omega * sin.powi(n as i32 - 2);
                let rmax = rho_max(region, slab, cos);
                let mut eval_panel = |a: f64, b: f64, mapped: Option<f64>| {
                    let hr = 0.5 * (b - a);
                    let mr = 0.5 * (b + a);
                    for (xr, wr) in rule.nodes.iter().zip(&rule.weights) {
                        let v = mr + hr * xr;
                        let (rho, jac) = match mapped {
                            // ρ = B / u, u ∈ (0, 1]
                            Some(bt) => (bt / v, bt / (v * v)),
                            None => (v, 1.0),
                        };
                        frame.point(slab.focus.t + rho * cos, rho * sin, &mut y[..n]);
                        f(&y[..n], &mut vals);
                        let w = wt * wr * hr * jac * rho.powi(n as i32 - 1);
                        for c in 0..k {
                            acc[c].add(w * vals[c]);
                            abs[c].add((w * vals[c]).abs());
                        }
                    }
                };
                if matches!(region, AxisymRegion::Exterior { .. }) {
                    // [ρ_b, 2ρ_b] directly, then ρ = 2ρ_b / u
                    let m = 2 * split;
                    let sub = rmax / m as f64;
                    for q in 0..m {
                        eval_panel(rmax + q as f64 * sub, rmax + (q + 1) as f64 * sub, None);
                    }
                    for q in 0..m {
                        eval_panel(q as f64 / m as f64, (q + 1) as f64 / m as f64, Some(2.0 * rmax));
                    }
                    continue;
                }
                let mut lo = 0.0;
                let mut hi = h0;
                let limit = if rmax.is_finite() { rmax } else { tail_start };
                loop {
                    let top = hi.min(limit);
                    let sub = (top - lo) / split as f64;
                    for q in 0..split {
                        eval_panel(lo + q as f64 * sub, lo + (q + 1) as f64 * sub, None);
                    }
                    if top >= limit {
                        break;
                    }
                    lo = top;
                    hi *= 2.0;
                }
                if !rmax.is_finite() {
                    let m = 2 * split;
                    for q in 0..m {
                        eval_panel(q as f64 / m as f64, (q + 1) as f64 / m as f64, Some(tail_start));
                    }
                }
            }
            (acc.iter().map(KahanSum::value).collect(), abs.iter().map(KahanSum::value).collect())
        })
        .collect();
    let mut total = vec![KahanSum::default(); k];
    let mut l1 = vec![KahanSum::default(); k];
    for (v, a) in &partial {
        for c in 0..k {
            total[c].add(v[c]);
            l1[c].add(a[c]);
        }
    }
    (total.iter().map(KahanSum::value).collect(), l1.iter().map(KahanSum::value).collect())
}
