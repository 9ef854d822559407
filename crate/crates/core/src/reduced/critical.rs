//! Multistart Newton search for critical points of `F̃` and their certification.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grad_ftilde, hess_ftilde, landscape_point, matrix_m, unflatten, SpikePattern};
use crate::bubble::dist2;
use crate::domain::{Domain, GreenDomain};
use crate::linalg::sym_eigen;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Search along a diameter of the ball first (all spikes on one axis through the center).
    pub collinear: bool,
    /// Grid points per spike coordinate in the collinear scan.
    pub grid: usize,
    /// Random starts in the full configuration space.
    pub random_starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// A Hessian eigenvalue of magnitude below this counts as zero.
    pub nondeg_tol: f64,
    /// Starts and iterates keep this fraction of the radius away from the boundary.
    pub margin: f64,
    /// Points closer than `dedup · R` are merged.
    pub dedup: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            collinear: true,
            grid: 41,
            random_starts: 16,
            seed: 1,
            max_iter: 100,
            grad_tol: 1e-9,
            nondeg_tol: 1e-6,
            margin: 0.02,
            dedup: 1e-6,
        }
    }
}

/// A critical point of `F̃` with its Hessian spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub x: Vec<Vec<f64>>,
    pub ftilde: f64,
    pub grad_norm: f64,
    /// Eigenvalues of the full `m·n` Hessian, ascending.
    pub hess_eigs: Vec<f64>,
    pub nondegenerate: bool,
    /// Hessian eigenvalues restricted to displacements along the axis, for collinear points.
    pub axial_eigs: Option<Vec<f64>>,
    /// Non-degeneracy within configurations invariant under rotations about the axis.
    pub nondegenerate_axial: Option<bool>,
    pub lambda: Vec<f64>,
    pub rho: f64,
    /// Unit axis of a collinear point.
    pub axis: Option<Vec<f64>>,
}

impl CriticalPoint {
    /// Certified in the full space, or at least within the axial class.
    pub fn certified(&self) -> bool {
        self.nondegenerate || self.nondegenerate_axial == Some(true)
    }
}

struct Problem<'a> {
    pattern: &'a SpikePattern,
    dom: &'a Domain,
    cfg: &'a SearchConfig,
    /// `Some(axis)` restricts every spike to the line `center + t·axis`.
    axis: Option<(Vec<f64>, Vec<f64>)>,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.dom.dim().n()
    }

    fn embed(&self, z: &[f64]) -> Vec<Vec<f64>> {
        match &self.axis {
            Some((c, e)) => z.iter().map(|t| c.iter().zip(e).map(|(ci, ei)| ci + t * ei).collect()).collect(),
            None => unflatten(z, self.n()),
        }
    }

    fn admissible(&self, z: &[f64]) -> bool {
        let x = self.embed(z);
        let r = self.dom.length_scale();
        if x.iter().any(|p| !self.dom.contains(p) || self.dom.dist_boundary_unchecked(p) < self.cfg.margin * r) {
            return false;
        }
        for i in 0..x.len() {
            for j in 0..i {
                if dist2(&x[i], &x[j]).sqrt() < self.cfg.margin * r {
                    return false;
                }
            }
        }
        matrix_m(&x, self.pattern, self.dom).map(|m| m.in_rho_plus()).unwrap_or(false)
    }

    fn grad(&self, z: &[f64]) -> Result<Vec<f64>> {
        let g = grad_ftilde(&self.embed(z), self.pattern, self.dom)?;
        Ok(match &self.axis {
            Some((_, e)) => {
                let n = self.n();
                (0..z.len()).map(|i| (0..n).map(|c| g[i * n + c] * e[c]).sum()).collect()
            }
            None => g,
        })
    }

    fn hess(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let k = z.len();
        let h = 1e-5 * self.dom.length_scale();
        let mut out = DMatrix::zeros(k, k);
        for j in 0..k {
            let mut p = z.to_vec();
            let mut q = z.to_vec();
            p[j] += h;
            q[j] -= h;
            let (gp, gq) = (self.grad(&p)?, self.grad(&q)?);
            for i in 0..k {
                out[(i, j)] = (gp[i] - gq[i]) / (2.0 * h);
            }
        }
        Ok(crate::linalg::symmetrize(&out))
    }

    /// Newton on the gradient with a pseudo-inverse step (critical manifolds are common on
    /// symmetric domains) and backtracking on `|∇F̃|²`.
    fn newton(&self, z0: &[f64]) -> Option<Vec<f64>> {
        let mut z = z0.to_vec();
        let mut g = self.grad(&z).ok()?;
        let mut merit: f64 = g.iter().map(|v| v * v).sum();
        for _ in 0..self.cfg.max_iter {
            if merit.sqrt() < 0.1 * self.cfg.grad_tol {
                break;
            }
            let hess = self.hess(&z).ok()?;
            let svd = hess.svd(true, true);
            let cut = 1e-10 * svd.singular_values.max();
            let step = svd.solve(&DVector::from_column_slice(&g), cut).ok()?;
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-8 {
                let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
                if self.admissible(&trial) {
                    if let Ok(gt) = self.grad(&trial) {
                        let mt: f64 = gt.iter().map(|v| v * v).sum();
                        if mt < merit {
                            z = trial;
                            g = gt;
                            merit = mt;
                            accepted = true;
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (merit.sqrt() < self.cfg.grad_tol).then_some(z)
    }
}

fn unit_axis(n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    e
}

fn grid_starts(prob: &Problem, m: usize) -> Vec<Vec<f64>> {
    let ball = match prob.dom.as_ball() {
        Some(b) => b,
        None => return vec![],
    };
    let g = prob.cfg.grid.max(3);
    let lim = ball.radius * (1.0 - 2.0 * prob.cfg.margin);
    let coord = |k: usize| -lim + 2.0 * lim * (k as f64 + 0.5) / g as f64;
    let total = g.pow(m as u32);
    let idx = |mut c: usize| -> Vec<usize> {
        (0..m)
            .map(|_| {
                let r = c % g;
                c /= g;
                r
            })
            .collect()
    };
    let merit: Vec<Option<f64>> = (0..total)
        .into_par_iter()
        .map(|c| {
            let z: Vec<f64> = idx(c).into_iter().map(coord).collect();
            if !prob.admissible(&z) {
                return None;
            }
            prob.grad(&z).ok().map(|gr| gr.iter().map(|v| v * v).sum())
        })
        .collect();
    // local minima of |∇F̃|² over grid neighbours
    let mut starts = Vec::new();
    for c in 0..total {
        let Some(v) = merit[c] else { continue };
        let ids = idx(c);
        let mut is_min = true;
        for d in 0..m {
            for delta in [-1i64, 1] {
                let k = ids[d] as i64 + delta;
                if k < 0 || k >= g as i64 {
                    continue;
                }
                let mut nb = ids.clone();
                nb[d] = k as usize;
                let nc: usize = nb.iter().rev().fold(0, |acc, &i| acc * g + i);
                if let Some(w) = merit[nc] {
                    if w < v {
                        is_min = false;
                    }
                }
            }
        }
        if is_min {
            starts.push(ids.into_iter().map(coord).collect());
        }
    }
    starts
}

fn random_starts(prob: &Problem, m: usize) -> Vec<Vec<f64>> {
    let Some(ball) = prob.dom.as_ball() else { return vec![] };
    let n = prob.n();
    let mut rng = ChaCha8Rng::seed_from_u64(prob.cfg.seed);
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < prob.cfg.random_starts && tries < 1000 * prob.cfg.random_starts.max(1) {
        tries += 1;
        let mut z = Vec::with_capacity(m * n);
        for _ in 0..m {
            let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
            let r = ball.radius * rng.random::<f64>().powf(1.0 / n as f64);
            z.extend(v.iter().zip(&ball.center).map(|(x, c)| c + r * x / norm));
        }
        if prob.admissible(&z) {
            out.push(z);
        }
    }
    out
}

/// Critical points of `F̃` inside `ρ⁺`, deduplicated and certified. An empty list is a valid
/// answer; no point is returned without its Hessian spectrum.
pub fn find_critical_points(pattern: &SpikePattern, dom: &Domain, cfg: &SearchConfig) -> Result<Vec<CriticalPoint>> {
    dom.validate()?;
    let m = pattern.m();
    let n = dom.dim().n();
    let mut found: Vec<(Vec<Vec<f64>>, Option<Vec<f64>>)> = Vec::new();
    let Some(ball) = dom.as_ball() else {
        // H ≡ 0 on the whole space, so ρ < 0 everywhere
        return Ok(vec![]);
    };
    if cfg.collinear && m <= 3 {
        let axis = unit_axis(n);
        let prob = Problem { pattern, dom, cfg, axis: Some((ball.center.clone(), axis.clone())) };
        let starts = grid_starts(&prob, m);
        let sols: Vec<Option<Vec<f64>>> = starts.par_iter().map(|z| prob.newton(z)).collect();
        for z in sols.into_iter().flatten() {
            found.push((prob.embed(&z), Some(axis.clone())));
        }
    }
    if cfg.random_starts > 0 {
        let prob = Problem { pattern, dom, cfg, axis: None };
        let starts = random_starts(&prob, m);
        let sols: Vec<Option<Vec<f64>>> = starts.par_iter().map(|z| prob.newton(z)).collect();
        for z in sols.into_iter().flatten() {
            found.push((prob.embed(&z), None));
        }
    }

    let mut points: Vec<CriticalPoint> = Vec::new();
    for (x, axis) in found {
        let cp = certify(&x, pattern, dom, cfg, axis)?;
        if cp.grad_norm >= cfg.grad_tol {
            continue;
        }
        if points.iter().any(|p| same_orbit(p, &cp, dom, cfg)) {
            continue;
        }
        points.push(cp);
    }
    points.sort_by(|a, b| a.ftilde.total_cmp(&b.ftilde));
    Ok(points)
}

/// Hessian spectrum and flags at `x`.
pub(crate) fn certify(
    x: &[Vec<f64>],
    pattern: &SpikePattern,
    dom: &Domain,
    cfg: &SearchConfig,
    axis: Option<Vec<f64>>,
) -> Result<CriticalPoint> {
    let lp = landscape_point(x, pattern, dom)?;
    let g = grad_ftilde(x, pattern, dom)?;
    let grad_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let hess = hess_ftilde(x, pattern, dom)?;
    let eig = sym_eigen(&hess).values;
    let nondegenerate = eig.iter().all(|e| e.abs() > cfg.nondeg_tol);
    let n = dom.dim().n();
    let (axial_eigs, nondegenerate_axial) = match &axis {
        Some(e) => {
            let m = x.len();
            let p = DMatrix::from_fn(m * n, m, |r, c| if r / n == c { e[r % n] } else { 0.0 });
            let red = p.transpose() * &hess * &p;
            let ev = sym_eigen(&red).values;
            let ok = ev.iter().all(|v| v.abs() > cfg.nondeg_tol);
            (Some(ev), Some(ok))
        }
        None => (None, None),
    };
    Ok(CriticalPoint {
        x: x.to_vec(),
        ftilde: lp.ftilde,
        grad_norm,
        hess_eigs: eig,
        nondegenerate,
        axial_eigs,
        nondegenerate_axial,
        lambda: lp.lambda.lambda,
        rho: lp.matrix.rho,
        axis,
    })
}

/// Same point up to the dedup radius, or (on a ball) the same orbit under rotations about the
/// center: equal `F̃`, equal distances to the center and equal pairwise distances.
fn same_orbit(a: &CriticalPoint, b: &CriticalPoint, dom: &Domain, cfg: &SearchConfig) -> bool {
    let r = dom.length_scale();
    let tol = cfg.dedup * r;
    let close = a.x.iter().zip(&b.x).all(|(p, q)| dist2(p, q).sqrt() < tol);
    if close {
        return true;
    }
    let Some(ball) = dom.as_ball() else { return false };
    if (a.ftilde - b.ftilde).abs() > 1e-9 * (1.0 + a.ftilde.abs()) {
        return false;
    }
    let radii = |p: &CriticalPoint| -> Vec<f64> { p.x.iter().map(|y| dist2(y, &ball.center).sqrt()).collect() };
    let pair = |p: &CriticalPoint| -> Vec<f64> {
        let mut v = Vec::new();
        for i in 0..p.x.len() {
            for j in 0..i {
                v.push(dist2(&p.x[i], &p.x[j]).sqrt());
            }
        }
        v
    };
    let agree = |mut u: Vec<f64>, mut v: Vec<f64>| {
        u.sort_by(f64::total_cmp);
        v.sort_by(f64::total_cmp);
        u.iter().zip(&v).all(|(s, t)| (s - t).abs() < 1e3 * tol)
    };
    agree(radii(a), radii(b)) && agree(pair(a), pair(b))
}

/// `F̃` along the configuration `t ↦ (t·e₁, -t·e₁)` for two spikes; used by scans.
pub fn antipodal_profile(pattern: &SpikePattern, dom: &Domain, ts: &[f64]) -> Vec<Option<f64>> {
    let Some(ball) = dom.as_ball() else { return vec![None; ts.len()] };
    ts.iter()
        .map(|&t| {
            let mut p = ball.center.clone();
            let mut q = ball.center.clone();
            p[0] += t;
            q[0] -= t;
            super::ftilde(&[p, q], pattern, dom).ok()
        })
        .collect()
}
