//! The finite-dimensional landscape behind multispike families.
//!
//! For spike locations `x = (x_1, …, x_m)` and signs `γ`, the matrix
//! `M(x)_{ii} = H(x_i, x_i)`, `M(x)_{ij} = -γ_iγ_j G(x_i, x_j)` defines the strictly convex
//! function `F_x(Λ) = ½ΛᵀMΛ - Σ ln Λ_i` on the positive orthant whenever its least
//! eigenvalue `ρ(x)` is positive. Its minimizer `Λ(x)` gives the reduced functional
//! `F̃(x) = F_x(Λ(x)) = m/2 - Σ ln Λ_i(x)`.

mod critical;

pub use critical::{antipodal_profile, find_critical_points, CriticalPoint, SearchConfig};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bubble::MAX_DIM;
use crate::domain::{fundamental, fundamental_grad_x, fundamental_hess_xx, Domain, GreenDomain};
use crate::linalg::{solve, sym_eigen, symmetrize};
use crate::{Error, Result};

/// Threshold below which a configuration is treated as outside `ρ⁺`.
pub const RHO_MIN: f64 = 1e-10;

/// Number of spikes and their signs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpikePattern {
    gamma: Vec<i8>,
}

impl SpikePattern {
    pub fn new(gamma: Vec<i8>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidParameter("a pattern needs at least one spike".into()));
        }
        if gamma.iter().any(|g| *g != 1 && *g != -1) {
            return Err(Error::InvalidParameter(format!("spike signs must be +1 or -1, got {gamma:?}")));
        }
        Ok(SpikePattern { gamma })
    }

    pub fn positive(m: usize) -> Result<Self> {
        SpikePattern::new(vec![1; m])
    }

    pub fn m(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self, i: usize) -> f64 {
        self.gamma[i] as f64
    }

    pub fn signs(&self) -> &[i8] {
        &self.gamma
    }
}

impl TryFrom<Vec<i8>> for SpikePattern {
    type Error = Error;
    fn try_from(g: Vec<i8>) -> Result<Self> {
        SpikePattern::new(g)
    }
}

impl From<SpikePattern> for Vec<i8> {
    fn from(p: SpikePattern) -> Vec<i8> {
        p.gamma
    }
}

/// `M(x)` and its least eigenvalue.
#[derive(Clone, Debug)]
pub struct ReducedMatrix {
    pub x: Vec<Vec<f64>>,
    pub m: DMatrix<f64>,
    pub rho: f64,
}

impl ReducedMatrix {
    pub fn in_rho_plus(&self) -> bool {
        self.rho > RHO_MIN
    }
}

fn check_locations(x: &[Vec<f64>], pattern: &SpikePattern, dom: &Domain) -> Result<()> {
    if x.len() != pattern.m() {
        return Err(Error::InvalidParameter(format!("{} locations for {} spikes", x.len(), pattern.m())));
    }
    let n = dom.dim().n();
    for (i, xi) in x.iter().enumerate() {
        if xi.len() != n {
            return Err(Error::InvalidParameter(format!("location {i} has {} coordinates, expected {n}", xi.len())));
        }
        if !dom.contains(xi) {
            return Err(Error::OutsideDomain(format!("spike location {i} = {xi:?}")));
        }
        for xj in &x[..i] {
            if crate::bubble::dist2(xi, xj) == 0.0 {
                return Err(Error::Singular);
            }
        }
    }
    Ok(())
}

pub fn matrix_m(x: &[Vec<f64>], pattern: &SpikePattern, dom: &Domain) -> Result<ReducedMatrix> {
    check_locations(x, pattern, dom)?;
    let m = x.len();
    let n = dom.dim().n();
    let mut mat = DMatrix::zeros(m, m);
    for i in 0..m {
        mat[(i, i)] = dom.robin(&x[i], &x[i]);
        for j in 0..i {
            let g = fundamental(n, &x[i], &x[j]) - dom.robin(&x[i], &x[j]);
            let v = -pattern.gamma(i) * pattern.gamma(j) * g;
            mat[(i, j)] = v;
            mat[(j, i)] = v;
        }
    }
    let rho = sym_eigen(&mat).values[0];
    Ok(ReducedMatrix { x: x.to_vec(), m: mat, rho })
}

/// Minimizer `Λ(x)` of `F_x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSolution {
    pub lambda: Vec<f64>,
    /// `|MΛ - (1/Λ_i)_i|_∞`.
    pub residual: f64,
    pub iterations: usize,
}

/// `F_x(Λ) = ½ΛᵀMΛ - Σ ln Λ_i`, or `+∞` off the positive orthant.
pub fn f_x(m: &DMatrix<f64>, lambda: &[f64]) -> f64 {
    if lambda.iter().any(|l| !(*l > 0.0)) {
        return f64::INFINITY;
    }
    let l = DVector::from_column_slice(lambda);
    0.5 * l.dot(&(m * &l)) - lambda.iter().map(|v| v.ln()).sum::<f64>()
}

pub fn solve_lambda(rm: &ReducedMatrix) -> Result<LambdaSolution> {
    if !rm.in_rho_plus() {
        return Err(Error::NotInRhoPlus { rho: rm.rho });
    }
    let m = &rm.m;
    let k = m.nrows();
    let mut l = DVector::from_fn(k, |i, _| m[(i, i)].powf(-0.5));
    let grad = |l: &DVector<f64>| m * l - l.map(|v| 1.0 / v);
    let mut history = Vec::new();
    let mut g = grad(&l);
    let mut f = f_x(m, l.as_slice());
    // size of the terms that cancel in the gradient; the attainable residual is a multiple of ulp(scale)
    let scale = |l: &DVector<f64>| (m.abs() * l.abs()).amax() + l.map(|v| 1.0 / v).amax();
    for it in 0..200 {
        let res = g.amax();
        let sc = scale(&l);
        let stalled = history.last().is_some_and(|prev| res > 0.5 * prev) && res < 1e-13 * sc;
        history.push(res);
        if res < 1e-14 * sc || stalled {
            return Ok(LambdaSolution { lambda: l.iter().copied().collect(), residual: res, iterations: it });
        }
        let hess = m + DMatrix::from_diagonal(&l.map(|v| 1.0 / (v * v)));
        let dir = -solve(&hess, &g)?;
        let mut t = 1.0;
        // largest step keeping Λ positive, with a margin
        for i in 0..k {
            if dir[i] < 0.0 {
                t = f64::min(t, 0.9 * l[i] / -dir[i]);
            }
        }
        let slope = g.dot(&dir);
        // below this decrement F cannot resolve the decrease in floating point
        let flat = -slope < 1e-12 * (1.0 + f.abs());
        loop {
            let trial = &l + t * &dir;
            let ft = f_x(m, trial.as_slice());
            if flat || ft <= f + 1e-4 * t * slope || t < 1e-12 {
                l = trial;
                f = ft;
                break;
            }
            t *= 0.5;
        }
        g = grad(&l);
    }
    let residual = g.amax();
    if residual < 1e-10 * scale(&l) {
        return Ok(LambdaSolution { lambda: l.iter().copied().collect(), residual, iterations: 200 });
    }
    Err(Error::NewtonStall { iterations: 200, residual, best: l.iter().copied().collect(), history })
}

/// `M(x)`, `Λ(x)` and `F̃(x)` together.
#[derive(Clone, Debug)]
pub struct LandscapePoint {
    pub matrix: ReducedMatrix,
    pub lambda: LambdaSolution,
    pub ftilde: f64,
}

pub fn landscape_point(x: &[Vec<f64>], pattern: &SpikePattern, dom: &Domain) -> Result<LandscapePoint> {
    let matrix = matrix_m(x, pattern, dom)?;
    let lambda = solve_lambda(&matrix)?;
    let ftilde = pattern.m() as f64 / 2.0 - lambda.lambda.iter().map(|v| v.ln()).sum::<f64>();
    Ok(LandscapePoint { matrix, lambda, ftilde })
}

pub fn ftilde(x: &[Vec<f64>], pattern: &SpikePattern, dom: &Domain) -> Result<f64> {
    landscape_point(x, pattern, dom).map(|p| p.ftilde)
}

/// `F̃'(x) = ½ Λᵀ M'(x) Λ`, flattened as `m` blocks of `n`.
pub fn grad_ftilde(x: &[Vec<f64>], pattern: &SpikePattern, dom: &Domain) -> Result<Vec<f64>> {
    let p = landscape_point(x, pattern, dom)?;
    Ok(envelope_gradient(x, pattern, dom, &p.lambda.lambda))
}

/// `Λ_i² ∂_aH(x_i, x_i) - Σ_{k≠i} γ_iγ_k Λ_iΛ_k ∂_aG(x_i, x_k)` for each `i`.
pub(crate) fn envelope_gradient(x: &[Vec<f64>], pattern: &SpikePattern, dom: &Domain, lambda: &[f64]) -> Vec<f64> {
    let m = x.len();
    let n = dom.dim().n();
    let mut out = vec![0.0; m * n];
    let mut buf = [0.0; MAX_DIM];
    let mut fb = [0.0; MAX_DIM];
    for i in 0..m {
        dom.robin_grad_x(&x[i], &x[i], &mut buf[..n]);
        for c in 0..n {
            out[i * n + c] = lambda[i] * lambda[i] * buf[c];
        }
        for k in 0..m {
            if k == i {
                continue;
            }
            fundamental_grad_x(n, &x[i], &x[k], &mut fb[..n]);
            dom.robin_grad_x(&x[i], &x[k], &mut buf[..n]);
            let w = pattern.gamma(i) * pattern.gamma(k) * lambda[i] * lambda[k];
            for c in 0..n {
                out[i * n + c] -= w * (fb[c] - buf[c]);
            }
        }
    }
    out
}

pub(crate) fn unflatten(v: &[f64], n: usize) -> Vec<Vec<f64>> {
    v.chunks(n).map(|c| c.to_vec()).collect()
}

/// Hessian of `F̃` by central differences of the analytic gradient, step `h = 1e-5·R`.
pub fn hess_ftilde(x: &[Vec<f64>], pattern: &SpikePattern, dom: &Domain) -> Result<DMatrix<f64>> {
    let n = dom.dim().n();
    let dof = x.len() * n;
    let h = 1e-5 * dom.length_scale();
    let flat: Vec<f64> = x.iter().flatten().copied().collect();
    let mut hess = DMatrix::zeros(dof, dof);
    for j in 0..dof {
        let mut p = flat.clone();
        let mut q = flat.clone();
        p[j] += h;
        q[j] -= h;
        let gp = grad_ftilde(&unflatten(&p, n), pattern, dom)?;
        let gq = grad_ftilde(&unflatten(&q, n), pattern, dom)?;
        for i in 0..dof {
            hess[(i, j)] = (gp[i] - gq[i]) / (2.0 * h);
        }
    }
    Ok(symmetrize(&hess))
}

/// Hessian of `F̃` from second derivatives of `G`, `H` and the implicit derivative of `Λ(x)`:
/// `F̃'' = ½ΛᵀM''Λ - B (M + diag Λ^{-2})^{-1} Bᵀ` with `B_{·,j} = M'_jΛ`.
pub fn hess_ftilde_implicit(x: &[Vec<f64>], pattern: &SpikePattern, dom: &Domain) -> Result<DMatrix<f64>> {
    let p = landscape_point(x, pattern, dom)?;
    let lam = &p.lambda.lambda;
    let m = x.len();
    let n = dom.dim().n();
    let dof = m * n;
    // first derivatives of M: dM/d(x_i)_c has entries only in row/column i
    let mut dm: Vec<DMatrix<f64>> = vec![DMatrix::zeros(m, m); dof];
    let mut buf = [0.0; MAX_DIM];
    let mut fb = [0.0; MAX_DIM];
    for i in 0..m {
        dom.robin_grad_x(&x[i], &x[i], &mut buf[..n]);
        for c in 0..n {
            dm[i * n + c][(i, i)] = 2.0 * buf[c];
        }
        for k in 0..m {
            if k == i {
                continue;
            }
            fundamental_grad_x(n, &x[i], &x[k], &mut fb[..n]);
            dom.robin_grad_x(&x[i], &x[k], &mut buf[..n]);
            let s = -pattern.gamma(i) * pattern.gamma(k);
            for c in 0..n {
                dm[i * n + c][(i, k)] = s * (fb[c] - buf[c]);
                dm[i * n + c][(k, i)] = s * (fb[c] - buf[c]);
            }
        }
    }
    // ½ΛᵀM''Λ
    let mut direct = DMatrix::zeros(dof, dof);
    let mut haa = vec![0.0; n * n];
    let mut hab = vec![0.0; n * n];
    let mut faa = vec![0.0; n * n];
    for i in 0..m {
        dom.robin_hess_xx(&x[i], &x[i], &mut haa);
        dom.robin_hess_xy(&x[i], &x[i], &mut hab);
        for c in 0..n {
            for d in 0..n {
                // d²/dx² H(x, x) = 2(H_aa + H_ab) by symmetry of H
                direct[(i * n + c, i * n + d)] += 0.5 * lam[i] * lam[i] * 2.0 * (haa[c * n + d] + hab[c * n + d]);
            }
        }
        for k in 0..m {
            if k == i {
                continue;
            }
            let w = -pattern.gamma(i) * pattern.gamma(k) * lam[i] * lam[k];
            fundamental_hess_xx(n, &x[i], &x[k], &mut faa);
            dom.robin_hess_xx(&x[i], &x[k], &mut haa);
            dom.robin_hess_xy(&x[i], &x[k], &mut hab);
            for c in 0..n {
                for d in 0..n {
                    // entries (i,k) and (k,i) of M each contribute once to ½ΛᵀM''Λ
                    direct[(i * n + c, i * n + d)] += w * (faa[c * n + d] - haa[c * n + d]);
                    direct[(i * n + c, k * n + d)] += w * (-faa[c * n + d] - hab[c * n + d]);
                }
            }
        }
    }
    let l = DVector::from_column_slice(lam);
    let bmat = DMatrix::from_fn(m, dof, |r, j| (&dm[j] * &l)[r]);
    let hf = &p.matrix.m + DMatrix::from_diagonal(&l.map(|v| 1.0 / (v * v)));
    let sol = hf.clone().lu().solve(&bmat).ok_or(Error::Singular)?;
    Ok(symmetrize(&(direct - bmat.transpose() * sol)))
}
