use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{eps_scale, lambda_from_mu, mu_from_lambda, SpikeAnsatz};
use crate::bubble::{Dimension, UniversalConstants};
use crate::domain::{Domain, GreenDomain};
use crate::reduced::{CriticalPoint, SpikePattern};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineOptions {
    /// Converged when every scaled residual is below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Restrict `ξ` to the symmetry axis of the critical point. `None` picks the restriction
    /// exactly when the point is only certified in the axial class.
    pub axial: Option<bool>,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { tol: 1e-10, max_iter: 60, axial: None }
    }
}

/// `β = α - 1`, `ζ = μ - Λ(x̄)`, `ξ = a - x̄`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shifts {
    pub beta: Vec<f64>,
    pub zeta: Vec<f64>,
    pub xi: Vec<Vec<f64>>,
}

impl Shifts {
    pub fn beta_norm(&self) -> f64 {
        self.beta.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn zeta_norm(&self) -> f64 {
        self.zeta.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn xi_norm(&self) -> f64 {
        self.xi.iter().map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    pub ansatz: SpikeAnsatz,
    pub shifts: Shifts,
    pub iterations: usize,
    /// Max-norm of the scaled residual after each iteration, starting with the seed.
    pub history: Vec<f64>,
    pub residual: f64,
    pub axial: bool,
    /// `|β|/(ε ln|ln ε|)`.
    pub beta_rate: f64,
    /// `(|ζ| + |ξ|)·|ln ε|/ln|ln ε|`.
    pub shift_rate: f64,
    /// `λ_i^{-(n-2)/2}(|ln ε|/ε)^{1/2}/Λ_i(x̄)` for each spike.
    pub cbar_ratio: Vec<f64>,
}

/// Reduced equations in the shift variables, scaled so that every block is `O(1)`:
///
/// ```text
/// R_α = β_i - ε lnln(λ_i^{(n-2)/2})/(p-1)
/// R_λ = |ln ε|/ln λ_i - (n-2)(H_ii μ_i² - Σ γ_iγ_k G_ik μ_iμ_k)
/// R_a = μ_i² ∂_aH_ii - Σ γ_iγ_k μ_iμ_k ∂_aG_ik
/// ```
///
/// `R_α` carries the first ε-correction of the amplitude equation; without it `β ≡ 0`.
struct System<'a> {
    dim: Dimension,
    cbar: f64,
    pattern: &'a SpikePattern,
    dom: &'a Domain,
    eps: f64,
    xbar: &'a [Vec<f64>],
    lam_bar: &'a [f64],
    axis: Option<Vec<f64>>,
}

impl System<'_> {
    fn m(&self) -> usize {
        self.pattern.m()
    }

    fn xi_dof(&self) -> usize {
        if self.axis.is_some() {
            1
        } else {
            self.dim.n()
        }
    }

    fn unpack(&self, w: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let m = self.m();
        let q = self.xi_dof();
        let beta = w[..m].to_vec();
        let zeta = w[m..2 * m].to_vec();
        let xi = (0..m)
            .map(|i| {
                let c = &w[2 * m + i * q..2 * m + (i + 1) * q];
                match &self.axis {
                    Some(e) => e.iter().map(|v| v * c[0]).collect(),
                    None => c.to_vec(),
                }
            })
            .collect();
        (beta, zeta, xi)
    }

    /// `((n-2)(Hμ² - Σ…), R_a)` at `μ`, `a`.
    fn core(&self, mu: &[f64], a: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = self.m();
        let n = self.dim.n();
        let mut q = vec![0.0; m];
        let mut ra = Vec::with_capacity(m * self.xi_dof());
        let mut g = vec![0.0; n];
        for i in 0..m {
            if !self.dom.contains(&a[i]) {
                return Err(Error::OutsideDomain(format!("a_{i} left the domain during refinement")));
            }
            let mut v = self.dom.robin(&a[i], &a[i]) * mu[i] * mu[i];
            self.dom.robin_grad_x(&a[i], &a[i], &mut g);
            let mut grad: Vec<f64> = g.iter().map(|x| x * mu[i] * mu[i]).collect();
            for j in (0..m).filter(|j| *j != i) {
                let c = self.pattern.gamma(i) * self.pattern.gamma(j) * mu[i] * mu[j];
                let green = crate::domain::green_g(self.dom, &a[i], &a[j])?;
                v -= c * green;
                let ga = crate::domain::grad_g_a(self.dom, &a[i], &a[j])?;
                for d in 0..n {
                    grad[d] -= c * ga[d];
                }
            }
            q[i] = (self.dim.nf() - 2.0) * v;
            match &self.axis {
                Some(e) => ra.push(grad.iter().zip(e).map(|(x, y)| x * y).sum()),
                None => ra.extend(grad),
            }
        }
        Ok((q, ra))
    }

    fn residual(&self, w: &[f64]) -> Result<Vec<f64>> {
        let m = self.m();
        let (beta, zeta, xi) = self.unpack(w);
        let mu: Vec<f64> = (0..m).map(|i| self.lam_bar[i] + zeta[i]).collect();
        if mu.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter("lambda shift left the admissible range".into()));
        }
        let a: Vec<Vec<f64>> = (0..m).map(|i| self.xbar[i].iter().zip(&xi[i]).map(|(x, s)| x + s).collect()).collect();
        let (q, ra) = self.core(&mu, &a)?;
        let le = self.eps.ln().abs();
        let lnl: Vec<f64> = mu.iter().map(|v| lambda_from_mu(self.dim, self.cbar, self.eps, *v).ln()).collect();
        if lnl.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter("lambda fell below 1 during refinement".into()));
        }
        let mut r = Vec::with_capacity(w.len());
        for i in 0..m {
            r.push(beta[i] - self.eps * (self.dim.k() * lnl[i]).ln() / (self.dim.p() - 1.0));
        }
        for i in 0..m {
            r.push(le / lnl[i] - q[i]);
        }
        r.extend(ra);
        Ok(r)
    }

    fn jacobian<F>(&self, w: &[f64], f: F) -> Result<DMatrix<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        let len = f(w)?.len();
        let mut jac = DMatrix::zeros(len, w.len());
        let mut x = w.to_vec();
        for c in 0..w.len() {
            let h = 1e-6 * (1.0 + w[c].abs());
            x[c] = w[c] + h;
            let fp = f(&x)?;
            x[c] = w[c] - h;
            let fm = f(&x)?;
            x[c] = w[c];
            for r in 0..len {
                jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    fn to_ansatz(&self, w: &[f64]) -> Result<(SpikeAnsatz, Shifts)> {
        let m = self.m();
        let (beta, zeta, xi) = self.unpack(w);
        let alpha = beta.iter().map(|b| 1.0 + b).collect();
        let lambda = (0..m).map(|i| lambda_from_mu(self.dim, self.cbar, self.eps, self.lam_bar[i] + zeta[i])).collect();
        let a = (0..m).map(|i| self.xbar[i].iter().zip(&xi[i]).map(|(x, s)| x + s).collect()).collect();
        let s = SpikeAnsatz::new(self.pattern.clone(), self.eps, alpha, lambda, a)?;
        Ok((s, Shifts { beta, zeta, xi }))
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn use_axis(cp: &CriticalPoint, opts: &RefineOptions) -> Result<Option<Vec<f64>>> {
    let want = opts.axial.unwrap_or(!cp.nondegenerate && cp.nondegenerate_axial == Some(true));
    if !want {
        return Ok(None);
    }
    cp.axis
        .clone()
        .map(Some)
        .ok_or_else(|| Error::Configuration("axial refinement needs a critical point with a symmetry axis".into()))
}

/// Damped Newton on the scaled reduced equations, started from `seed`.
pub fn refine(
    seed: &SpikeAnsatz,
    cp: &CriticalPoint,
    dom: &Domain,
    consts: &UniversalConstants,
    opts: &RefineOptions,
) -> Result<RefineReport> {
    seed.validate()?;
    let dim = dom.dim();
    if consts.n != dim.n() || seed.m() != cp.x.len() {
        return Err(Error::InvalidParameter("seed, critical point and constants do not match".into()));
    }
    let eps = seed.eps;
    if !(eps > 0.0 && eps < (-1.0f64).exp()) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must lie in (0, 1/e)")));
    }
    let axis = use_axis(cp, opts)?;
    let sys = System {
        dim,
        cbar: consts.cbar,
        pattern: &seed.pattern,
        dom,
        eps,
        xbar: &cp.x,
        lam_bar: &cp.lambda,
        axis,
    };
    let m = seed.m();
    let mut w: Vec<f64> = seed.alpha.iter().map(|a| a - 1.0).collect();
    w.extend((0..m).map(|i| mu_from_lambda(dim, consts.cbar, eps, seed.lambda[i]) - cp.lambda[i]));
    for i in 0..m {
        let d: Vec<f64> = seed.a[i].iter().zip(&cp.x[i]).map(|(a, x)| a - x).collect();
        match &sys.axis {
            Some(e) => {
                let t: f64 = d.iter().zip(e).map(|(x, y)| x * y).sum();
                let off = d.iter().zip(e).map(|(x, y)| (x - t * y).powi(2)).sum::<f64>().sqrt();
                if off > 1e-12 * dom.length_scale() {
                    return Err(Error::Configuration("seed is off the symmetry axis".into()));
                }
                w.push(t);
            }
            None => w.extend(d),
        }
    }
    let mut r = sys.residual(&w)?;
    let mut norm = max_abs(&r);
    let mut history = vec![norm];
    let mut iterations = 0;
    while norm >= opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NewtonStall { iterations, residual: norm, best: w, history });
        }
        iterations += 1;
        let jac = sys.jacobian(&w, |x| sys.residual(x))?;
        let rhs = -DVector::from_column_slice(&r);
        let step = jac
            .clone()
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .or_else(|| jac.svd(true, true).solve(&rhs, 1e-12).ok());
        let Some(step) = step else {
            return Err(Error::NewtonStall { iterations, residual: norm, best: w, history });
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = w.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            if let Ok(rt) = sys.residual(&trial) {
                let nt = max_abs(&rt);
                if nt < (1.0 - 1e-4 * t) * norm || nt < opts.tol {
                    w = trial;
                    r = rt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        history.push(norm);
        if !accepted {
            return Err(Error::NewtonStall { iterations, residual: norm, best: w, history });
        }
    }
    let (ansatz, shifts) = sys.to_ansatz(&w)?;
    let le = eps.ln().abs();
    let beta_rate = shifts.beta_norm() / (eps * le.ln());
    let shift_rate = (shifts.zeta_norm() + shifts.xi_norm()) * le / le.ln();
    let cbar_ratio = (0..m)
        .map(|i| ansatz.lambda[i].powf(-dim.k()) / eps_scale(eps) / cp.lambda[i])
        .collect();
    Ok(RefineReport {
        ansatz,
        shifts,
        iterations,
        history,
        residual: norm,
        axial: sys.axis.is_some(),
        beta_rate,
        shift_rate,
        cbar_ratio,
    })
}

/// Jacobian in `(ζ, ξ)` at `(Λ(x̄), x̄)` of the ε-independent part of the `λ` and `a` equations.
///
/// With `Q_i = (n-2)(H_iiμ_i² - Σ…)`, its Schur complement on the `ξ` block is `F̃''(x̄)`, so
/// `det L = det(-∂_μQ) · det F̃''(x̄)` and `L` is invertible exactly when `x̄` is nondegenerate.
pub fn linearized_operator(cp: &CriticalPoint, pattern: &SpikePattern, dom: &Domain, axial: bool) -> Result<DMatrix<f64>> {
    if cp.x.len() != pattern.m() {
        return Err(Error::InvalidParameter("critical point and pattern sizes differ".into()));
    }
    let axis = if axial {
        Some(cp.axis.clone().ok_or_else(|| Error::Configuration("critical point has no symmetry axis".into()))?)
    } else {
        None
    };
    let dim = dom.dim();
    let sys = System {
        dim,
        cbar: 1.0,
        pattern,
        dom,
        eps: 0.1,
        xbar: &cp.x,
        lam_bar: &cp.lambda,
        axis,
    };
    let m = pattern.m();
    let w = vec![0.0; m * (1 + sys.xi_dof())];
    sys.jacobian(&w, |x| {
        let mut full = vec![0.0; m];
        full.extend_from_slice(x);
        let (_, zeta, xi) = sys.unpack(&full);
        let mu: Vec<f64> = (0..m).map(|i| cp.lambda[i] + zeta[i]).collect();
        let a: Vec<Vec<f64>> = (0..m).map(|i| cp.x[i].iter().zip(&xi[i]).map(|(x, s)| x + s).collect()).collect();
        let (q, ra) = sys.core(&mu, &a)?;
        let mut out: Vec<f64> = q.iter().map(|v| -v).collect();
        out.extend(ra);
        Ok(out)
    })
}
