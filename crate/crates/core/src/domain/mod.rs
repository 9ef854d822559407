//! Model domains with closed-form Green's functions, and the projected bubble `Pδ`.
//!
//! `G(x, y) = |x - y|^{2-n} - H(x, y)` with `H` harmonic in each variable and `G = 0` on the
//! boundary. Derivatives are taken in the first (`_a`) or second (`_b`) variable.

mod ball;
mod projected;

pub use ball::{BallDomain, WholeSpace};
pub use projected::{ProjectedBubble, DEFAULT_LAMBDA_D_THRESHOLD};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bubble::{dist2, Dimension, MAX_DIM};
use crate::{Error, Result};

/// Geometry plus Robin function `H` and its derivatives. Implementations may assume their
/// arguments lie in the domain; the checked free functions of this module validate first.
pub trait GreenDomain: Send + Sync {
    fn dim(&self) -> Dimension;
    fn contains(&self, y: &[f64]) -> bool;
    fn dist_boundary_unchecked(&self, a: &[f64]) -> f64;
    /// Characteristic length (the radius for a ball); finite-difference steps scale with it.
    fn length_scale(&self) -> f64;
    fn robin(&self, x: &[f64], y: &[f64]) -> f64;
    /// `∂H/∂x`.
    fn robin_grad_x(&self, x: &[f64], y: &[f64], out: &mut [f64]);
    /// `∂²H/∂x∂x`, row-major `n × n`.
    fn robin_hess_xx(&self, x: &[f64], y: &[f64], out: &mut [f64]);
    /// `∂²H/∂x_i∂y_j`, row-major `n × n`.
    fn robin_hess_xy(&self, x: &[f64], y: &[f64], out: &mut [f64]);
    fn as_ball(&self) -> Option<&BallDomain>;

    /// `∂H/∂y`, from the symmetry `H(x, y) = H(y, x)`.
    fn robin_grad_y(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.robin_grad_x(y, x, out);
    }
}

/// The domains available to configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ball(BallDomain),
    WholeSpace(WholeSpace),
}

impl Domain {
    pub fn unit_ball(n: usize) -> Result<Self> {
        Ok(BallDomain::unit(n)?.into())
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Ball(b) => BallDomain::new(b.center.clone(), b.radius).map(|_| ()),
            Domain::WholeSpace(w) => WholeSpace::new(w.n).map(|_| ()),
        }
    }
}

impl From<BallDomain> for Domain {
    fn from(b: BallDomain) -> Self {
        Domain::Ball(b)
    }
}

impl From<WholeSpace> for Domain {
    fn from(w: WholeSpace) -> Self {
        Domain::WholeSpace(w)
    }
}

macro_rules! forward {
    ($self:ident, $d:ident => $e:expr) => {
        match $self {
            Domain::Ball($d) => $e,
            Domain::WholeSpace($d) => $e,
        }
    };
}

impl GreenDomain for Domain {
    fn dim(&self) -> Dimension {
        forward!(self, d => d.dim())
    }

    fn contains(&self, y: &[f64]) -> bool {
        forward!(self, d => d.contains(y))
    }

    fn dist_boundary_unchecked(&self, a: &[f64]) -> f64 {
        forward!(self, d => d.dist_boundary_unchecked(a))
    }

    fn length_scale(&self) -> f64 {
        forward!(self, d => d.length_scale())
    }

    #[inline]
    fn robin(&self, x: &[f64], y: &[f64]) -> f64 {
        forward!(self, d => d.robin(x, y))
    }

    fn robin_grad_x(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        forward!(self, d => d.robin_grad_x(x, y, out))
    }

    fn robin_hess_xx(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        forward!(self, d => d.robin_hess_xx(x, y, out))
    }

    fn robin_hess_xy(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        forward!(self, d => d.robin_hess_xy(x, y, out))
    }

    fn as_ball(&self) -> Option<&BallDomain> {
        forward!(self, d => d.as_ball())
    }
}

fn check_point<D: GreenDomain + ?Sized>(dom: &D, x: &[f64], what: &str) -> Result<()> {
    if x.len() != dom.dim().n() {
        return Err(Error::InvalidParameter(format!(
            "{what} has {} coordinates, domain dimension is {}",
            x.len(),
            dom.dim().n()
        )));
    }
    if !dom.contains(x) {
        return Err(Error::OutsideDomain(format!("{what} = {x:?}")));
    }
    Ok(())
}

fn check_pair<D: GreenDomain + ?Sized>(dom: &D, x: &[f64], y: &[f64], distinct: bool) -> Result<()> {
    check_point(dom, x, "x")?;
    check_point(dom, y, "y")?;
    if distinct && dist2(x, y) == 0.0 {
        return Err(Error::Singular);
    }
    Ok(())
}

/// Singular part `|x - y|^{2-n}`.
#[inline]
pub(crate) fn fundamental(n: usize, x: &[f64], y: &[f64]) -> f64 {
    dist2(x, y).powf(-(n as f64 - 2.0) / 2.0)
}

/// `∂/∂x |x - y|^{2-n} = (2-n)|d|^{-n} d`, `d = x - y`.
pub(crate) fn fundamental_grad_x(n: usize, x: &[f64], y: &[f64], out: &mut [f64]) {
    let r2 = dist2(x, y);
    let c = (2.0 - n as f64) * r2.powf(-(n as f64) / 2.0);
    for i in 0..n {
        out[i] = c * (x[i] - y[i]);
    }
}

/// `∂²/∂x∂x |x - y|^{2-n} = (2-n)|d|^{-n}(I - n d dᵀ/|d|²)`.
pub(crate) fn fundamental_hess_xx(n: usize, x: &[f64], y: &[f64], out: &mut [f64]) {
    let r2 = dist2(x, y);
    let nf = n as f64;
    let c = (2.0 - nf) * r2.powf(-nf / 2.0);
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            out[i * n + j] = c * (id - nf * (x[i] - y[i]) * (x[j] - y[j]) / r2);
        }
    }
}

pub fn green_g<D: GreenDomain + ?Sized>(dom: &D, x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(dom, x, y, true)?;
    Ok(fundamental(x.len(), x, y) - dom.robin(x, y))
}

pub fn robin_h<D: GreenDomain + ?Sized>(dom: &D, x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(dom, x, y, false)?;
    Ok(dom.robin(x, y))
}

/// `∂H/∂a (a, b)`.
pub fn grad_h_a<D: GreenDomain + ?Sized>(dom: &D, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_pair(dom, a, b, false)?;
    let mut out = vec![0.0; a.len()];
    dom.robin_grad_x(a, b, &mut out);
    Ok(out)
}

/// `∂G/∂a (a, b)`.
pub fn grad_g_a<D: GreenDomain + ?Sized>(dom: &D, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_pair(dom, a, b, true)?;
    Ok(green_grad_a_unchecked(dom, a, b))
}

/// `∂G/∂b (a, b)`.
pub fn grad_g_b<D: GreenDomain + ?Sized>(dom: &D, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_pair(dom, a, b, true)?;
    Ok(green_grad_a_unchecked(dom, b, a))
}

pub(crate) fn green_grad_a_unchecked<D: GreenDomain + ?Sized>(dom: &D, a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    let mut h = [0.0; MAX_DIM];
    fundamental_grad_x(n, a, b, &mut out);
    dom.robin_grad_x(a, b, &mut h[..n]);
    for i in 0..n {
        out[i] -= h[i];
    }
    out
}

fn to_matrix(n: usize, buf: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, buf)
}

/// `∂²H/∂a∂a (a, b)`.
pub fn hess_h_aa<D: GreenDomain + ?Sized>(dom: &D, a: &[f64], b: &[f64]) -> Result<DMatrix<f64>> {
    check_pair(dom, a, b, false)?;
    let n = a.len();
    let mut buf = vec![0.0; n * n];
    dom.robin_hess_xx(a, b, &mut buf);
    Ok(to_matrix(n, &buf))
}

/// `∂²H/∂a_i∂b_j (a, b)`.
pub fn hess_h_ab<D: GreenDomain + ?Sized>(dom: &D, a: &[f64], b: &[f64]) -> Result<DMatrix<f64>> {
    check_pair(dom, a, b, false)?;
    let n = a.len();
    let mut buf = vec![0.0; n * n];
    dom.robin_hess_xy(a, b, &mut buf);
    Ok(to_matrix(n, &buf))
}

/// `∂²G/∂a∂a (a, b)`.
pub fn hess_g_aa<D: GreenDomain + ?Sized>(dom: &D, a: &[f64], b: &[f64]) -> Result<DMatrix<f64>> {
    check_pair(dom, a, b, true)?;
    let n = a.len();
    let mut f = vec![0.0; n * n];
    fundamental_hess_xx(n, a, b, &mut f);
    Ok(to_matrix(n, &f) - hess_h_aa(dom, a, b)?)
}

/// `∂²G/∂a_i∂b_j (a, b)`.
pub fn hess_g_ab<D: GreenDomain + ?Sized>(dom: &D, a: &[f64], b: &[f64]) -> Result<DMatrix<f64>> {
    check_pair(dom, a, b, true)?;
    let n = a.len();
    let mut f = vec![0.0; n * n];
    fundamental_hess_xx(n, a, b, &mut f);
    Ok(-to_matrix(n, &f) - hess_h_ab(dom, a, b)?)
}

pub fn dist_boundary<D: GreenDomain + ?Sized>(dom: &D, a: &[f64]) -> Result<f64> {
    check_point(dom, a, "a")?;
    Ok(dom.dist_boundary_unchecked(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, ball: &BallDomain, max_frac: f64) -> Vec<f64> {
        let n = ball.center.len();
        loop {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r2: f64 = v.iter().map(|x| x * x).sum();
            if r2 < max_frac * max_frac {
                return v.iter().zip(&ball.center).map(|(x, c)| c + ball.radius * x).collect();
            }
        }
    }

    #[test]
    fn robin_at_center_and_diagonal() {
        let d: Domain = BallDomain::unit(4).unwrap().into();
        assert_eq!(robin_h(&d, &[0.0; 4], &[0.0; 4]).unwrap(), 1.0);
        let x = [0.5, 0.0, 0.0, 0.0];
        assert!((robin_h(&d, &x, &x).unwrap() - 0.75f64.powi(-2)).abs() < 1e-13);
        assert_eq!(grad_h_a(&d, &[0.0; 4], &[0.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn robin_of_scaled_ball_at_center() {
        for n in 3..=6 {
            let b = BallDomain::new(vec![0.3; n], 2.5).unwrap();
            let h = robin_h(&b, &b.center, &b.center).unwrap();
            assert!((h - 2.5f64.powf(2.0 - n as f64)).abs() < 1e-14);
        }
    }

    #[test]
    fn green_vanishes_near_boundary() {
        let b = BallDomain::unit(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = random_point(&mut rng, &b, 0.8);
            let mut y = random_point(&mut rng, &b, 1.0);
            let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            y.iter_mut().for_each(|v| *v *= (1.0 - 1e-7) / r);
            let g = green_g(&b, &x, &y).unwrap();
            assert!(g.abs() < 1e-5, "{g}");
            assert!(green_g(&b, &x, &random_point(&mut rng, &b, 0.99)).unwrap() > 0.0);
        }
    }

    #[test]
    fn domain_errors() {
        let b = BallDomain::unit(4).unwrap();
        assert!(matches!(green_g(&b, &[0.0; 4], &[0.0; 4]), Err(Error::Singular)));
        assert!(matches!(robin_h(&b, &[1.5, 0.0, 0.0, 0.0], &[0.0; 4]), Err(Error::OutsideDomain(_))));
        assert!(matches!(dist_boundary(&b, &[0.0; 3]), Err(Error::InvalidParameter(_))));
        assert_eq!(dist_boundary(&b, &[0.5, 0.0, 0.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn harmonic_in_second_variable() {
        let b = BallDomain::new(vec![0.1, -0.2, 0.0, 0.05], 1.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let x = random_point(&mut rng, &b, 0.8);
            let y = random_point(&mut rng, &b, 0.8);
            let h = 1e-3;
            let mut lap = 0.0;
            for i in 0..4 {
                let at = |s: f64| {
                    let mut z = y.clone();
                    z[i] += s;
                    b.robin(&x, &z)
                };
                lap += (-at(2.0 * h) + 16.0 * at(h) - 30.0 * at(0.0) + 16.0 * at(-h) - at(-2.0 * h)) / (12.0 * h * h);
            }
            assert!(lap.abs() < 1e-6 * b.robin(&x, &y), "{lap}");
        }
    }

    #[test]
    fn derivatives_match_richardson_differences() {
        for n in [3usize, 4, 6] {
            let b = BallDomain::new(vec![0.2; n], 1.7).unwrap();
            let d: Domain = b.clone().into();
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            for _ in 0..20 {
                let x = random_point(&mut rng, &b, 0.85);
                let y = random_point(&mut rng, &b, 0.85);
                let h = 1e-3 * b.radius;
                let rich = |f: &dyn Fn(f64) -> f64| {
                    (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h)
                };
                let shift = |p: &[f64], i: usize, s: f64| {
                    let mut q = p.to_vec();
                    q[i] += s;
                    q
                };
                let gh = grad_h_a(&d, &x, &y).unwrap();
                let ga = grad_g_a(&d, &x, &y).unwrap();
                let gb = grad_g_b(&d, &x, &y).unwrap();
                let haa = hess_h_aa(&d, &x, &y).unwrap();
                let hab = hess_h_ab(&d, &x, &y).unwrap();
                let gaa = hess_g_aa(&d, &x, &y).unwrap();
                let gab = hess_g_ab(&d, &x, &y).unwrap();
                let close = |a: f64, b: f64, scale: f64| (a - b).abs() <= 1e-6 * scale.max(b.abs());
                let hscale = gh.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let gscale = ga.iter().chain(&gb).fold(0.0f64, |m, v| m.max(v.abs()));
                for i in 0..n {
                    let fd = rich(&|s| b.robin(&shift(&x, i, s), &y));
                    assert!(close(gh[i], fd, hscale));
                    let fd = rich(&|s| green_g(&d, &shift(&x, i, s), &y).unwrap());
                    assert!(close(ga[i], fd, gscale));
                    let fd = rich(&|s| green_g(&d, &x, &shift(&y, i, s)).unwrap());
                    assert!(close(gb[i], fd, gscale));
                    for j in 0..n {
                        let fd = rich(&|s| grad_h_a(&d, &shift(&x, j, s), &y).unwrap()[i]);
                        assert!(close(haa[(i, j)], fd, haa.amax()));
                        let fd = rich(&|s| grad_h_a(&d, &x, &shift(&y, j, s)).unwrap()[i]);
                        assert!(close(hab[(i, j)], fd, hab.amax()));
                        let fd = rich(&|s| grad_g_a(&d, &shift(&x, j, s), &y).unwrap()[i]);
                        assert!(close(gaa[(i, j)], fd, gaa.amax()));
                        let fd = rich(&|s| grad_g_a(&d, &x, &shift(&y, j, s)).unwrap()[i]);
                        assert!(close(gab[(i, j)], fd, gab.amax()));
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn green_symmetric(seed in 0u64..1000) {
            let b = BallDomain::new(vec![0.5, 0.0, -1.0, 0.0], 2.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_point(&mut rng, &b, 0.95);
            let y = random_point(&mut rng, &b, 0.95);
            let (g1, g2) = (green_g(&b, &x, &y).unwrap(), green_g(&b, &y, &x).unwrap());
            prop_assert!((g1 - g2).abs() <= 1e-12 * g1.abs());
            let h1 = hess_h_ab(&b, &x, &y).unwrap();
            let h2 = hess_h_ab(&b, &y, &x).unwrap();
            prop_assert!((&h1 - h2.transpose()).amax() <= 1e-12 * h1.amax());
        }

        #[test]
        fn robin_diagonal_closed_form(r in 0.0f64..0.95, n in 3usize..8) {
            let b = BallDomain::unit(n).unwrap();
            let mut x = vec![0.0; n];
            x[n - 1] = r;
            let want = (1.0 - r * r).powf(2.0 - n as f64);
            prop_assert!((b.robin(&x, &x) - want).abs() <= 1e-12 * want);
        }
    }
}
