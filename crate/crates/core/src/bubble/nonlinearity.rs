use std::f64::consts::E;
use std::sync::Arc;

use super::Dimension;
use crate::quadrature::gauss::{gauss_legendre, panel, KahanSum};
use crate::{Error, Result};

/// Upper bound on ε accepted by [`Nonlinearity::new`].
pub const MAX_EPS: f64 = 0.5;

/// The family `f_ε(u) = |u|^{p-1} u / [ln(e + |u|)]^ε` and its antiderivative `F_ε`.
///
/// `F_ε` has no closed form for `ε > 0`. It is stored as `|u|^{p+1}/(p+1) · g(ln|u|)` with the
/// smooth ratio `g ∈ (0, 1]` interpolated by a Chebyshev series on a log-scaled range, built once
/// per `(n, ε)`.
#[derive(Clone, Debug)]
pub struct Nonlinearity {
    dim: Dimension,
    p: f64,
    eps: f64,
    ratio: Option<Arc<Chebyshev>>,
}

const LOG_T_MIN: f64 = -27.631_021_115_928_55; // ln 1e-12
const LOG_T_MAX: f64 = 69.077_552_789_821_37; // ln 1e30

impl Nonlinearity {
    pub fn new(dim: Dimension, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be >= 0, got {eps}")));
        }
        if eps > MAX_EPS {
            return Err(Error::InvalidParameter(format!("eps = {eps} exceeds the supported cap {MAX_EPS}")));
        }
        let p = dim.p();
        let ratio = if eps > 0.0 {
            Some(Arc::new(Chebyshev::fit(
                |x| antiderivative_ratio(p, eps, x.exp()),
                LOG_T_MIN,
                LOG_T_MAX,
                1e-14,
            )))
        } else {
            None
        };
        Ok(Nonlinearity { dim, p, eps, ratio })
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `f_ε(u)`.
    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        let a = u.abs();
        if a == 0.0 {
            return 0.0;
        }
        let base = a.powf(self.p - 1.0) * u;
        if self.eps == 0.0 {
            base
        } else {
            base * (E + a).ln().powf(-self.eps)
        }
    }

    /// The pure critical power `f_0(u) = |u|^{p-1} u`.
    #[inline]
    pub fn f0(&self, u: f64) -> f64 {
        let a = u.abs();
        if a == 0.0 {
            0.0
        } else {
            a.powf(self.p - 1.0) * u
        }
    }

    /// `f'_ε(u) = |u|^{p-1}/L^ε · (p - ε|u|/((e+|u|) L))` with `L = ln(e + |u|)`.
    pub fn f_prime(&self, u: f64) -> f64 {
        let a = u.abs();
        if a == 0.0 {
            return 0.0;
        }
        let l = (E + a).ln();
        let q = a / ((E + a) * l);
        a.powf(self.p - 1.0) * l.powf(-self.eps) * (self.p - self.eps * q)
    }

    /// `f''_ε(u)`. At `u = 0` returns 0 (the odd extension), which is the limit for `n < 6`.
    pub fn f_second(&self, u: f64) -> f64 {
        let a = u.abs();
        if a == 0.0 {
            return 0.0;
        }
        let (p, eps) = (self.p, self.eps);
        let l = (E + a).ln();
        let le = l.powf(-eps);
        let q = a / ((E + a) * l);
        let sgn = u.signum();
        let t1 = eps * a.powf(p - 1.0) * sgn * le * (a - E * l) / ((E + a).powi(2) * l * l);
        let t2 = a.powf(p - 2.0) * sgn * le * (p - 1.0 - eps * q) * (p - eps * q);
        t1 + t2
    }

    /// `F_ε(u) = ∫_0^u f_ε`.
    pub fn antiderivative(&self, u: f64) -> f64 {
        let a = u.abs();
        if a == 0.0 {
            return 0.0;
        }
        let power = a.powf(self.p + 1.0) / (self.p + 1.0);
        match &self.ratio {
            None => power,
            Some(cheb) => {
                let x = a.ln();
                if x < LOG_T_MIN {
                    // g(t) = 1 - O(ε t)
                    power
                } else if x > LOG_T_MAX {
                    power * antiderivative_ratio(self.p, self.eps, a)
                } else {
                    power * cheb.eval(x)
                }
            }
        }
    }

    /// `ln ln(e + |u|)`, the factor appearing in the ε-expansion of `f_ε`.
    #[inline]
    pub fn loglog(u: f64) -> f64 {
        (E + u.abs()).ln().ln()
    }
}

/// `g(t) = (p+1) ∫_0^1 v^p [ln(e + t v)]^{-ε} dv`, so that `F_ε(t) = t^{p+1} g(t)/(p+1)`.
pub(crate) fn antiderivative_ratio(p: f64, eps: f64, t: f64) -> f64 {
    let rule = gauss_legendre(16);
    let v_min = 1e-17f64.powf(1.0 / (p + 1.0));
    let mut acc = KahanSum::default();
    let mut hi = 1.0;
    while hi > v_min {
        let lo = 0.5 * hi;
        acc.add(panel(rule, lo, hi, |v| v.powf(p) * (E + t * v).ln().powf(-eps)));
        hi = lo;
    }
    (p + 1.0) * acc.value()
}

/// Chebyshev series on `[a, b]`.
#[derive(Debug)]
pub(crate) struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolate at Chebyshev points, doubling the degree until the trailing coefficients
    /// fall below `tol` relative to the largest one.
    pub(crate) fn fit<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Self {
        let mut deg = 32;
        loop {
            let coeffs = cheb_coeffs(&f, a, b, deg);
            let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            let tail = coeffs[deg - 4..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if tail <= tol * scale || deg >= 2048 {
                let keep = coeffs
                    .iter()
                    .rposition(|c| c.abs() > 0.01 * tol * scale)
                    .map_or(1, |i| i + 1);
                return Chebyshev { a, b, coeffs: coeffs[..keep].to_vec() };
            }
            deg *= 2;
        }
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }
}

fn cheb_coeffs<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    let vals: Vec<f64> = (0..n)
        .map(|k| {
            let t = (PI * (k as f64 + 0.5) / n as f64).cos();
            f(0.5 * (b - a) * t + 0.5 * (b + a))
        })
        .collect();
    (0..n)
        .map(|j| {
            let s: f64 = vals
                .iter()
                .enumerate()
                .map(|(k, v)| v * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                .sum();
            let c = 2.0 * s / n as f64;
            if j == 0 {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nl(n: usize, eps: f64) -> Nonlinearity {
        Nonlinearity::new(Dimension::new(n).unwrap(), eps).unwrap()
    }

    #[test]
    fn zero_and_pure_power() {
        let f = nl(4, 0.0);
        assert_eq!(f.f(0.0), 0.0);
        for u in [-3.0, -0.5, 0.1, 2.0, 1e4] {
            assert_eq!(f.f(u), (u as f64).abs().powf(2.0) * u);
        }
    }

    #[test]
    fn rejects_out_of_range_eps() {
        let d = Dimension::new(4).unwrap();
        assert!(Nonlinearity::new(d, -1e-3).is_err());
        assert!(Nonlinearity::new(d, 0.6).is_err());
        assert!(Nonlinearity::new(d, f64::NAN).is_err());
    }

    #[test]
    fn epsilon_perturbation_bound() {
        // |f_ε(U) - f_0(U)| ≤ ε |U|^p lnln(e+|U|)
        let f = nl(4, 0.01);
        let mut u = 1e-6;
        while u <= 1e6 {
            let lhs = (f.f(u) - f.f0(u)).abs();
            let rhs = 0.01 * u.powf(f.p()) * Nonlinearity::loglog(u);
            // the difference carries the rounding of two values of size |f_0(u)|
            let ulp = 4.0 * f64::EPSILON * f.f0(u).abs();
            assert!(lhs <= rhs * (1.0 + 1e-12) + ulp, "u = {u}: {lhs} > {rhs}");
            u *= 1.37;
        }
    }

    #[test]
    fn derivative_bounds_hold_with_small_constant() {
        for n in 3..=7 {
            let f = nl(n, MAX_EPS);
            let f0 = nl(n, 0.0);
            let mut u = 1e-4;
            while u < 1e8 {
                let fp = f.f_prime(u);
                assert!(fp.abs() <= f.p() * u.powf(f.p() - 1.0));
                let bound = MAX_EPS
                    * u.powf(f.p() - 1.0)
                    * (f.p() * Nonlinearity::loglog(u) + 1.0 / (E + u).ln());
                assert!((fp - f0.f_prime(u)).abs() <= bound * (1.0 + 1e-12));
                assert!(f.f_second(u).abs() <= (f.p() * f.p() + 1.0) * u.powf(f.p() - 2.0));
                u *= 1.9;
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = nl(5, 0.2);
        for u in [-7.0f64, -0.3, 0.05, 1.3, 40.0, 3e3] {
            let h = 1e-5 * u.abs();
            let fd1 = (f.f(u + h) - f.f(u - h)) / (2.0 * h);
            assert!((fd1 - f.f_prime(u)).abs() <= 1e-7 * f.f_prime(u).abs());
            let fd2 = (f.f_prime(u + h) - f.f_prime(u - h)) / (2.0 * h);
            assert!((fd2 - f.f_second(u)).abs() <= 1e-6 * f.f_second(u).abs());
        }
    }

    #[test]
    fn antiderivative_matches_direct_quadrature() {
        // oracle: composite Gauss on geometric panels of [0, u] in the original variable
        for (n, eps) in [(4, 0.01), (3, 0.3), (6, 0.5)] {
            let f = nl(n, eps);
            let rule = gauss_legendre(24);
            for u in [1e-3, 0.7, 3.0, 250.0, 1e5, 3e9] {
                let mut acc = 0.0;
                let mut hi = u;
                while hi > u * 1e-18 {
                    acc += panel(rule, 0.5 * hi, hi, |t| f.f(t));
                    hi *= 0.5;
                }
                let got = f.antiderivative(u);
                assert!((got - acc).abs() <= 1e-10 * acc.abs(), "n={n} eps={eps} u={u}: {got} vs {acc}");
                assert_eq!(f.antiderivative(-u), got);
            }
        }
    }

    #[test]
    fn antiderivative_derivative_is_f() {
        let f = nl(4, 0.1);
        for u in [0.2, 5.0, 1e3] {
            let h = 1e-5 * u;
            let fd = (f.antiderivative(u + h) - f.antiderivative(u - h)) / (2.0 * h);
            assert!((fd - f.f(u)).abs() < 1e-7 * f.f(u));
        }
    }

    proptest! {
        #[test]
        fn f_is_odd(u in -1e5f64..1e5, eps in 0.0f64..0.5) {
            let f = nl(4, eps);
            prop_assert_eq!(f.f(-u), -f.f(u));
            prop_assert_eq!(f.f_prime(-u), f.f_prime(u));
        }
    }
}
