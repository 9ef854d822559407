use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the exponent; zero for exact data.
    pub stderr: f64,
}

/// Fit `y ≈ e^{intercept} x^{exponent}`. Needs at least 4 points with positive coordinates.
pub fn rate_fit(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter("rate_fit: xs and ys lengths differ".into()));
    }
    if xs.len() < 4 {
        return Err(Error::InvalidParameter(format!("rate_fit needs at least 4 points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("rate_fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("rate_fit: all x values coincide".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let stderr = (sse / (m - 2.0) / sxx).sqrt();
    Ok(RateFit { exponent, intercept, r2, stderr })
}

/// Value at `x = 0` of the interpolating polynomial through `(xs, ys)` (Neville).
pub fn richardson_zero(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::InvalidParameter("richardson_zero needs matching non-empty inputs".into()));
    }
    let mut p = ys.to_vec();
    let m = xs.len();
    for lvl in 1..m {
        for i in 0..m - lvl {
            let (xi, xj) = (xs[i], xs[i + lvl]);
            if xi == xj {
                return Err(Error::InvalidParameter("richardson_zero: repeated abscissa".into()));
            }
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    Ok(p[0])
}

/// Linear least squares for `y ≈ c₀ + c₁ g(x)`.
pub(crate) fn affine_fit(gs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = gs.len() as f64;
    let mg = gs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sgg: f64 = gs.iter().map(|g| (g - mg).powi(2)).sum();
    let sgy: f64 = gs.iter().zip(ys).map(|(g, y)| (g - mg) * (y - my)).sum();
    let c1 = if sgg == 0.0 { 0.0 } else { sgy / sgg };
    (my - c1 * mg, c1)
}
