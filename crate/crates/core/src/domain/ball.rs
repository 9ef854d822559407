use serde::{Deserialize, Serialize};

use super::GreenDomain;
use crate::bubble::{dist2, Dimension};
use crate::{Error, Result};

/// Open ball `B(center, radius)`; Green's function by the Kelvin image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallDomain {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallDomain {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        Dimension::new(center.len())?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("ball center has non-finite coordinates".into()));
        }
        Ok(BallDomain { center, radius })
    }

    pub fn unit(n: usize) -> Result<Self> {
        BallDomain::new(vec![0.0; n], 1.0)
    }

    fn normalized(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), ci) in out.iter_mut().zip(x).zip(&self.center) {
            *o = (xi - ci) / self.radius;
        }
    }

    /// `q(X, Y) = 1 - 2 X·Y + |X|²|Y|²` in normalized coordinates, with `X`, `Y`.
    fn image_q(&self, x: &[f64], y: &[f64]) -> (f64, [f64; crate::bubble::MAX_DIM], [f64; crate::bubble::MAX_DIM]) {
        let n = x.len();
        let mut xs = [0.0; crate::bubble::MAX_DIM];
        let mut ys = [0.0; crate::bubble::MAX_DIM];
        self.normalized(x, &mut xs[..n]);
        self.normalized(y, &mut ys[..n]);
        let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
        for i in 0..n {
            xy += xs[i] * ys[i];
            xx += xs[i] * xs[i];
            yy += ys[i] * ys[i];
        }
        (1.0 - 2.0 * xy + xx * yy, xs, ys)
    }

    fn k_and_scale(&self) -> (f64, f64) {
        let n = self.center.len() as f64;
        ((n - 2.0) / 2.0, self.radius.powf(2.0 - n))
    }
}

impl GreenDomain for BallDomain {
    fn dim(&self) -> Dimension {
        Dimension::new(self.center.len()).expect("validated at construction")
    }

    fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.center.len() && dist2(y, &self.center) < self.radius * self.radius
    }

    fn dist_boundary_unchecked(&self, a: &[f64]) -> f64 {
        self.radius - dist2(a, &self.center).sqrt()
    }

    fn length_scale(&self) -> f64 {
        self.radius
    }

    fn robin(&self, x: &[f64], y: &[f64]) -> f64 {
        let (k, s) = self.k_and_scale();
        let (q, _, _) = self.image_q(x, y);
        s * q.powf(-k)
    }

    fn robin_grad_x(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let (k, s) = self.k_and_scale();
        let (q, xs, ys) = self.image_q(x, y);
        let n = x.len();
        let yy: f64 = ys[..n].iter().map(|v| v * v).sum();
        let c = -k * s * q.powf(-k - 1.0) / self.radius;
        for i in 0..n {
            out[i] = c * (-2.0 * ys[i] + 2.0 * yy * xs[i]);
        }
    }

    fn robin_hess_xx(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let (k, s) = self.k_and_scale();
        let (q, xs, ys) = self.image_q(x, y);
        let n = x.len();
        let yy: f64 = ys[..n].iter().map(|v| v * v).sum();
        let r2 = self.radius * self.radius;
        let c2 = k * (k + 1.0) * q.powf(-k - 2.0) * s / r2;
        let c1 = k * q.powf(-k - 1.0) * s / r2;
        for i in 0..n {
            let gi = -2.0 * ys[i] + 2.0 * yy * xs[i];
            for j in 0..n {
                let gj = -2.0 * ys[j] + 2.0 * yy * xs[j];
                let diag = if i == j { 2.0 * yy } else { 0.0 };
                out[i * n + j] = c2 * gi * gj - c1 * diag;
            }
        }
    }

    fn robin_hess_xy(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let (k, s) = self.k_and_scale();
        let (q, xs, ys) = self.image_q(x, y);
        let n = x.len();
        let xx: f64 = xs[..n].iter().map(|v| v * v).sum();
        let yy: f64 = ys[..n].iter().map(|v| v * v).sum();
        let r2 = self.radius * self.radius;
        let c2 = k * (k + 1.0) * q.powf(-k - 2.0) * s / r2;
        let c1 = k * q.powf(-k - 1.0) * s / r2;
        for i in 0..n {
            let gx = -2.0 * ys[i] + 2.0 * yy * xs[i];
            for j in 0..n {
                let gy = -2.0 * xs[j] + 2.0 * xx * ys[j];
                let mixed = if i == j { -2.0 } else { 0.0 } + 4.0 * xs[i] * ys[j];
                out[i * n + j] = c2 * gx * gy - c1 * mixed;
            }
        }
    }

    fn as_ball(&self) -> Option<&BallDomain> {
        Some(self)
    }
}

/// `ℝⁿ` with `H ≡ 0`; the whole-space reference for interaction integrals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WholeSpace {
    pub n: usize,
}

impl WholeSpace {
    pub fn new(n: usize) -> Result<Self> {
        Dimension::new(n)?;
        Ok(WholeSpace { n })
    }
}

impl GreenDomain for WholeSpace {
    fn dim(&self) -> Dimension {
        Dimension::new(self.n).expect("validated at construction")
    }

    fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.n && y.iter().all(|v| v.is_finite())
    }

    fn dist_boundary_unchecked(&self, _a: &[f64]) -> f64 {
        f64::INFINITY
    }

    fn length_scale(&self) -> f64 {
        1.0
    }

    fn robin(&self, _x: &[f64], _y: &[f64]) -> f64 {
        0.0
    }

    fn robin_grad_x(&self, _x: &[f64], _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn robin_hess_xx(&self, _x: &[f64], _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn robin_hess_xy(&self, _x: &[f64], _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn as_ball(&self) -> Option<&BallDomain> {
        None
    }
}
