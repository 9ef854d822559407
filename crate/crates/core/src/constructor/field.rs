use std::io::Write;

use super::SpikeAnsatz;
use crate::bubble::{delta_profile, Dimension, MAX_DIM};
use crate::domain::{Domain, GreenDomain, ProjectedBubble};
use crate::{Error, Result};

/// `u(y) = Σ α_i γ_i Pδ_i(y)` with its analytic gradient.
#[derive(Clone, Debug)]
pub struct Field {
    pub(crate) bubbles: Vec<ProjectedBubble>,
    pub(crate) coef: Vec<f64>,
    dim: Dimension,
}

/// Build the field evaluator of an ansatz. Bubbles with small `λd` are accepted; their
/// warnings are kept on the projected bubbles.
pub fn assemble(ansatz: &SpikeAnsatz, dom: &Domain) -> Result<Field> {
    let dim = dom.dim();
    if ansatz.a.iter().any(|a| a.len() != dim.n()) {
        return Err(Error::InvalidParameter("ansatz and domain dimensions differ".into()));
    }
    let bubbles = ansatz
        .bubbles()?
        .into_iter()
        .map(|b| ProjectedBubble::with_threshold(b, dom.clone(), 0.0))
        .collect::<Result<Vec<_>>>()?;
    let coef = (0..ansatz.m()).map(|i| ansatz.alpha[i] * ansatz.pattern.gamma(i)).collect();
    Ok(Field { bubbles, coef, dim })
}

impl Field {
    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn bubbles(&self) -> &[ProjectedBubble] {
        &self.bubbles
    }

    #[inline]
    pub fn value(&self, y: &[f64]) -> f64 {
        self.bubbles.iter().zip(&self.coef).map(|(b, c)| c * b.value(y)).sum()
    }

    pub fn value_checked(&self, y: &[f64]) -> Result<f64> {
        if !self.bubbles[0].domain.contains(y) {
            return Err(Error::OutsideDomain(format!("y = {y:?}")));
        }
        Ok(self.value(y))
    }

    pub fn grad_into(&self, y: &[f64], out: &mut [f64]) {
        let n = y.len();
        out.fill(0.0);
        let mut g = [0.0; MAX_DIM];
        for (b, c) in self.bubbles.iter().zip(&self.coef) {
            b.grad_into(y, &mut g[..n]);
            for i in 0..n {
                out[i] += c * g[i];
            }
        }
    }

    pub fn grad_sq(&self, y: &[f64]) -> f64 {
        let mut g = [0.0; MAX_DIM];
        self.grad_into(y, &mut g[..y.len()]);
        g[..y.len()].iter().map(|v| v * v).sum()
    }

    /// `-Δu = Σ α_i γ_i δ_i^p`, exact for the first-order projection.
    #[inline]
    pub fn source(&self, y: &[f64]) -> f64 {
        let p = self.dim.p();
        self.bubbles
            .iter()
            .zip(&self.coef)
            .map(|(b, c)| c * delta_profile(self.dim, b.base.lambda, b.base.dist2(y)).powf(p))
            .sum()
    }
}

/// One row per grid point: `y_1, …, y_n, u, |∇u|²`. Points outside the domain are skipped.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldTable {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

pub fn sample_field(field: &Field, grid: &[Vec<f64>]) -> FieldTable {
    let dom = &field.bubbles[0].domain;
    let rows = grid
        .iter()
        .filter(|y| dom.contains(y))
        .map(|y| {
            let mut row = y.clone();
            row.push(field.value(y));
            row.push(field.grad_sq(y));
            row
        })
        .collect();
    FieldTable { n: field.dim.n(), rows }
}

impl FieldTable {
    /// CSV with header `y_1,…,y_n,u,grad_sq` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header: Vec<String> = (1..=self.n).map(|i| format!("y_{i}")).collect();
        header.push("u".into());
        header.push("grad_sq".into());
        writeln!(w, "{}", header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Points of a uniform grid on the plane spanned by the first two coordinates.
pub fn plane_grid(dom: &Domain, per_side: usize) -> Vec<Vec<f64>> {
    let n = dom.dim().n();
    let (center, r) = match dom.as_ball() {
        Some(b) => (b.center.clone(), b.radius),
        None => (vec![0.0; n], 1.0),
    };
    let mut pts = Vec::with_capacity(per_side * per_side);
    for i in 0..per_side {
        for j in 0..per_side {
            let mut y = center.clone();
            y[0] += r * (-1.0 + 2.0 * (i as f64 + 0.5) / per_side as f64);
            y[1] += r * (-1.0 + 2.0 * (j as f64 + 0.5) / per_side as f64);
            pts.push(y);
        }
    }
    pts
}
