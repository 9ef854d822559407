//! Gauss–Legendre rules and compensated summation.

use std::sync::OnceLock;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const MAX_CACHED: usize = 64;

fn build_rule(order: usize) -> GaussRule {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussRule { nodes, weights }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached Gauss–Legendre rule of the given order (1..=64).
pub fn gauss_legendre(order: usize) -> &'static GaussRule {
    static RULES: OnceLock<Vec<GaussRule>> = OnceLock::new();
    assert!((1..=MAX_CACHED).contains(&order), "unsupported Gauss order {order}");
    &RULES.get_or_init(|| (1..=MAX_CACHED).map(build_rule).collect())[order - 1]
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `∫_a^b f` with one Gauss panel of the given order.
#[inline]
pub fn panel<F: FnMut(f64) -> f64>(rule: &GaussRule, a: f64, b: f64, mut f: F) -> f64 {
    let h = 0.5 * (b - a);
    let m = 0.5 * (b + a);
    let mut acc = KahanSum::default();
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        acc.add(w * f(m + h * x));
    }
    h * acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for order in [2usize, 5, 16, 20, 40] {
            let r = gauss_legendre(order);
            let deg = 2 * order - 1;
            let approx = panel(r, 0.0, 1.0, |x| x.powi(deg as i32));
            assert!((approx - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "order {order}");
            let wsum: f64 = r.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let r = gauss_legendre(17);
        for w in r.nodes.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(r.nodes[8].abs() < 1e-15);
    }
}
