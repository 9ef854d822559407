use super::Dimension;

/// Split of `ln ln(e + λ^{(n-2)/2} U)` into the large-λ leading term, the `1/ln λ` correction
/// and the bracketed remainder, whose `(ln λ)²` multiple tends to `-2 (ln U)² / (n-2)²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogLogSplit {
    pub leading: f64,
    pub linear: f64,
    pub remainder: f64,
}

impl LogLogSplit {
    pub fn total(&self) -> f64 {
        self.leading + self.linear + self.remainder
    }
}

/// Requires `λ > e` and `U > 0`.
pub fn loglog_decompose(dim: Dimension, lambda: f64, u: f64) -> LogLogSplit {
    let k = dim.k();
    let ll = lambda.ln();
    let denom = (dim.nf() - 2.0) * ll;
    let leading = (k * ll).ln();
    let linear = 2.0 * u.ln() / denom;
    let remainder = (2.0 * ((1.0 - k * ll).exp() + u).ln() / denom).ln_1p() - linear;
    LogLogSplit { leading, linear, remainder }
}
