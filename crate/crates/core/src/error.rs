use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension n = {0}: need 3 <= n <= {max}", max = crate::bubble::MAX_DIM)]
    Dimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point outside the domain: {0}")]
    OutsideDomain(String),

    #[error("Green's function is singular at coincident points")]
    Singular,

    #[error("quadrature did not converge: best estimate {best:.17e}, achieved tolerance {achieved:.3e}")]
    QuadratureNotConverged { best: f64, achieved: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("configuration not in ρ⁺ (least eigenvalue {rho:.3e})")]
    NotInRhoPlus { rho: f64 },

    #[error("Newton iteration stalled after {iterations} iterations (residual {residual:.3e})")]
    NewtonStall {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
        history: Vec<f64>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
