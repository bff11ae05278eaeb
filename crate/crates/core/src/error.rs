use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("compatibility condition violated{}: integral of f against phi0' is {integral:.6e}",
        order.map(|o| format!(" at order {o}")).unwrap_or_default())]
    Solvability { integral: f64, order: Option<usize> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("grid too coarse: spacing {h:.4e} exceeds 0.8*eps = {limit:.4e}")]
    Resolution { h: f64, limit: f64 },

    #[error("time step fell below dt_min = {dt_min:.3e}")]
    Stability { dt_min: f64 },

    #[error("time step {dt:.3e} exceeds the stability bound {bound:.3e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("solution diverged (non-finite values) at t = {t}")]
    Divergence { t: f64 },

    #[error("no zero crossing in field")]
    EmptyInterface,

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the failure came from user configuration rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::InvalidConfiguration(_) | Error::Resolution { .. }
        )
    }
}
