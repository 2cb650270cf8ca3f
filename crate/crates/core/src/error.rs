use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or configuration value violates its contract. `path` is the
    /// JSON-style location of the offending value.
    #[error("invalid parameter at `{path}`: {reason}")]
    InvalidParameter { path: String, reason: String },

    #[error("config schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("simulation exploded at t = {time}: {reason}")]
    Explosion { time: f64, reason: String },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("raster cell side {cell_side} is too coarse for subcube side {subcube_side}; refine the grid to at most {required}")]
    Resolution {
        cell_side: f64,
        subcube_side: f64,
        required: f64,
    },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (explosion, non-convergence) as
    /// opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Explosion { .. } | Error::NonConvergence { .. })
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::Schema { .. } | Error::Resolution { .. }
        )
    }
}
