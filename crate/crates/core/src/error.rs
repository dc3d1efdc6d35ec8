use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("measure has no atoms")]
    EmptyMeasure,

    #[error("{quantity} diverges")]
    Divergent { quantity: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("nodes {left} and {right} are too close to separate (|x_i - x_j| < 1e-14 x_i)")]
    CoincidentNodes { left: f64, right: f64 },

    #[error("eigenvalues {index} and {next} coincide at working precision ({value:e})", next = index + 1)]
    DegenerateSpectrum { index: usize, value: f64 },

    #[error("eigenvalue {index} is not positive ({value:e})")]
    NonPositiveEigenvalue { index: usize, value: f64 },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("atom count changed from {expected} to {found}")]
    AtomCountMismatch { expected: usize, found: usize },

    #[error("unknown reference spectrum `{0}`")]
    UnknownReference(String),

    #[error("hankel spectrum deviates by {deviation:e}; the kernel tail is not resolved, raise t_max to at least {suggested_t_max}")]
    UnresolvedTail { deviation: f64, suggested_t_max: f64 },

    #[error("hankel spectrum deviates by {deviation:e} (tolerance {tolerance:e}); refine the t-grid")]
    GridTooCoarse { deviation: f64, tolerance: f64 },
}

impl Error {
    /// Numerical-degeneracy failures, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CoincidentNodes { .. }
                | Error::DegenerateSpectrum { .. }
                | Error::NonPositiveEigenvalue { .. }
                | Error::NoConvergence { .. }
                | Error::AtomCountMismatch { .. }
                | Error::UnresolvedTail { .. }
                | Error::GridTooCoarse { .. }
        )
    }
}
