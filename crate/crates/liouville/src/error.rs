use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quadrature did not stabilize within {tol:e}: last iterates {prev} and {last}")]
    Quadrature { tol: f64, prev: f64, last: f64 },
    #[error("covariance not positive semidefinite after jitter {jitter:e}; smallest eigenvalue {min_eigenvalue:e}")]
    NotPsd { jitter: f64, min_eigenvalue: f64 },
    #[error("resolution: {0}")]
    Resolution(String),
    #[error("gamma = {gamma} outside the subcritical range (0, {threshold})")]
    Supercritical { gamma: f64, threshold: f64 },
    #[error("Seiberg bound violated: {0}")]
    Seiberg(String),
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("numeric: {0}")]
    Numeric(String),
}

impl Error {
    /// Process exit code class: 1 numeric/convergence, 3 precondition.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Quadrature { .. } | Error::NotPsd { .. } | Error::Numeric(_) => 1,
            _ => 3,
        }
    }

    pub fn module(&self) -> &'static str {
        match self {
            Error::Quadrature { .. } | Error::NotPsd { .. } | Error::Resolution(_) => "field",
            Error::Supercritical { .. } => "gmc",
            Error::Seiberg(_) => "lqft",
            _ => "core",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
