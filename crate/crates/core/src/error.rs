use thiserror::Error;

pub type Result<T> = std::result::Result<T, QesError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QesError {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("complete elliptic integral K(k) diverges at k = 1")]
    Divergence,

    #[error("pole of the Weierstrass function at x = {0}")]
    Pole(f64),

    #[error("division by a jet with zero value")]
    ZeroDivision,

    #[error("square root of non-positive jet value {0}")]
    NonPositiveRoot(f64),

    #[error("rank-deficient sample matrix (numerical rank {rank} of {cols} columns) on {nodes}")]
    Conditioning {
        rank: usize,
        cols: usize,
        nodes: String,
    },

    #[error("not QES at these parameters: invariance residual {residual:.3e} exceeds {tolerance:.1e}")]
    NotQes { residual: f64, tolerance: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),
}

impl QesError {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            QesError::Domain(_) | QesError::Parameter(_) => 1,
            QesError::NotQes { .. } => 2,
            _ => 3,
        }
    }
}
