use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dense realization of dimension {dim} exceeds the cap for t={t}, local_dim={local_dim}")]
    DimensionOverflow { t: usize, local_dim: usize, dim: usize },

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },

    #[error("gate weights do not sum to 1 (sum {sum})")]
    BadWeights { sum: f64 },

    #[error("finite gate set is not dagger-symmetrized")]
    NotSymmetrized,

    #[error("Gram null-space dimension {found} does not match expected {expected}")]
    GramNullSpace { found: usize, expected: usize },

    #[error("Gram matrix inversion failed (t={t} too large for local_dim={local_dim})")]
    GramSingular { t: usize, local_dim: usize },

    #[error("pre-symmetrization asymmetry {asymmetry:.3e} exceeds tolerance {tolerance:.1e}")]
    Asymmetry { asymmetry: f64, tolerance: f64 },

    #[error("occupation basis dimension {dim} exceeds cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("local basis mismatch: expected dimension {expected}, got {got}")]
    BasisMismatch { expected: usize, got: usize },

    #[error("vector is not normalized (norm {norm})")]
    Unnormalized { norm: f64 },

    #[error("supplied vector is not an eigenvalue-1 eigenvector (residual {residual:.3e})")]
    NotFixedPoint { residual: f64 },

    #[error("iterative eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("operator is not U(2)-invariant (twirl deviation {deviation:.3e})")]
    NotInvariant { deviation: f64 },

    #[error("fewer than {needed} depths pass the signal filter ({found} usable)")]
    InsufficientSignal { needed: usize, found: usize },

    #[error("{0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
