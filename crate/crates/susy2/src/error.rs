use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum SusyError {
    /// Two grid functions that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A solution magnitude exceeded the overflow cap during integration.
    #[error("solution magnitude exceeded {cap:e} near x = {x}; rescale or shrink the domain")]
    Overflow { x: f64, cap: f64 },

    /// The outer-grid behaviour of a function cannot be classified; usually
    /// means the truncation half-width L is too small.
    #[error("ambiguous asymptotics: {0}")]
    AmbiguousAsymptotics(String),

    /// The input of a solution map lies in the kernel of the transformation
    /// operator; the image is identically zero.
    #[error("kernel input: {0}")]
    KernelInput(String),

    /// Transformation functions whose boundary signatures match no case of
    /// the classification tables.
    #[error("inconsistent transformation spec: {0}")]
    InconsistentSpec(String),

    /// An iterative method exhausted its iteration budget.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A grid function could not be resampled onto the requested grid.
    #[error("resample error: {0}")]
    ResampleError(String),

    /// An operation requiring a grid symmetric about the origin received an
    /// asymmetric one.
    #[error("asymmetric grid: {0}")]
    AsymmetricGrid(String),

    /// Example parameters violate the constraints of the requested case.
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    /// Anything else that makes an input unusable.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SusyError>;
