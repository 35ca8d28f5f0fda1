//! Crate-wide error type.
//!
//! Numerical preconditions (skewness, tangency, positive determinants, ...)
//! are checked at the public API boundary and reported through [`ShellError`]
//! rather than panics, so callers can surface them as CLI diagnostics.

use thiserror::Error;

/// Errors produced by the shell kernels, the mesh layer and the solver.
#[derive(Debug, Error)]
pub enum ShellError {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A matrix expected to be skew-symmetric is not, within tolerance.
    #[error("matrix is not skew-symmetric: deviation {deviation:.3e} exceeds {tol:.3e}")]
    NotSkew { deviation: f64, tol: f64 },

    /// A matrix expected to lie on SO(3) fails the orthogonality or
    /// determinant test.
    #[error("matrix is not a rotation: |R^T R - I| = {ortho_deviation:.3e}, det = {det:.17}")]
    NotRotation { ortho_deviation: f64, det: f64 },

    /// A rotation-field gradient is not tangent to SO(3) at the given point.
    #[error("{which} is not tangent: |sym(R^T dR)| = {deviation:.3e} exceeds {tol:.3e}")]
    NotTangent {
        deviation: f64,
        tol: f64,
        which: String,
    },

    /// An iterative kernel (polar projection, logarithm near the cut locus)
    /// cannot deliver the requested accuracy.
    #[error("ill-conditioned operation: {0}")]
    IllConditioned(String),

    /// A mesh element has non-positive or numerically vanishing area.
    #[error("degenerate triangle {element}: signed area {area:.3e}")]
    DegenerateTriangle { element: usize, area: f64 },

    /// Two per-node arrays disagree in length.
    #[error("size mismatch in {what}: expected {expected}, got {got}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// The line search could not find a step with sufficient decrease.
    #[error("line search stagnated at iteration {iteration} (step {step:.3e} after 60 halvings)")]
    Stagnation { iteration: usize, step: f64 },

    /// A text file (mesh, state, config) does not follow its format.
    #[error("parse error: {0}")]
    Parse(String),

    /// Filesystem failure while reading or writing an artifact.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ShellError {
    /// Convenience constructor for [`ShellError::InvalidArgument`].
    pub fn invalid(msg: impl Into<String>) -> Self {
        ShellError::InvalidArgument(msg.into())
    }

    /// Wrap an I/O error together with the offending path.
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        ShellError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, ShellError>;
