//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by field evaluation, geometry, quadrature and flows.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Arithmetic left the domain (log of a non-positive value, division by
    /// zero, overflow) while evaluating `context` at the given coordinates.
    #[error("non-finite value in {context} at {coords:?}")]
    NonFinite { context: String, coords: Vec<f64> },

    /// A metric failed the positive-definiteness test (Cholesky).
    #[error("metric is not positive definite at {coords:?}")]
    DegenerateMetric { coords: Vec<f64> },

    /// A metric closure produced a non-symmetric matrix.
    #[error("metric is not symmetric at {coords:?}")]
    AsymmetricMetric { coords: Vec<f64> },

    /// Evaluation was requested on the singular locus of a generalized
    /// Lagrange metric.
    #[error("point lies on the singular locus at {coords:?}")]
    SingularLocus { coords: Vec<f64> },

    /// The gradient vanished where a level hypersurface was required.
    #[error("vanishing gradient at {coords:?}: level set is not a hypersurface")]
    VanishingGradient { coords: Vec<f64> },

    /// The pairing `<delta f, T>` vanished at a quadrature node.
    #[error("excluded set: <delta f, T> = 0 at node {node} {coords:?}")]
    ExcludedNode { node: usize, coords: Vec<f64> },

    /// A functional hit the singular locus at a quadrature node.
    #[error("singular locus hit at node {node} {coords:?}")]
    SingularNode { node: usize, coords: Vec<f64> },

    /// An integrated trajectory hit a degenerate metric.
    #[error("metric degenerated along trajectory at t = {t}")]
    TrajectoryDegenerate { t: f64 },

    /// An integrated trajectory produced non-finite values.
    #[error("non-finite state along trajectory at t = {t}")]
    TrajectoryNonFinite { t: f64 },

    /// The velocity Hessian of the Lagrangian was not invertible.
    #[error("singular mass matrix at t = {t}")]
    SingularMass { t: f64 },

    /// The gravific constant must be nonzero.
    #[error("gravific constant must be nonzero")]
    ZeroGravific,

    /// Mismatched dimensions between inputs.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A precondition on arguments failed.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
