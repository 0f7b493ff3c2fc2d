//! Chart calculus: forward-mode derivative scalars, smooth fields over
//! coordinates, and small dense tensor algebra.

pub mod field;
pub mod linalg;
pub mod tower;

pub use field::{lift_constants, lift_variables, MetricField, ScalarField, VectorField};
pub use linalg::{
    cholesky, cholesky_solve, invert_with_det, mat_vec, pairwise_sum, Mat, Pivot, Tensor3, Tensor4,
};
pub use tower::DualTower;
