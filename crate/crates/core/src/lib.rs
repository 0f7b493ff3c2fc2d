//! Numerical toolkit for generalized Lagrange geometry.
//!
//! The crate builds up from a forward-mode derivative engine ([`chart`]) to
//! classical Riemannian machinery ([`riemannian`]), conformal
//! direction-dependent metrics with their electromagnetic and gravitational
//! quantities ([`gl_metric`]), discretized direction energies and first-order
//! system residuals ([`variational`]), orbit and geodesic flows ([`flows`]),
//! and a config-driven scenario runner ([`scenario`]).
//!
//! Core math is generic over the base scalar type; concrete `f64` aliases are
//! exported at the crate root.

pub mod chart;
pub mod error;
pub mod flows;
pub mod gl_metric;
pub mod riemannian;
pub mod scalar;
pub mod scenario;
pub mod table;
pub mod variational;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` second-order forward-mode scalar.
pub type DualTower64 = chart::DualTower<f64>;
/// `f64` scalar field.
pub type ScalarField64 = chart::ScalarField<f64>;
/// `f64` vector field.
pub type VectorField64 = chart::VectorField<f64>;
/// `f64` metric field.
pub type MetricField64 = chart::MetricField<f64>;
/// `f64` dense matrix.
pub type Mat64 = chart::Mat<f64>;
/// `f64` generalized Lagrange metric.
pub type GLMetric64 = gl_metric::GLMetric<f64>;
/// `f64` smooth map between chart domains.
pub type SmoothMap64 = variational::SmoothMap<f64>;
/// `f64` tensor-product quadrature mesh.
pub type MeshQuadrature64 = variational::MeshQuadrature<f64>;
/// `f64` direction section.
pub type DirectionSection64 = variational::DirectionSection<f64>;
/// `f64` integrated trajectory.
pub type Trajectory64 = flows::Trajectory<f64>;
