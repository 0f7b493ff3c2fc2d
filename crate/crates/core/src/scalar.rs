//! Base scalar abstraction.
//!
//! All numerical machinery in this crate is generic over the floating-point
//! type. Concrete aliases for `f64` live at the crate root.

use std::fmt::{Debug, Display};

/// Floating-point scalar the library is generic over (`f32` or `f64`).
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal must be representable in the scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Lossy view of a coordinate slice as `f64`, used for error reporting.
pub fn coords_f64<F: Real>(x: &[F]) -> Vec<f64> {
    x.iter()
        .map(|v| num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::NAN))
        .collect()
}
