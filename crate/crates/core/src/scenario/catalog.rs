//! Fixed catalog of field expressions the scenario configs can name.
//!
//! The catalog stays deliberately small (linear, rotation, exponential,
//! quotient and friends); configs combine catalog entries with constant
//! vectors instead of embedding an expression language.

use crate::chart::field::{MetricField, ScalarField, VectorField};
use crate::chart::linalg::Mat;
use crate::chart::tower::DualTower;
use crate::scenario::config::ConfigError;

type T = DualTower<f64>;

/// Planar rotation field `(-x^2, x^1)`.
pub fn rotation_field() -> VectorField<f64> {
    VectorField::new(2, 2, |x: &[T]| vec![-x[1].clone(), x[0].clone()])
}

/// The identity linear field `xi(x) = x` in any dimension.
pub fn identity_linear_field(n: usize) -> VectorField<f64> {
    VectorField::new(n, n, |x: &[T]| x.to_vec())
}

/// Vector field by catalog name.
pub fn vector_field(name: &str, n: usize, components: Option<&[f64]>) -> Result<VectorField<f64>, ConfigError> {
    match name {
        "rotation" => {
            if n != 2 {
                return Err(ConfigError::Invalid(
                    "rotation field lives on a 2-dimensional target".into(),
                ));
            }
            Ok(rotation_field())
        }
        "identity-linear" => Ok(identity_linear_field(n)),
        "constant" => {
            let c = components.ok_or_else(|| {
                ConfigError::Invalid("constant field needs explicit components".into())
            })?;
            if c.len() != n {
                return Err(ConfigError::Invalid(format!(
                    "constant field components must have length {n}"
                )));
            }
            Ok(VectorField::constant(n, c.to_vec()))
        }
        other => Err(ConfigError::Invalid(format!(
            "unknown vector field {other:?} (expected rotation | identity-linear | constant)"
        ))),
    }
}

/// 1-form on the base domain by catalog name.
pub fn one_form(name: &str, m: usize, v: &[f64]) -> Result<VectorField<f64>, ConfigError> {
    if v.len() != m {
        return Err(ConfigError::Invalid(format!(
            "1-form components must have length {m}"
        )));
    }
    match name {
        // constant components; also the exterior derivative of <v, a>
        "constant" | "exact-linear" => Ok(VectorField::constant(m, v.to_vec())),
        // a^2 da^1 scaled by v[0]: not closed, so no potential exists
        "nonclosed" => {
            if m < 2 {
                return Err(ConfigError::Invalid(
                    "nonclosed form needs at least 2 domain dimensions".into(),
                ));
            }
            let scale = v[0];
            Ok(VectorField::new(m, m, move |a: &[T]| {
                let mut out = vec![T::constant(0.0); a.len()];
                out[0] = &a[1] * scale;
                out
            }))
        }
        other => Err(ConfigError::Invalid(format!(
            "unknown 1-form {other:?} (expected constant | exact-linear | nonclosed)"
        ))),
    }
}

/// Base metric by catalog name.
pub fn base_metric(
    name: &str,
    n: usize,
    conformal_slope: Option<&[f64]>,
) -> Result<MetricField<f64>, ConfigError> {
    match name {
        "euclidean" => Ok(MetricField::euclidean(n)),
        "sphere" => {
            if n != 2 {
                return Err(ConfigError::Invalid(
                    "sphere metric needs dimension 2".into(),
                ));
            }
            Ok(sphere_metric())
        }
        "conformal" => {
            let slope = conformal_slope
                .ok_or_else(|| {
                    ConfigError::Invalid("conformal metric needs params.conformal_slope".into())
                })?
                .to_vec();
            if slope.len() != n {
                return Err(ConfigError::Invalid(format!(
                    "conformal_slope must have length {n}"
                )));
            }
            Ok(MetricField::conformal_euclidean(ScalarField::linear(slope)))
        }
        other => Err(ConfigError::Invalid(format!(
            "unknown metric {other:?} (expected euclidean | sphere | conformal)"
        ))),
    }
}

/// Round-sphere chart metric `diag(1, sin^2 x^1)`.
pub fn sphere_metric() -> MetricField<f64> {
    MetricField::new(2, |x: &[T]| {
        let s = x[0].sin();
        let s2 = &s * &s;
        Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => T::constant(1.0),
            (1, 1) => s2.clone(),
            _ => T::constant(0.0),
        })
    })
}

/// Conformal exponent on the line bundle: `sigma = -ln |y|`, the
/// inverse-square speed metric.
pub fn sigma_log_speed() -> ScalarField<f64> {
    ScalarField::new(2, |xy: &[T]| -xy[1].abs().ln())
}

/// Smooth fiber-only exponent `sigma = ln(1 + |y|^2) / 2`; no singular locus.
pub fn sigma_y_only(n: usize) -> ScalarField<f64> {
    ScalarField::new(2 * n, move |t: &[T]| {
        let mut acc = T::constant(1.0);
        for k in 0..n {
            acc = acc + &t[n + k] * &t[n + k];
        }
        acc.ln() * 0.5
    })
}
