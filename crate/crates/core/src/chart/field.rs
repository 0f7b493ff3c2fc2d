//! Smooth fields over chart coordinates.
//!
//! Fields are plain closures over [`DualTower`] scalars; composition is
//! ordinary function composition in the host language. Evaluating a field at
//! seeded coordinates yields exact gradients and Hessians in one pass.

use crate::chart::linalg::{cholesky, invert_with_det, Mat, Tensor3};
use crate::chart::tower::DualTower;
use crate::error::{Error, Result};
use crate::scalar::{coords_f64, Real};
use std::sync::Arc;

/// Lifts coordinates as constants (no seeding); cheap plain evaluation.
pub fn lift_constants<F: Real>(x: &[F]) -> Vec<DualTower<F>> {
    x.iter().map(|&v| DualTower::constant(v)).collect()
}

/// Lifts coordinates as seeded variables of a tower of dimension `x.len()`.
pub fn lift_variables<F: Real>(x: &[F]) -> Vec<DualTower<F>> {
    let d = x.len();
    x.iter()
        .enumerate()
        .map(|(i, &v)| DualTower::seeded(v, i, d))
        .collect()
}

/// Scalar-valued smooth function of chart coordinates with exact first and
/// second derivatives.
#[derive(Clone)]
pub struct ScalarField<F: Real> {
    dim: usize,
    f: Arc<dyn Fn(&[DualTower<F>]) -> DualTower<F> + Send + Sync>,
}

impl<F: Real> ScalarField<F> {
    pub fn new(
        dim: usize,
        f: impl Fn(&[DualTower<F>]) -> DualTower<F> + Send + Sync + 'static,
    ) -> Self {
        ScalarField { dim, f: Arc::new(f) }
    }

    /// The constant-zero field.
    pub fn zero(dim: usize) -> Self {
        ScalarField::new(dim, |_| DualTower::constant(F::zero()))
    }

    pub fn constant(dim: usize, c: F) -> Self {
        ScalarField::new(dim, move |_| DualTower::constant(c))
    }

    /// The linear form `a -> <v, a>`.
    pub fn linear(v: Vec<F>) -> Self {
        let dim = v.len();
        ScalarField::new(dim, move |a| {
            let mut acc = DualTower::constant(F::zero());
            for (i, c) in v.iter().enumerate() {
                acc = acc + &a[i] * *c;
            }
            acc
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_dim(&self, x: &[F]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Evaluates the closure on caller-provided towers (already lifted).
    pub fn eval_towers(&self, towers: &[DualTower<F>]) -> DualTower<F> {
        (self.f)(towers)
    }

    pub fn eval(&self, x: &[F]) -> Result<F> {
        self.check_dim(x)?;
        let t = (self.f)(&lift_constants(x));
        if !t.value().is_finite() {
            return Err(Error::NonFinite {
                context: "scalar field".into(),
                coords: coords_f64(x),
            });
        }
        Ok(t.value())
    }

    /// Full second-order jet at `x`.
    pub fn jet(&self, x: &[F]) -> Result<DualTower<F>> {
        self.check_dim(x)?;
        let t = (self.f)(&lift_variables(x));
        if !t.all_finite() {
            return Err(Error::NonFinite {
                context: "scalar field".into(),
                coords: coords_f64(x),
            });
        }
        Ok(t)
    }

    /// Exact forward-mode gradient.
    pub fn grad(&self, x: &[F]) -> Result<Vec<F>> {
        Ok(self.jet(x)?.gradient(x.len()))
    }

    /// Symmetric matrix of second partials.
    pub fn hessian(&self, x: &[F]) -> Result<Mat<F>> {
        let t = self.jet(x)?;
        Ok(Mat::from_fn(x.len(), x.len(), |i, j| t.second_at(i, j)))
    }
}

/// Vector-valued smooth function (vector fields, 1-forms as component lists).
#[derive(Clone)]
pub struct VectorField<F: Real> {
    input_dim: usize,
    output_dim: usize,
    f: Arc<dyn Fn(&[DualTower<F>]) -> Vec<DualTower<F>> + Send + Sync>,
}

impl<F: Real> VectorField<F> {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        f: impl Fn(&[DualTower<F>]) -> Vec<DualTower<F>> + Send + Sync + 'static,
    ) -> Self {
        VectorField {
            input_dim,
            output_dim,
            f: Arc::new(f),
        }
    }

    pub fn constant(input_dim: usize, components: Vec<F>) -> Self {
        let out = components.len();
        VectorField::new(input_dim, out, move |_| {
            components.iter().map(|&c| DualTower::constant(c)).collect()
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn eval_towers(&self, towers: &[DualTower<F>]) -> Vec<DualTower<F>> {
        (self.f)(towers)
    }

    pub fn eval(&self, x: &[F]) -> Result<Vec<F>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let out = (self.f)(&lift_constants(x));
        if out.iter().any(|t| !t.value().is_finite()) {
            return Err(Error::NonFinite {
                context: "vector field".into(),
                coords: coords_f64(x),
            });
        }
        Ok(out.iter().map(|t| t.value()).collect())
    }
}

/// Position-dependent symmetric positive-definite 2-tensor.
#[derive(Clone)]
pub struct MetricField<F: Real> {
    dim: usize,
    f: Arc<dyn Fn(&[DualTower<F>]) -> Mat<DualTower<F>> + Send + Sync>,
}

impl<F: Real> MetricField<F> {
    pub fn new(
        dim: usize,
        f: impl Fn(&[DualTower<F>]) -> Mat<DualTower<F>> + Send + Sync + 'static,
    ) -> Self {
        MetricField { dim, f: Arc::new(f) }
    }

    /// The flat Euclidean metric.
    pub fn euclidean(dim: usize) -> Self {
        MetricField::new(dim, move |_| Mat::identity(dim))
    }

    /// Constant diagonal metric.
    pub fn diagonal(entries: Vec<F>) -> Self {
        let dim = entries.len();
        MetricField::new(dim, move |_| {
            Mat::from_fn(dim, dim, |i, j| {
                if i == j {
                    DualTower::constant(entries[i])
                } else {
                    DualTower::constant(F::zero())
                }
            })
        })
    }

    /// Conformally flat metric `e^{2u} I` for a scalar field `u`.
    pub fn conformal_euclidean(u: ScalarField<F>) -> Self {
        let dim = u.dim();
        MetricField::new(dim, move |x| {
            let factor = (u.eval_towers(x) * F::of(2.0)).exp();
            Mat::from_fn(dim, dim, |i, j| {
                if i == j {
                    factor.clone()
                } else {
                    DualTower::constant(F::zero())
                }
            })
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_dim(&self, x: &[F]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn eval_towers(&self, towers: &[DualTower<F>]) -> Mat<DualTower<F>> {
        (self.f)(towers)
    }

    fn validate_values(&self, values: &Mat<F>, x: &[F]) -> Result<()> {
        if !values.all_finite() {
            return Err(Error::NonFinite {
                context: "metric field".into(),
                coords: coords_f64(x),
            });
        }
        let tol = F::epsilon() * F::of(64.0) * (F::one() + values.max_abs());
        if !values.is_symmetric(tol) {
            return Err(Error::AsymmetricMetric {
                coords: coords_f64(x),
            });
        }
        if cholesky(values).is_none() {
            return Err(Error::DegenerateMetric {
                coords: coords_f64(x),
            });
        }
        Ok(())
    }

    /// Evaluates the metric matrix; checks symmetry and positive-definiteness.
    pub fn eval(&self, x: &[F]) -> Result<Mat<F>> {
        self.check_dim(x)?;
        let m = (self.f)(&lift_constants(x));
        let values = m.map(|t| t.value());
        self.validate_values(&values, x)?;
        Ok(values)
    }

    /// Metric entries as full second-order jets at `x` (seeded variables).
    pub fn jet(&self, x: &[F]) -> Result<Mat<DualTower<F>>> {
        self.check_dim(x)?;
        let towers = lift_variables(x);
        self.jet_in(&towers, x)
    }

    /// Metric jets on caller-seeded towers; used when the metric is part of a
    /// larger coordinate block (e.g. `(x, y)` towers of a tangent bundle).
    pub(crate) fn jet_in(
        &self,
        towers: &[DualTower<F>],
        x_for_err: &[F],
    ) -> Result<Mat<DualTower<F>>> {
        let m = (self.f)(towers);
        if m.rows() != self.dim || m.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: m.rows(),
            });
        }
        for i in 0..self.dim {
            for j in 0..self.dim {
                if !m[(i, j)].all_finite() {
                    return Err(Error::NonFinite {
                        context: "metric field".into(),
                        coords: coords_f64(x_for_err),
                    });
                }
            }
        }
        let values = m.map(|t| t.value());
        self.validate_values(&values, x_for_err)?;
        Ok(m)
    }

    /// Inverse matrix and determinant at `x`; the metric must be positive
    /// definite there.
    pub fn inverse_det(&self, x: &[F]) -> Result<(Mat<F>, F)> {
        let values = self.eval(x)?;
        invert_with_det::<F, F>(&values).ok_or_else(|| Error::DegenerateMetric {
            coords: coords_f64(x),
        })
    }

    /// Values and first partial derivatives `d g_ij / d x^k` at `x`.
    pub fn partials(&self, x: &[F]) -> Result<(Mat<F>, Tensor3<F>)> {
        let jets = self.jet(x)?;
        let n = self.dim;
        let values = jets.map(|t| t.value());
        let deriv = Tensor3::from_fn(n, |i, j, k| jets[(i, j)].first_at(k));
        Ok((values, deriv))
    }
}
