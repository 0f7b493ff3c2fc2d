//! Classical Riemannian machinery on a [`MetricField`]: Christoffel symbols,
//! curvature, covariant derivatives, geodesics, and the totally-geodesic
//! level-set test.
//!
//! Curvature convention: `r^i_{jkl} = d_l G^i_{jk} - d_k G^i_{jl}
//! + G^p_{jk} G^i_{pl} - G^p_{jl} G^i_{pk}` with Ricci `r_ij = r^k_{ijk}`,
//! oriented so the unit 2-sphere has `ricci = gamma` and scalar curvature 2.

use crate::chart::field::{lift_variables, MetricField, ScalarField};
use crate::chart::linalg::{invert_with_det, Mat, Tensor3, Tensor4};
use crate::chart::tower::DualTower;
use crate::error::{Error, Result};
use crate::flows::{rk4, Trajectory};
use crate::scalar::{coords_f64, Real};

/// Christoffel symbols of the metric's Levi-Civita connection, as towers over
/// the caller-seeded coordinate block. Only the value and gradient parts of
/// the result are meaningful.
pub(crate) fn christoffel_towers<F: Real>(
    gamma: &MetricField<F>,
    coord_towers: &[DualTower<F>],
    x_for_err: &[F],
) -> Result<Tensor3<DualTower<F>>> {
    let n = gamma.dim();
    let g = gamma.jet_in(&coord_towers[..n], x_for_err)?;
    let (g_inv, _) = invert_with_det::<F, _>(&g).ok_or_else(|| Error::DegenerateMetric {
        coords: coords_f64(x_for_err),
    })?;
    // d_k g_ij as first-order jets of the metric entries
    let dg = |i: usize, j: usize, k: usize| g[(i, j)].derivative_jet(k);
    let half = F::of(0.5);
    let mut out = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut acc = DualTower::constant(F::zero());
                for l in 0..n {
                    let sum = dg(l, k, j) + dg(j, l, k) - dg(j, k, l);
                    acc = acc + &g_inv[(i, l)] * sum;
                }
                let v = acc * half;
                out.set(i, j, k, v.clone());
                out.set(i, k, j, v); // lower-index symmetry, bit-exact
            }
        }
    }
    Ok(out)
}

/// Christoffel symbols `G^i_{jk}` at `x`.
pub fn christoffel<F: Real>(gamma: &MetricField<F>, x: &[F]) -> Result<Tensor3<F>> {
    let towers = lift_variables(x);
    let t = christoffel_towers(gamma, &towers, x)?;
    let n = gamma.dim();
    Ok(Tensor3::from_fn(n, |i, j, k| t.get(i, j, k).value()))
}

/// Point sample of the curvature of a metric.
#[derive(Clone, Debug)]
pub struct CurvatureSample<F> {
    /// `r^i_{jkl}`
    pub riemann: Tensor4<F>,
    /// `r_ij = r^k_{ijk}`
    pub ricci: Mat<F>,
    /// `r = gamma^{ij} r_ij`
    pub scalar: F,
}

pub(crate) fn curvature_from_towers<F: Real>(
    chris: &Tensor3<DualTower<F>>,
    gamma_inv: &Mat<F>,
) -> CurvatureSample<F> {
    let n = chris.n();
    let mut riemann = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = chris.get(i, j, k).first_at(l) - chris.get(i, j, l).first_at(k);
                    for p in 0..n {
                        v = v + chris.get(p, j, k).value() * chris.get(i, p, l).value()
                            - chris.get(p, j, l).value() * chris.get(i, p, k).value();
                    }
                    riemann.set(i, j, k, l, v);
                }
            }
        }
    }
    let ricci = Mat::from_fn(n, n, |i, j| {
        let mut s = F::zero();
        for k in 0..n {
            s = s + *riemann.get(k, i, j, k);
        }
        s
    });
    let mut scalar = F::zero();
    for i in 0..n {
        for j in 0..n {
            scalar = scalar + gamma_inv[(i, j)] * ricci[(i, j)];
        }
    }
    CurvatureSample {
        riemann,
        ricci,
        scalar,
    }
}

/// Riemann, Ricci and scalar curvature of `gamma` at `x`.
pub fn curvature<F: Real>(gamma: &MetricField<F>, x: &[F]) -> Result<CurvatureSample<F>> {
    let towers = lift_variables(x);
    let chris = christoffel_towers(gamma, &towers, x)?;
    let (gamma_inv, _) = gamma.inverse_det(x)?;
    Ok(curvature_from_towers(&chris, &gamma_inv))
}

/// Christoffel symbols of a metric as a reusable field.
#[derive(Clone)]
pub struct ChristoffelField<F: Real> {
    gamma: MetricField<F>,
}

impl<F: Real> ChristoffelField<F> {
    pub fn new(gamma: MetricField<F>) -> Self {
        ChristoffelField { gamma }
    }

    pub fn eval(&self, x: &[F]) -> Result<Tensor3<F>> {
        christoffel(&self.gamma, x)
    }
}

/// Curvature of a metric as a reusable field.
#[derive(Clone)]
pub struct CurvatureField<F: Real> {
    gamma: MetricField<F>,
}

impl<F: Real> CurvatureField<F> {
    pub fn new(gamma: MetricField<F>) -> Self {
        CurvatureField { gamma }
    }

    pub fn sample(&self, x: &[F]) -> Result<CurvatureSample<F>> {
        curvature(&self.gamma, x)
    }

    pub fn riemann(&self, x: &[F]) -> Result<Tensor4<F>> {
        Ok(self.sample(x)?.riemann)
    }

    pub fn ricci(&self, x: &[F]) -> Result<Mat<F>> {
        Ok(self.sample(x)?.ricci)
    }

    pub fn scalar(&self, x: &[F]) -> Result<F> {
        Ok(self.sample(x)?.scalar)
    }
}

/// Covariant derivative of a 2-tensor: `w_{ij|k} = D_k w_ij - G^p_{ik} w_pj -
/// G^p_{jk} w_ip`, where the directional derivative `D_k w_ij` is supplied by
/// the caller (plain partials for position-only tensors, the horizontal
/// derivative for direction-dependent ones).
pub fn covariant_derivative_2form<F: Real>(
    gamma: &MetricField<F>,
    x: &[F],
    omega: &Mat<F>,
    omega_deriv: &Tensor3<F>,
) -> Result<Tensor3<F>> {
    let n = gamma.dim();
    let chris = christoffel(gamma, x)?;
    let mut out = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut v = *omega_deriv.get(i, j, k);
                for p in 0..n {
                    v = v - *chris.get(p, i, k) * omega[(p, j)]
                        - *chris.get(p, j, k) * omega[(i, p)];
                }
                out.set(i, j, k, v);
            }
        }
    }
    Ok(out)
}

/// Fixed-step RK4 integration of the geodesic equation
/// `x''^i + G^i_{jk} x'^j x'^k = 0`.
pub fn riemann_geodesic<F: Real>(
    gamma: &MetricField<F>,
    x0: &[F],
    v0: &[F],
    t_span: (F, F),
    steps: usize,
) -> Result<Trajectory<F>> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "geodesic integration needs at least 2 steps, got {steps}"
        )));
    }
    let n = gamma.dim();
    if x0.len() != n || v0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len().max(v0.len()),
        });
    }
    let mut state = Vec::with_capacity(2 * n);
    state.extend_from_slice(x0);
    state.extend_from_slice(v0);
    let deriv = |t: F, y: &[F]| -> Result<Vec<F>> {
        let (x, v) = y.split_at(n);
        let chris = christoffel(gamma, x).map_err(|e| match e {
            Error::DegenerateMetric { .. } => Error::TrajectoryDegenerate {
                t: num_traits::ToPrimitive::to_f64(&t).unwrap_or(f64::NAN),
            },
            other => other,
        })?;
        let mut out = vec![F::zero(); 2 * n];
        out[..n].copy_from_slice(v);
        for i in 0..n {
            let mut acc = F::zero();
            for j in 0..n {
                for k in 0..n {
                    acc = acc + *chris.get(i, j, k) * v[j] * v[k];
                }
            }
            out[n + i] = -acc;
        }
        Ok(out)
    };
    let (times, states) = rk4(t_span.0, t_span.1, steps, state, deriv)?;
    let positions: Vec<Vec<F>> = states.iter().map(|s| s[..n].to_vec()).collect();
    let velocities: Vec<Vec<F>> = states.iter().map(|s| s[n..].to_vec()).collect();
    Trajectory::new(times, positions, velocities)
}

/// Largest second-fundamental-form component of the level set of `f` through
/// `x`, measured against an orthonormal tangent basis. Zero exactly when the
/// level hypersurface is totally geodesic at `x`.
///
/// Normalization: `II(t, s) = Hess f(t, s) / |grad f|_gamma` with the
/// covariant Hessian of the Levi-Civita connection.
pub fn second_fundamental_form_residual<F: Real>(
    f: &ScalarField<F>,
    gamma: &MetricField<F>,
    x: &[F],
) -> Result<F> {
    let n = gamma.dim();
    let jet = f.jet(x)?;
    let grad = jet.gradient(n);
    let g = gamma.eval(x)?;
    let (g_inv, _) = gamma.inverse_det(x)?;
    let inner = |a: &[F], b: &[F]| {
        let mut s = F::zero();
        for i in 0..n {
            for j in 0..n {
                s = s + g[(i, j)] * a[i] * b[j];
            }
        }
        s
    };
    // raise the gradient to get the metric normal direction
    let mut normal = vec![F::zero(); n];
    for i in 0..n {
        for j in 0..n {
            normal[i] = normal[i] + g_inv[(i, j)] * grad[j];
        }
    }
    let grad_norm = inner(&normal, &normal).sqrt();
    if !(grad_norm > F::of(1e-10)) {
        return Err(Error::VanishingGradient {
            coords: coords_f64(x),
        });
    }
    for v in normal.iter_mut() {
        *v = *v / grad_norm;
    }

    // Gram-Schmidt the coordinate basis against the normal to get an
    // orthonormal tangent basis of the level set.
    let mut basis: Vec<Vec<F>> = Vec::with_capacity(n - 1);
    for s in 0..n {
        if basis.len() == n - 1 {
            break;
        }
        let mut cand = vec![F::zero(); n];
        cand[s] = F::one();
        let proj = inner(&cand, &normal);
        for i in 0..n {
            cand[i] = cand[i] - proj * normal[i];
        }
        for b in &basis {
            let p = inner(&cand, b);
            for i in 0..n {
                cand[i] = cand[i] - p * b[i];
            }
        }
        let norm = inner(&cand, &cand).sqrt();
        if norm > F::of(1e-8) {
            for v in cand.iter_mut() {
                *v = *v / norm;
            }
            basis.push(cand);
        }
    }

    let chris = christoffel(gamma, x)?;
    let cov_hess = Mat::from_fn(n, n, |i, j| {
        let mut v = jet.second_at(i, j);
        for p in 0..n {
            v = v - *chris.get(p, i, j) * grad[p];
        }
        v
    });

    let mut worst = F::zero();
    for a in &basis {
        for b in &basis {
            let mut v = F::zero();
            for i in 0..n {
                for j in 0..n {
                    v = v + cov_hess[(i, j)] * a[i] * b[j];
                }
            }
            worst = worst.max((v / grad_norm).abs());
        }
    }
    Ok(worst)
}
