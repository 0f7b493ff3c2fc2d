//! Generalized Lagrange metrics `g_ij(x, y) = e^{2 sigma(x, y)} gamma_ij(x)`
//! with the nonlinear connection `N^i_j = G^i_{jk}(x) y^k`, the horizontal
//! derivative `d/dx^i - N^j_i d/dy^j`, electromagnetic tensors, the
//! sigma-derived curvature corrections, and Maxwell/Einstein residual
//! evaluators.
//!
//! Covariant-derivative choices: the horizontal `|k` uses the Levi-Civita
//! connection of `gamma` with the horizontal derivative; the vertical `|_k`
//! uses plain `d/dy` with zero vertical coefficients. Maxwell equations are
//! exposed as residual evaluators, never assertions.

use crate::chart::field::{lift_variables, MetricField, ScalarField, VectorField};
use crate::chart::linalg::{invert_with_det, Mat, Tensor3, Tensor4};
use crate::chart::tower::DualTower;
use crate::error::{Error, Result};
use crate::riemannian::{christoffel_towers, curvature_from_towers};
use crate::scalar::{coords_f64, Real};
use num_traits::Zero;
use std::sync::Arc;

/// Conformal direction-dependent metric with an explicit singular locus.
#[derive(Clone)]
pub struct GLMetric<F: Real> {
    gamma: MetricField<F>,
    sigma: ScalarField<F>,
    excluded: Arc<dyn Fn(&[F], &[F]) -> bool + Send + Sync>,
}

/// Electromagnetic tensors of a generalized Lagrange metric; both are skew by
/// construction. `horizontal` is built from horizontal derivatives of sigma,
/// `vertical` from plain `d/dy` derivatives.
#[derive(Clone, Debug)]
pub struct EmTensors<F> {
    pub horizontal: Mat<F>,
    pub vertical: Mat<F>,
}

/// Scalars and 2-tensors derived from sigma and the curvature of gamma.
#[derive(Clone, Debug)]
pub struct SigmaDerived<F> {
    /// Squared gamma-norm of the horizontal gradient of sigma.
    pub sigma_h: F,
    /// Squared gamma-norm of the vertical gradient of sigma.
    pub sigma_v: F,
    /// Trace of `sigma_ij`.
    pub sigma_bar: F,
    /// Trace of `sigma_dot_ab`.
    pub sigma_dot: F,
    pub sigma_ij: Mat<F>,
    pub sigma_dot_ab: Mat<F>,
    /// Curvature correction entering the horizontal field equations; computed
    /// verbatim without symmetrization.
    pub t_ij: Mat<F>,
}

impl<F: Real> SigmaDerived<F> {
    /// Largest antisymmetric part of `t_ij`, reported because the tensor is
    /// not symmetrized.
    pub fn t_antisymmetric_magnitude(&self) -> F {
        let n = self.t_ij.rows();
        let mut worst = F::zero();
        for i in 0..n {
            for j in 0..n {
                worst = worst.max(
                    ((self.t_ij[(i, j)] - self.t_ij[(j, i)]) * F::of(0.5)).abs(),
                );
            }
        }
        worst
    }
}

/// Cyclic-sum defects of the three Maxwell equations (left side minus right
/// side); reported, not asserted zero.
#[derive(Clone, Debug)]
pub struct MaxwellResiduals<F> {
    pub horizontal: Tensor3<F>,
    pub mixed: Tensor3<F>,
    pub vertical: Tensor3<F>,
}

impl<F: Real> MaxwellResiduals<F> {
    pub fn max_abs(&self) -> F {
        self.horizontal
            .max_abs()
            .max(self.mixed.max_abs())
            .max(self.vertical.max_abs())
    }
}

/// Everything derived at one phase point `(x, y)`; shared by the public
/// evaluators.
struct PhasePoint<F: Real> {
    n: usize,
    y: Vec<F>,
    gamma_val: Mat<F>,
    gamma_inv: Mat<F>,
    chris: Tensor3<F>,
    conn: Mat<F>,
    riemann: Tensor4<F>,
    ricci: Mat<F>,
    scalar_curv: F,
    /// Horizontal gradient of sigma as first-order jets over `(x, y)`.
    u: Vec<DualTower<F>>,
    /// Vertical gradient of sigma as first-order jets over `(x, y)`.
    w: Vec<DualTower<F>>,
    /// `g_ip y^p` as towers.
    gy: Vec<DualTower<F>>,
    /// Electromagnetic tensors as first-order jets.
    big_f: Mat<DualTower<F>>,
    small_f: Mat<DualTower<F>>,
}

impl<F: Real> GLMetric<F> {
    pub fn new(
        gamma: MetricField<F>,
        sigma: ScalarField<F>,
        excluded: impl Fn(&[F], &[F]) -> bool + Send + Sync + 'static,
    ) -> Self {
        assert_eq!(
            sigma.dim(),
            2 * gamma.dim(),
            "sigma must be a field on tangent-bundle coordinates"
        );
        GLMetric {
            gamma,
            sigma,
            excluded: Arc::new(excluded),
        }
    }

    /// Riemannian special case: `sigma = 0`, no singular locus.
    pub fn riemannian(gamma: MetricField<F>) -> Self {
        let sigma = ScalarField::zero(2 * gamma.dim());
        GLMetric::new(gamma, sigma, |_, _| false)
    }

    /// Metric induced by a direction field `xi` over a Riemannian `psi`:
    /// `h_ij(x, y) = (|xi|^2_psi / <xi, y>_psi^2) psi_ij(x)`, singular where
    /// the pairing `<xi, y>_psi` vanishes.
    pub fn induced_by_direction_field(xi: VectorField<F>, psi: MetricField<F>) -> Self {
        let n = psi.dim();
        let sigma = {
            let xi = xi.clone();
            let psi = psi.clone();
            ScalarField::new(2 * n, move |t: &[DualTower<F>]| {
                let (xt, yt) = t.split_at(n);
                let xi_t = xi.eval_towers(xt);
                let psi_t = psi.eval_towers(xt);
                let mut norm2 = DualTower::constant(F::zero());
                let mut pair = DualTower::constant(F::zero());
                for i in 0..n {
                    for j in 0..n {
                        norm2 = norm2 + &psi_t[(i, j)] * (&xi_t[i] * &xi_t[j]);
                        pair = pair + &psi_t[(i, j)] * (&xi_t[i] * &yt[j]);
                    }
                }
                norm2.ln() * F::of(0.5) - pair.abs().ln()
            })
        };
        let excluded = {
            let xi = xi.clone();
            let psi = psi.clone();
            move |x: &[F], y: &[F]| -> bool {
                let (Ok(xi_v), Ok(psi_v)) = (xi.eval(x), psi.eval(x)) else {
                    return true;
                };
                let mut norm_xi = F::zero();
                let mut norm_y = F::zero();
                let mut pair = F::zero();
                for i in 0..n {
                    for j in 0..n {
                        norm_xi = norm_xi + psi_v[(i, j)] * xi_v[i] * xi_v[j];
                        norm_y = norm_y + psi_v[(i, j)] * y[i] * y[j];
                        pair = pair + psi_v[(i, j)] * xi_v[i] * y[j];
                    }
                }
                let scale = (norm_xi * norm_y).sqrt();
                !(pair.abs() > F::of(1e-12) * scale) || !(scale > F::zero())
            }
        };
        GLMetric::new(psi, sigma, excluded)
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    pub fn gamma(&self) -> &MetricField<F> {
        &self.gamma
    }

    pub fn sigma(&self) -> &ScalarField<F> {
        &self.sigma
    }

    fn xy(&self, x: &[F], y: &[F]) -> Vec<F> {
        let mut out = Vec::with_capacity(x.len() + y.len());
        out.extend_from_slice(x);
        out.extend_from_slice(y);
        out
    }

    /// Errors out on the singular locus.
    pub fn check_point(&self, x: &[F], y: &[F]) -> Result<()> {
        let n = self.dim();
        if x.len() != n || y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len().max(y.len()),
            });
        }
        if (self.excluded)(x, y) {
            return Err(Error::SingularLocus {
                coords: coords_f64(&self.xy(x, y)),
            });
        }
        Ok(())
    }

    /// The metric matrix `e^{2 sigma} gamma` at `(x, y)`.
    pub fn eval(&self, x: &[F], y: &[F]) -> Result<Mat<F>> {
        self.check_point(x, y)?;
        let xy = self.xy(x, y);
        let s = self.sigma.eval(&xy)?;
        let factor = (F::of(2.0) * s).exp();
        if !factor.is_finite() {
            return Err(Error::NonFinite {
                context: "conformal factor".into(),
                coords: coords_f64(&xy),
            });
        }
        let g = self.gamma.eval(x)?;
        Ok(g.map(|v| *v * factor))
    }

    /// Direction energy `L(x, v) = g_ij(x, v) v^i v^j` evaluated as a full
    /// second-order jet over the `(x, v)` block.
    pub fn lagrangian_jet(&self, x: &[F], v: &[F]) -> Result<DualTower<F>> {
        self.check_point(x, v)?;
        let n = self.dim();
        let xy = self.xy(x, v);
        let towers = lift_variables(&xy);
        let sigma_t = self.sigma.eval_towers(&towers);
        if !sigma_t.all_finite() {
            return Err(Error::NonFinite {
                context: "sigma".into(),
                coords: coords_f64(&xy),
            });
        }
        let gamma_t = self.gamma.jet_in(&towers[..n], x)?;
        let factor = (sigma_t * F::of(2.0)).exp();
        let mut l = DualTower::constant(F::zero());
        for i in 0..n {
            for j in 0..n {
                l = l + (&factor * &gamma_t[(i, j)]) * (&towers[n + i] * &towers[n + j]);
            }
        }
        if !l.all_finite() {
            return Err(Error::NonFinite {
                context: "direction energy".into(),
                coords: coords_f64(&xy),
            });
        }
        Ok(l)
    }

    /// Direction energy value.
    pub fn lagrangian(&self, x: &[F], v: &[F]) -> Result<F> {
        self.check_point(x, v)?;
        let g = self.eval(x, v)?;
        let n = self.dim();
        let mut l = F::zero();
        for i in 0..n {
            for j in 0..n {
                l = l + g[(i, j)] * v[i] * v[j];
            }
        }
        Ok(l)
    }

    /// Nonlinear connection `N^i_j(x, y) = G^i_{jk}(x) y^k`; row index is the
    /// upper index.
    pub fn nonlinear_connection(&self, x: &[F], y: &[F]) -> Result<Mat<F>> {
        let n = self.dim();
        let chris = crate::riemannian::christoffel(&self.gamma, x)?;
        Ok(Mat::from_fn(n, n, |i, j| {
            let mut acc = F::zero();
            for k in 0..n {
                acc = acc + *chris.get(i, j, k) * y[k];
            }
            acc
        }))
    }

    /// Horizontal derivative of a field on `(x, y)`:
    /// `d f/dx^i - N^j_i df/dy^j`.
    pub fn delta_x(&self, field: &ScalarField<F>, x: &[F], y: &[F]) -> Result<Vec<F>> {
        self.check_point(x, y)?;
        let n = self.dim();
        let xy = self.xy(x, y);
        let jet = field.jet(&xy)?;
        let conn = self.nonlinear_connection(x, y)?;
        Ok((0..n)
            .map(|i| {
                let mut v = jet.first_at(i);
                for j in 0..n {
                    v = v - conn[(j, i)] * jet.first_at(n + j);
                }
                v
            })
            .collect())
    }

    fn analyze(&self, x: &[F], y: &[F]) -> Result<PhasePoint<F>> {
        self.check_point(x, y)?;
        let n = self.dim();
        let xy = self.xy(x, y);
        let towers = lift_variables(&xy);

        let sigma_t = self.sigma.eval_towers(&towers);
        if !sigma_t.all_finite() {
            return Err(Error::NonFinite {
                context: "sigma".into(),
                coords: coords_f64(&xy),
            });
        }
        let gamma_t = self.gamma.jet_in(&towers[..n], x)?;
        let gamma_val = gamma_t.map(|t| t.value());
        let (gamma_inv, _) =
            invert_with_det::<F, F>(&gamma_val).ok_or_else(|| Error::DegenerateMetric {
                coords: coords_f64(x),
            })?;

        let chris_t = christoffel_towers(&self.gamma, &towers, x)?;
        let chris = Tensor3::from_fn(n, |i, j, k| chris_t.get(i, j, k).value());
        let curv = curvature_from_towers(&chris_t, &gamma_inv);

        let conn = Mat::from_fn(n, n, |i, j| {
            let mut acc = F::zero();
            for k in 0..n {
                acc = acc + *chris.get(i, j, k) * y[k];
            }
            acc
        });
        // connection entries as first-order jets over (x, y)
        let conn_t = Mat::from_fn(n, n, |i, j| {
            let mut acc = DualTower::constant(F::zero());
            for k in 0..n {
                acc = acc + chris_t.get(i, j, k) * &towers[n + k];
            }
            acc
        });

        let w: Vec<DualTower<F>> = (0..n).map(|a| sigma_t.derivative_jet(n + a)).collect();
        let u: Vec<DualTower<F>> = (0..n)
            .map(|i| {
                let mut acc = sigma_t.derivative_jet(i);
                for j in 0..n {
                    acc = acc - &conn_t[(j, i)] * &w[j];
                }
                acc
            })
            .collect();

        let factor = (&sigma_t * F::of(2.0)).exp();
        let g_t = gamma_t.map(|t| &factor * t);
        let gy: Vec<DualTower<F>> = (0..n)
            .map(|i| {
                let mut acc = DualTower::constant(F::zero());
                for p in 0..n {
                    acc = acc + &g_t[(i, p)] * &towers[n + p];
                }
                acc
            })
            .collect();

        let skew = |grad: &[DualTower<F>]| -> Mat<DualTower<F>> {
            let mut m: Mat<DualTower<F>> = Mat::filled(n, n, DualTower::zero());
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = &gy[i] * &grad[j] - &gy[j] * &grad[i];
                    m[(j, i)] = -&v;
                    m[(i, j)] = v;
                }
            }
            m
        };
        let big_f = skew(&u);
        let small_f = skew(&w);

        Ok(PhasePoint {
            n,
            y: y.to_vec(),
            gamma_val,
            gamma_inv,
            chris,
            conn,
            riemann: curv.riemann,
            ricci: curv.ricci,
            scalar_curv: curv.scalar,
            u,
            w,
            gy,
            big_f,
            small_f,
        })
    }

    /// Electromagnetic tensors at `(x, y)`.
    pub fn em_tensors(&self, x: &[F], y: &[F]) -> Result<EmTensors<F>> {
        let p = self.analyze(x, y)?;
        Ok(EmTensors {
            horizontal: p.big_f.map(|t| t.value()),
            vertical: p.small_f.map(|t| t.value()),
        })
    }

    /// All sigma-derived scalars and tensors at `(x, y)`.
    pub fn sigma_derived(&self, x: &[F], y: &[F]) -> Result<SigmaDerived<F>> {
        let p = self.analyze(x, y)?;
        Ok(sigma_derived_at(&p))
    }

    /// Residuals of the three Maxwell equations at `(x, y)`.
    pub fn maxwell_residuals(&self, x: &[F], y: &[F]) -> Result<MaxwellResiduals<F>> {
        let p = self.analyze(x, y)?;
        Ok(maxwell_at(&p))
    }

    /// Energy-momentum components forced by the field equations:
    /// `T_H = (r_ij - r/2 gamma_ij + t_ij) / kappa` and
    /// `T_V = (2 - n)(sigma_dot_ab - sigma_dot gamma_ab) / kappa`.
    pub fn einstein_components(
        &self,
        x: &[F],
        y: &[F],
        kappa: F,
    ) -> Result<(Mat<F>, Mat<F>)> {
        if kappa == F::zero() {
            return Err(Error::ZeroGravific);
        }
        let p = self.analyze(x, y)?;
        let sd = sigma_derived_at(&p);
        let n = p.n;
        let half = F::of(0.5);
        let t_h = Mat::from_fn(n, n, |i, j| {
            (p.ricci[(i, j)] - half * p.scalar_curv * p.gamma_val[(i, j)] + sd.t_ij[(i, j)])
                / kappa
        });
        let factor = F::of(2.0 - n as f64);
        let t_v = Mat::from_fn(n, n, |a, b| {
            factor * (sd.sigma_dot_ab[(a, b)] - sd.sigma_dot * p.gamma_val[(a, b)]) / kappa
        });
        Ok((t_h, t_v))
    }
}

fn sigma_derived_at<F: Real>(p: &PhasePoint<F>) -> SigmaDerived<F> {
    let n = p.n;
    let half = F::of(0.5);
    let uv: Vec<F> = p.u.iter().map(|t| t.value()).collect();
    let wv: Vec<F> = p.w.iter().map(|t| t.value()).collect();

    let mut sigma_h = F::zero();
    let mut sigma_v = F::zero();
    for i in 0..n {
        for j in 0..n {
            sigma_h = sigma_h + p.gamma_inv[(i, j)] * uv[i] * uv[j];
            sigma_v = sigma_v + p.gamma_inv[(i, j)] * wv[i] * wv[j];
        }
    }

    // horizontal covariant derivative of the horizontal gradient
    let sigma_ij = Mat::from_fn(n, n, |i, j| {
        let mut du = p.u[i].first_at(j);
        for l in 0..n {
            du = du - p.conn[(l, j)] * p.u[i].first_at(n + l);
        }
        for q in 0..n {
            du = du - *p.chris.get(q, i, j) * uv[q];
        }
        du + uv[i] * uv[j] - half * p.gamma_val[(i, j)] * sigma_h
    });
    // vertical derivative with zero vertical coefficients
    let sigma_dot_ab = Mat::from_fn(n, n, |a, b| {
        p.w[a].first_at(n + b) + wv[a] * wv[b] - half * p.gamma_val[(a, b)] * sigma_v
    });

    let mut sigma_bar = F::zero();
    let mut sigma_dot = F::zero();
    for i in 0..n {
        for j in 0..n {
            sigma_bar = sigma_bar + p.gamma_inv[(i, j)] * sigma_ij[(i, j)];
            sigma_dot = sigma_dot + p.gamma_inv[(i, j)] * sigma_dot_ab[(i, j)];
        }
    }

    // curvature correction, verbatim index placement
    let mut ricci_y = vec![F::zero(); n]; // r_tj y^t
    for j in 0..n {
        for t in 0..n {
            ricci_y[j] = ricci_y[j] + p.ricci[(t, j)] * p.y[t];
        }
    }
    let mut trace_term = F::zero(); // r_st y^s gamma^{tp} w_p
    for s in 0..n {
        for t in 0..n {
            for q in 0..n {
                trace_term = trace_term + p.ricci[(s, t)] * p.y[s] * p.gamma_inv[(t, q)] * wv[q];
            }
        }
    }
    let nf = F::of(n as f64 - 2.0);
    let t_ij = Mat::from_fn(n, n, |i, j| {
        let mut v = nf * (p.gamma_val[(i, j)] * sigma_bar - sigma_ij[(i, j)])
            + p.gamma_val[(i, j)] * trace_term
            + wv[i] * ricci_y[j];
        for s in 0..n {
            for a in 0..n {
                for q in 0..n {
                    for t in 0..n {
                        v = v - p.gamma_val[(i, s)]
                            * p.gamma_inv[(a, q)]
                            * wv[q]
                            * *p.riemann.get(s, t, j, a)
                            * p.y[t];
                    }
                }
            }
        }
        v
    });

    SigmaDerived {
        sigma_h,
        sigma_v,
        sigma_bar,
        sigma_dot,
        sigma_ij,
        sigma_dot_ab,
        t_ij,
    }
}

fn maxwell_at<F: Real>(p: &PhasePoint<F>) -> MaxwellResiduals<F> {
    let n = p.n;
    let fv = p.big_f.map(|t| t.value());
    let sv = p.small_f.map(|t| t.value());
    let wv: Vec<F> = p.w.iter().map(|t| t.value()).collect();
    let gyv: Vec<F> = p.gy.iter().map(|t| t.value()).collect();

    // horizontal covariant derivative of a skew 2-tensor given as jets
    let h_cov = |m: &Mat<DualTower<F>>, values: &Mat<F>, i: usize, j: usize, k: usize| -> F {
        let mut d = m[(i, j)].first_at(k);
        for l in 0..n {
            d = d - p.conn[(l, k)] * m[(i, j)].first_at(n + l);
        }
        for q in 0..n {
            d = d - *p.chris.get(q, i, k) * values[(q, j)]
                - *p.chris.get(q, j, k) * values[(i, q)];
        }
        d
    };
    let v_plain = |m: &Mat<DualTower<F>>, i: usize, j: usize, k: usize| -> F {
        m[(i, j)].first_at(n + k)
    };

    // r^h_{qjk} y^q w_h contracted
    let s_term = |j: usize, k: usize| -> F {
        let mut acc = F::zero();
        for h in 0..n {
            for q in 0..n {
                acc = acc + *p.riemann.get(h, q, j, k) * p.y[q] * wv[h];
            }
        }
        acc
    };

    let mut horizontal = Tensor3::zeros(n);
    let mut mixed = Tensor3::zeros(n);
    let mut vertical = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let lhs_h = h_cov(&p.big_f, &fv, i, j, k)
                    + h_cov(&p.big_f, &fv, j, k, i)
                    + h_cov(&p.big_f, &fv, k, i, j);
                let rhs_h = -(gyv[i] * s_term(j, k)
                    + gyv[j] * s_term(k, i)
                    + gyv[k] * s_term(i, j));
                horizontal.set(i, j, k, lhs_h - rhs_h);

                let lhs_m = v_plain(&p.big_f, i, j, k)
                    + v_plain(&p.big_f, j, k, i)
                    + v_plain(&p.big_f, k, i, j);
                let rhs_m = -(h_cov(&p.small_f, &sv, i, j, k)
                    + h_cov(&p.small_f, &sv, j, k, i)
                    + h_cov(&p.small_f, &sv, k, i, j));
                mixed.set(i, j, k, lhs_m - rhs_m);

                let lhs_v = v_plain(&p.small_f, i, j, k)
                    + v_plain(&p.small_f, j, k, i)
                    + v_plain(&p.small_f, k, i, j);
                vertical.set(i, j, k, lhs_v);
            }
        }
    }
    MaxwellResiduals {
        horizontal,
        mixed,
        vertical,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    fn rotation_field() -> VectorField<f64> {
        VectorField::new(2, 2, |x: &[DualTower<f64>]| vec![-x[1].clone(), x[0].clone()])
    }

    fn pfaff_metric() -> GLMetric<f64> {
        let gamma = MetricField::diagonal(vec![1.0f64]);
        let sigma = ScalarField::new(2, |xy: &[DualTower<f64>]| -xy[1].abs().ln());
        GLMetric::new(gamma, sigma, |_: &[f64], y: &[f64]| y[0].abs() < 1e-12)
    }

    fn sphere() -> MetricField<f64> {
        MetricField::new(2, |x: &[DualTower<f64>]| {
            let s = x[0].sin();
            let s2 = &s * &s;
            Mat::from_fn(2, 2, |i, j| match (i, j) {
                (0, 0) => DualTower::constant(1.0),
                (1, 1) => s2.clone(),
                _ => DualTower::constant(0.0),
            })
        })
    }

    #[test]
    fn riemannian_case_returns_gamma_exactly() {
        let h = GLMetric::riemannian(sphere());
        let x = [FRAC_PI_3, 0.2];
        let g = h.eval(&x, &[0.4, 0.5]).unwrap();
        let gamma = sphere().eval(&x).unwrap();
        assert_eq!(g, gamma);
    }

    #[test]
    fn inverse_square_line_metric() {
        let h = pfaff_metric();
        let g = h.eval(&[0.3], &[2.0]).unwrap();
        assert!((g[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn induced_metric_direct_substitution() {
        // oracle: |xi|^2 = 1, <xi, y> = 1 at x = (1, 0), y = (0, 1)
        let h = GLMetric::induced_by_direction_field(rotation_field(), MetricField::euclidean(2));
        let g = h.eval(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_locus_is_an_error() {
        let h = GLMetric::induced_by_direction_field(rotation_field(), MetricField::euclidean(2));
        // at x = (1, 0), xi = (0, 1); y = e1 is orthogonal to xi
        assert!(matches!(
            h.eval(&[1.0, 0.0], &[1.0, 0.0]),
            Err(Error::SingularLocus { .. })
        ));
        assert!(matches!(
            pfaff_metric().eval(&[0.0], &[0.0]),
            Err(Error::SingularLocus { .. })
        ));
    }

    #[test]
    fn conformality_invariant() {
        let h = GLMetric::induced_by_direction_field(rotation_field(), MetricField::euclidean(2));
        for (x, y) in [
            ([0.8, -0.3], [0.5, 1.1]),
            ([1.4, 0.2], [-0.3, 0.8]),
            ([-0.6, 0.9], [1.2, 0.4]),
            ([0.3, 0.3], [0.9, -0.1]),
        ] {
            let g = h.eval(&x, &y).unwrap();
            let s = h.sigma().eval(&[x[0], x[1], y[0], y[1]]).unwrap();
            let factor = (2.0 * s).exp();
            for i in 0..2 {
                for j in 0..2 {
                    let expect = if i == j { factor } else { 0.0 };
                    assert!((g[(i, j)] - expect).abs() < 1e-12 * factor.max(1.0));
                }
            }
        }
    }

    #[test]
    fn sigma_gradient_norms_are_nonnegative() {
        let h = GLMetric::induced_by_direction_field(rotation_field(), sphere());
        for (x, y) in [
            ([FRAC_PI_3, 0.2], [0.5, 0.7]),
            ([1.2, -0.4], [0.9, 0.3]),
            ([0.9, 1.0], [-0.4, 0.6]),
        ] {
            let sd = h.sigma_derived(&x, &y).unwrap();
            assert!(sd.sigma_h >= 0.0);
            assert!(sd.sigma_v >= 0.0);
        }
    }

    #[test]
    fn delta_x_reduces_to_plain_gradient_for_flat_gamma() {
        let gamma = MetricField::euclidean(2);
        let sigma = ScalarField::new(4, |t: &[DualTower<f64>]| {
            (&t[0] * &t[2] + &t[1] * &t[3]).sin()
        });
        let h = GLMetric::new(gamma, sigma.clone(), |_, _| false);
        let field = ScalarField::new(4, |t: &[DualTower<f64>]| &t[0] * &t[2] + (&t[1] * 3.0));
        let (x, y) = ([0.4, -0.6], [1.2, 0.7]);
        let d = h.delta_x(&field, &x, &y).unwrap();
        let jet = field.jet(&[x[0], x[1], y[0], y[1]]).unwrap();
        assert_eq!(d, vec![jet.first_at(0), jet.first_at(1)]);
    }

    #[test]
    fn delta_x_equals_x_gradient_for_y_independent_field() {
        let h = GLMetric::riemannian(sphere());
        let field = ScalarField::new(4, |t: &[DualTower<f64>]| &t[0] * &t[0] + (&t[1] * 2.0));
        let (x, y) = ([FRAC_PI_3, 0.5], [0.3, -0.2]);
        let d = h.delta_x(&field, &x, &y).unwrap();
        assert!((d[0] - 2.0 * x[0]).abs() < 1e-14);
        assert!((d[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn delta_x_of_fiber_coordinate_is_minus_connection() {
        let h = GLMetric::riemannian(sphere());
        let field = ScalarField::new(4, |t: &[DualTower<f64>]| t[2].clone()); // y^1
        let (x, y) = ([FRAC_PI_3, 0.5], [0.4, 0.9]);
        let d = h.delta_x(&field, &x, &y).unwrap();
        let conn = h.nonlinear_connection(&x, &y).unwrap();
        for k in 0..2 {
            assert!((d[k] + conn[(0, k)]).abs() < 1e-12);
        }
    }

    #[test]
    fn connection_is_positively_homogeneous_in_y() {
        let h = GLMetric::riemannian(sphere());
        let x = [FRAC_PI_3, 0.5];
        let y = [0.4, 0.9];
        let y2 = [0.8, 1.8];
        let a = h.nonlinear_connection(&x, &y).unwrap();
        let b = h.nonlinear_connection(&x, &y2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(2.0 * a[(i, j)], b[(i, j)]);
            }
        }
    }

    #[test]
    fn em_tensors_vanish_for_zero_sigma() {
        let h = GLMetric::riemannian(sphere());
        let em = h.em_tensors(&[FRAC_PI_3, 0.2], &[0.5, 0.7]).unwrap();
        assert_eq!(em.horizontal.max_abs(), 0.0);
        assert_eq!(em.vertical.max_abs(), 0.0);
    }

    #[test]
    fn em_tensors_trivial_in_dimension_one() {
        let h = pfaff_metric();
        let em = h.em_tensors(&[0.1], &[2.0]).unwrap();
        assert_eq!(em.horizontal.max_abs(), 0.0);
        assert_eq!(em.vertical.max_abs(), 0.0);
    }

    #[test]
    fn em_tensors_antisymmetric_and_match_finite_differences() {
        let h = GLMetric::induced_by_direction_field(rotation_field(), MetricField::euclidean(2));
        let (x, y) = ([1.0, 0.0], [0.2, 1.0]);
        let em = h.em_tensors(&x, &y).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(em.horizontal[(i, j)], -em.horizontal[(j, i)]);
                assert_eq!(em.vertical[(i, j)], -em.vertical[(j, i)]);
            }
        }
        // finite-difference oracle on sigma for the vertical tensor:
        // f_ij = g_ip dsigma/dy^j y^p - g_jp dsigma/dy^i y^p
        let s = |x1: f64, x2: f64, y1: f64, y2: f64| {
            h.sigma().eval(&[x1, x2, y1, y2]).unwrap()
        };
        let hstep = 1e-5;
        let ds_dy1 = (s(x[0], x[1], y[0] + hstep, y[1]) - s(x[0], x[1], y[0] - hstep, y[1]))
            / (2.0 * hstep);
        let ds_dy2 = (s(x[0], x[1], y[0], y[1] + hstep) - s(x[0], x[1], y[0], y[1] - hstep))
            / (2.0 * hstep);
        let g = h.eval(&x, &y).unwrap();
        let gy: Vec<f64> = (0..2)
            .map(|i| (0..2).map(|p| g[(i, p)] * y[p]).sum())
            .collect();
        let f01 = gy[0] * ds_dy2 - gy[1] * ds_dy1;
        assert!((em.vertical[(0, 1)] - f01).abs() < 1e-6 * f01.abs().max(1.0));
        // horizontal tensor via the horizontal derivative (flat gamma: plain d/dx)
        let ds_dx1 = (s(x[0] + hstep, x[1], y[0], y[1]) - s(x[0] - hstep, x[1], y[0], y[1]))
            / (2.0 * hstep);
        let ds_dx2 = (s(x[0], x[1] + hstep, y[0], y[1]) - s(x[0], x[1] - hstep, y[0], y[1]))
            / (2.0 * hstep);
        let big01 = gy[0] * ds_dx2 - gy[1] * ds_dx1;
        assert!((em.horizontal[(0, 1)] - big01).abs() < 1e-6 * big01.abs().max(1.0));
    }

    #[test]
    fn sigma_derived_all_zero_for_zero_sigma() {
        let h = GLMetric::riemannian(sphere());
        let sd = h.sigma_derived(&[FRAC_PI_3, 0.2], &[0.5, 0.7]).unwrap();
        assert_eq!(sd.sigma_h, 0.0);
        assert_eq!(sd.sigma_v, 0.0);
        assert_eq!(sd.sigma_bar, 0.0);
        assert_eq!(sd.sigma_dot, 0.0);
        assert_eq!(sd.sigma_ij.max_abs(), 0.0);
        assert_eq!(sd.sigma_dot_ab.max_abs(), 0.0);
        assert_eq!(sd.t_ij.max_abs(), 0.0);
    }

    #[test]
    fn sigma_derived_all_zero_for_constant_sigma_flat_gamma() {
        let gamma = MetricField::euclidean(2);
        let sigma = ScalarField::constant(4, 0.7f64);
        let h = GLMetric::new(gamma, sigma, |_, _| false);
        let sd = h.sigma_derived(&[0.1, 0.2], &[0.5, 0.7]).unwrap();
        assert_eq!(sd.sigma_h, 0.0);
        assert_eq!(sd.sigma_v, 0.0);
        assert_eq!(sd.sigma_ij.max_abs(), 0.0);
        assert_eq!(sd.sigma_dot_ab.max_abs(), 0.0);
        assert_eq!(sd.t_ij.max_abs(), 0.0);
    }

    #[test]
    fn sigma_derived_inverse_square_line() {
        // symbolic oracle for sigma = -ln|y| on the flat line, at y = 2:
        //   dsigma/dy = -1/y          -> sigma_v = 1/y^2          = 1/4
        //   d2sigma/dy2 = 1/y^2
        //   sigma_dot_11 = 1/y^2 + 1/y^2 - (1/2)(1/y^2) = 3/(2y^2) = 3/8
        //   sigma x-independent, gamma flat -> sigma_h = 0, sigma_ij = 0,
        //   curvature terms vanish -> t = 0
        let h = pfaff_metric();
        let sd = h.sigma_derived(&[0.0], &[2.0]).unwrap();
        assert!((sd.sigma_v - 0.25).abs() < 1e-13);
        assert!((sd.sigma_dot_ab[(0, 0)] - 0.375).abs() < 1e-13);
        assert_eq!(sd.sigma_h, 0.0);
        assert_eq!(sd.sigma_ij.max_abs(), 0.0);
        assert_eq!(sd.t_ij.max_abs(), 0.0);
        // the autodiff value agrees with the trace by construction
        assert!((sd.sigma_dot - 0.375).abs() < 1e-13);
    }

    #[test]
    fn maxwell_residuals_vanish_for_zero_sigma() {
        let h = GLMetric::riemannian(sphere());
        let r = h.maxwell_residuals(&[FRAC_PI_3, 0.2], &[0.5, 0.7]).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn maxwell_residuals_trivial_in_dimension_one() {
        let h = pfaff_metric();
        let r = h.maxwell_residuals(&[0.1], &[2.0]).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn maxwell_horizontal_vanishes_for_flat_gamma_and_y_only_sigma() {
        let gamma = MetricField::euclidean(2);
        let sigma = ScalarField::new(4, |t: &[DualTower<f64>]| {
            (&t[2] * &t[2] + &t[3] * &t[3] + 1.0).ln() * 0.5
        });
        let h = GLMetric::new(gamma, sigma, |_, _| false);
        let r = h.maxwell_residuals(&[0.3, -0.2], &[0.8, 0.6]).unwrap();
        assert!(r.horizontal.max_abs() < 1e-14);
    }

    #[test]
    fn maxwell_vertical_vanishes_for_flat_gamma_and_y_only_sigma() {
        // f = d(exact 1-form) in the fiber when gamma is constant and sigma
        // depends only on y, so its cyclic fiber derivative vanishes; the
        // statement is insensitive to rescaling gamma.
        for scale in [1.0f64, 2.5] {
            let gamma = MetricField::diagonal(vec![scale; 3]);
            let sigma = ScalarField::new(6, |t: &[DualTower<f64>]| {
                (&t[3] * &t[3] + (&t[4] * &t[5]).exp() + 1.0).ln() * 0.5
            });
            let h = GLMetric::new(gamma, sigma, |_, _| false);
            let r = h
                .maxwell_residuals(&[0.1, 0.2, -0.3], &[0.8, 0.6, 0.4])
                .unwrap();
            assert!(r.vertical.max_abs() < 1e-12, "scale {scale}");
        }
    }

    #[test]
    fn einstein_zero_sigma_flat() {
        let h = GLMetric::riemannian(MetricField::euclidean(2));
        let (t_h, t_v) = h.einstein_components(&[0.1, 0.2], &[0.3, 0.4], 1.0).unwrap();
        assert_eq!(t_h.max_abs(), 0.0);
        assert_eq!(t_v.max_abs(), 0.0);
    }

    #[test]
    fn einstein_two_sphere_tensor_vanishes() {
        // oracle: in two dimensions the Einstein tensor is identically zero
        let h = GLMetric::riemannian(sphere());
        let (t_h, _) = h
            .einstein_components(&[FRAC_PI_3, 0.2], &[0.5, 0.7], 1.0)
            .unwrap();
        assert!(t_h.max_abs() < 1e-9);
    }

    #[test]
    fn einstein_vertical_prefactor_kills_dimension_two() {
        let h = GLMetric::induced_by_direction_field(rotation_field(), MetricField::euclidean(2));
        let (_, t_v) = h.einstein_components(&[1.0, 0.0], &[0.2, 1.0], 2.0).unwrap();
        assert_eq!(t_v.max_abs(), 0.0);
    }

    #[test]
    fn einstein_rejects_zero_gravific_constant() {
        let h = GLMetric::riemannian(MetricField::euclidean(2));
        assert!(matches!(
            h.einstein_components(&[0.0, 0.0], &[1.0, 0.0], 0.0),
            Err(Error::ZeroGravific)
        ));
    }

    #[test]
    fn vertical_em_vanishes_when_sigma_is_y_independent() {
        let gamma = MetricField::euclidean(2);
        let sigma = ScalarField::new(4, |t: &[DualTower<f64>]| (&t[0] + &t[1] * 0.5).sin());
        let h = GLMetric::new(gamma, sigma, |_, _| false);
        let em = h.em_tensors(&[0.4, 0.1], &[0.6, -0.9]).unwrap();
        assert!(em.vertical.max_abs() < 1e-10);
    }
}
