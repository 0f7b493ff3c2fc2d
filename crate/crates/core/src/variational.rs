//! Discretized domains, direction energies, the ratio functional with its
//! Cauchy-Schwarz lower bound, first-order system residuals, and
//! first-variation probes.
//!
//! Quadrature is tensor-product trapezoid: weights are positive, so the
//! nodewise Cauchy-Schwarz inequality makes the discrete lower bound
//! `1/2 * sum(weights)` exact up to rounding, not just up to quadrature error.

use crate::chart::field::{lift_constants, lift_variables, MetricField, ScalarField, VectorField};
use crate::chart::linalg::{pairwise_sum, Mat};
use crate::chart::tower::DualTower;
use crate::error::{Error, Result};
use crate::gl_metric::GLMetric;
use crate::scalar::{coords_f64, Real};
use crate::table::NodeTable;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Tensor-product trapezoid quadrature over an axis-aligned box, with the
/// metric volume factor folded into the weights.
#[derive(Clone, Debug)]
pub struct MeshQuadrature<F> {
    domain: Vec<(F, F)>,
    resolution: Vec<usize>,
    nodes: Vec<Vec<F>>,
    weights: Vec<F>,
}

impl<F: Real> MeshQuadrature<F> {
    /// Builds the mesh with `resolution[k]` nodes along axis `k` and weights
    /// `prod_k w_k * sqrt(det phi)`.
    pub fn trapezoid(
        domain: &[(F, F)],
        resolution: &[usize],
        phi: &MetricField<F>,
    ) -> Result<Self> {
        let m = domain.len();
        if resolution.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: resolution.len(),
            });
        }
        if phi.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: phi.dim(),
            });
        }
        for (k, &(lo, hi)) in domain.iter().enumerate() {
            if !(hi > lo) {
                return Err(Error::InvalidArgument(format!(
                    "axis {k}: domain must satisfy lo < hi"
                )));
            }
            if resolution[k] < 2 {
                return Err(Error::InvalidArgument(format!(
                    "axis {k}: trapezoid quadrature needs at least 2 nodes"
                )));
            }
        }
        let steps: Vec<F> = domain
            .iter()
            .zip(resolution)
            .map(|(&(lo, hi), &r)| (hi - lo) / F::of((r - 1) as f64))
            .collect();
        let total: usize = resolution.iter().product();
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut index = vec![0usize; m];
        for _ in 0..total {
            let mut coords = Vec::with_capacity(m);
            let mut axis_weight = F::one();
            for k in 0..m {
                let i = index[k];
                coords.push(domain[k].0 + steps[k] * F::of(i as f64));
                let w = if i == 0 || i == resolution[k] - 1 {
                    steps[k] * F::of(0.5)
                } else {
                    steps[k]
                };
                axis_weight = axis_weight * w;
            }
            let (_, det) = phi.inverse_det(&coords)?;
            weights.push(axis_weight * det.sqrt());
            nodes.push(coords);
            // lexicographic advance, last axis fastest
            for k in (0..m).rev() {
                index[k] += 1;
                if index[k] < resolution[k] {
                    break;
                }
                index[k] = 0;
            }
        }
        Ok(MeshQuadrature {
            domain: domain.to_vec(),
            resolution: resolution.to_vec(),
            nodes,
            weights,
        })
    }

    /// Trapezoid mesh with the Euclidean volume factor.
    pub fn trapezoid_euclidean(domain: &[(F, F)], resolution: &[usize]) -> Result<Self> {
        MeshQuadrature::trapezoid(domain, resolution, &MetricField::euclidean(domain.len()))
    }

    pub fn domain(&self) -> &[(F, F)] {
        &self.domain
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn nodes(&self) -> &[Vec<F>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Metric volume of the domain: the sum of quadrature weights.
    pub fn volume(&self) -> F {
        pairwise_sum(&self.weights)
    }

    /// Same box with each axis step halved (resolution `2k - 1`).
    pub fn refined(&self, phi: &MetricField<F>) -> Result<Self> {
        let res: Vec<usize> = self.resolution.iter().map(|&r| 2 * r - 1).collect();
        MeshQuadrature::trapezoid(&self.domain, &res, phi)
    }
}

/// Differentiable map between chart domains with exact Jacobian access.
#[derive(Clone)]
pub struct SmoothMap<F: Real> {
    m: usize,
    n: usize,
    f: Arc<dyn Fn(&[DualTower<F>]) -> Vec<DualTower<F>> + Send + Sync>,
}

impl<F: Real> SmoothMap<F> {
    pub fn new(
        m: usize,
        n: usize,
        f: impl Fn(&[DualTower<F>]) -> Vec<DualTower<F>> + Send + Sync + 'static,
    ) -> Self {
        SmoothMap { m, n, f: Arc::new(f) }
    }

    pub fn domain_dim(&self) -> usize {
        self.m
    }

    pub fn target_dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, a: &[F]) -> Result<Vec<F>> {
        let out = (self.f)(&lift_constants(a));
        if out.iter().any(|t| !t.value().is_finite()) {
            return Err(Error::NonFinite {
                context: "smooth map".into(),
                coords: coords_f64(a),
            });
        }
        Ok(out.iter().map(|t| t.value()).collect())
    }

    /// Evaluates the underlying closure on caller-provided towers.
    pub fn eval_towers(&self, a: &[DualTower<F>]) -> Vec<DualTower<F>> {
        (self.f)(a)
    }

    /// Values and first derivatives in one pass.
    pub fn jet(&self, a: &[F]) -> Result<Vec<DualTower<F>>> {
        let out = (self.f)(&lift_variables(a));
        if out.iter().any(|t| !t.all_finite()) {
            return Err(Error::NonFinite {
                context: "smooth map".into(),
                coords: coords_f64(a),
            });
        }
        Ok(out)
    }

    /// Jacobian `J[i][alpha] = d f^i / d a^alpha`.
    pub fn jacobian(&self, a: &[F]) -> Result<Mat<F>> {
        let jet = self.jet(a)?;
        Ok(Mat::from_fn(self.n, self.m, |i, alpha| jet[i].first_at(alpha)))
    }

    /// The map `a -> f(a) + eps * eta(a)`.
    pub fn perturbed(&self, eta: &SmoothMap<F>, eps: F) -> SmoothMap<F> {
        assert_eq!(self.m, eta.m);
        assert_eq!(self.n, eta.n);
        let f = Arc::clone(&self.f);
        let g = Arc::clone(&eta.f);
        SmoothMap::new(self.m, self.n, move |a| {
            let base = f(a);
            let bump = g(a);
            base.into_iter()
                .zip(bump)
                .map(|(b, e)| b + e * eps)
                .collect()
        })
    }
}

/// A (1,1)-tensor section `T^i_alpha(a, x)` over the product of domain and
/// target, optionally decomposed as a product.
#[derive(Clone)]
pub enum DirectionSection<F: Real> {
    /// Arbitrary components.
    General {
        m: usize,
        n: usize,
        eval: Arc<dyn Fn(&[F], &[F]) -> Mat<F> + Send + Sync>,
    },
    /// `T^i_alpha = xi^i(x) alpha_alpha(a)`.
    Product {
        xi: VectorField<F>,
        alpha: VectorField<F>,
    },
    /// `T^1_alpha = scale(a) form_alpha(x)`; the swapped ordering for scalar
    /// targets, where the form components depend on the target value.
    ProductSwapped {
        scale: ScalarField<F>,
        form: VectorField<F>,
    },
}

impl<F: Real> DirectionSection<F> {
    pub fn general(
        m: usize,
        n: usize,
        eval: impl Fn(&[F], &[F]) -> Mat<F> + Send + Sync + 'static,
    ) -> Self {
        DirectionSection::General {
            m,
            n,
            eval: Arc::new(eval),
        }
    }

    pub fn product(xi: VectorField<F>, alpha: VectorField<F>) -> Self {
        DirectionSection::Product { xi, alpha }
    }

    pub fn product_swapped(scale: ScalarField<F>, form: VectorField<F>) -> Self {
        DirectionSection::ProductSwapped { scale, form }
    }

    pub fn domain_dim(&self) -> usize {
        match self {
            DirectionSection::General { m, .. } => *m,
            DirectionSection::Product { alpha, .. } => alpha.output_dim(),
            DirectionSection::ProductSwapped { form, .. } => form.output_dim(),
        }
    }

    pub fn target_dim(&self) -> usize {
        match self {
            DirectionSection::General { n, .. } => *n,
            DirectionSection::Product { xi, .. } => xi.output_dim(),
            DirectionSection::ProductSwapped { .. } => 1,
        }
    }

    /// Components at `(a, x)`, an `n x m` matrix.
    pub fn eval(&self, a: &[F], x: &[F]) -> Result<Mat<F>> {
        let out = match self {
            DirectionSection::General { eval, .. } => eval(a, x),
            DirectionSection::Product { xi, alpha } => {
                let xv = xi.eval(x)?;
                let av = alpha.eval(a)?;
                Mat::from_fn(xv.len(), av.len(), |i, al| xv[i] * av[al])
            }
            DirectionSection::ProductSwapped { scale, form } => {
                let s = scale.eval(a)?;
                let fv = form.eval(x)?;
                Mat::from_fn(1, fv.len(), |_, al| s * fv[al])
            }
        };
        if !out.all_finite() {
            return Err(Error::NonFinite {
                context: "direction section".into(),
                coords: coords_f64(a),
            });
        }
        Ok(out)
    }

    /// The section scaled by a positive function of the domain point.
    pub fn scaled_by(&self, k: ScalarField<F>) -> DirectionSection<F> {
        let inner = self.clone();
        let (m, n) = (self.domain_dim(), self.target_dim());
        DirectionSection::general(m, n, move |a, x| {
            let base = inner.eval(a, x).expect("section evaluation");
            let s = k.eval(a).expect("scaling evaluation");
            base.map(|v| *v * s)
        })
    }
}

/// Direction energy of a map: `1/2 int phi^{ab} h_ij(f, f_* A) f^i_a f^j_b
/// dVol_phi` over the mesh.
pub fn energy<F: Real>(
    phi: &MetricField<F>,
    direction: &VectorField<F>,
    h: &GLMetric<F>,
    f: &SmoothMap<F>,
    mesh: &MeshQuadrature<F>,
) -> Result<F> {
    let m = f.domain_dim();
    let n = f.target_dim();
    let mut terms = Vec::with_capacity(mesh.len());
    for (idx, node) in mesh.nodes().iter().enumerate() {
        let (phi_inv, _) = phi.inverse_det(node)?;
        let jac = f.jacobian(node)?;
        let x = f.eval(node)?;
        let a_vec = direction.eval(node)?;
        let mut pushed = vec![F::zero(); n];
        for i in 0..n {
            for al in 0..m {
                pushed[i] = pushed[i] + jac[(i, al)] * a_vec[al];
            }
        }
        let h_mat = h.eval(&x, &pushed).map_err(|e| match e {
            Error::SingularLocus { .. } => Error::SingularNode {
                node: idx,
                coords: coords_f64(node),
            },
            other => other,
        })?;
        let mut integrand = F::zero();
        for al in 0..m {
            for be in 0..m {
                for i in 0..n {
                    for j in 0..n {
                        integrand = integrand
                            + phi_inv[(al, be)] * h_mat[(i, j)] * jac[(i, al)] * jac[(j, be)];
                    }
                }
            }
        }
        terms.push(mesh.weights()[idx] * integrand);
    }
    Ok(F::of(0.5) * pairwise_sum(&terms))
}

/// Evaluation record of the ratio functional.
#[derive(Clone, Debug)]
pub struct LtEvaluation<F> {
    pub value: F,
    /// Exact discrete lower bound `1/2 * sum(weights)`.
    pub half_volume: F,
    /// Smallest squared direction cosine between `delta f` and `T` over the
    /// mesh; 1 exactly at nodewise parallelism.
    pub min_cos2: F,
    pub table: NodeTable,
}

/// The ratio functional `1/2 int (|delta f|^2 |T|^2 / <delta f, T>^2)
/// dVol_phi`, bounded below by half the metric volume, with equality exactly
/// when `delta f` and `T` are parallel at every node.
pub fn lagrangian_lt_detailed<F: Real>(
    phi: &MetricField<F>,
    psi: &MetricField<F>,
    section: &DirectionSection<F>,
    f: &SmoothMap<F>,
    mesh: &MeshQuadrature<F>,
) -> Result<LtEvaluation<F>> {
    let m = f.domain_dim();
    let n = f.target_dim();
    let mut headers: Vec<String> = (0..m).map(|k| format!("a{}", k + 1)).collect();
    headers.extend(
        ["norm_df2", "norm_t2", "pairing", "cos2", "integrand"]
            .iter()
            .map(|s| s.to_string()),
    );
    let mut table = NodeTable::new(headers);
    let mut terms = Vec::with_capacity(mesh.len());
    let mut min_cos2 = F::infinity();
    for (idx, node) in mesh.nodes().iter().enumerate() {
        let (phi_inv, _) = phi.inverse_det(node)?;
        let x = f.eval(node)?;
        let psi_mat = psi.eval(&x)?;
        let jac = f.jacobian(node)?;
        let t_mat = section.eval(node, &x)?;
        let inner = |s: &Mat<F>, t: &Mat<F>| {
            let mut acc = F::zero();
            for al in 0..m {
                for be in 0..m {
                    for i in 0..n {
                        for j in 0..n {
                            acc = acc + phi_inv[(al, be)] * psi_mat[(i, j)] * s[(i, al)] * t[(j, be)];
                        }
                    }
                }
            }
            acc
        };
        let norm_df2 = inner(&jac, &jac);
        let norm_t2 = inner(&t_mat, &t_mat);
        let pairing = inner(&jac, &t_mat);
        if pairing == F::zero() {
            return Err(Error::ExcludedNode {
                node: idx,
                coords: coords_f64(node),
            });
        }
        let integrand = norm_df2 * norm_t2 / (pairing * pairing);
        if !integrand.is_finite() {
            return Err(Error::ExcludedNode {
                node: idx,
                coords: coords_f64(node),
            });
        }
        let cos2 = pairing * pairing / (norm_df2 * norm_t2);
        min_cos2 = min_cos2.min(cos2);
        let mut row: Vec<f64> = coords_f64(node);
        row.extend(coords_f64(&[norm_df2, norm_t2, pairing, cos2, integrand]));
        table.push(row);
        terms.push(mesh.weights()[idx] * integrand);
    }
    Ok(LtEvaluation {
        value: F::of(0.5) * pairwise_sum(&terms),
        half_volume: F::of(0.5) * mesh.volume(),
        min_cos2,
        table,
    })
}

/// Value of the ratio functional.
pub fn lagrangian_lt<F: Real>(
    phi: &MetricField<F>,
    psi: &MetricField<F>,
    section: &DirectionSection<F>,
    f: &SmoothMap<F>,
    mesh: &MeshQuadrature<F>,
) -> Result<F> {
    Ok(lagrangian_lt_detailed(phi, psi, section, f, mesh)?.value)
}

/// Residual of the first-order system `d f^i / d a^alpha =
/// T^i_alpha(a, f(a))` over the mesh.
#[derive(Clone, Debug)]
pub struct SystemEResidual<F> {
    pub max_residual: F,
    pub table: NodeTable,
}

pub fn system_e_residual<F: Real>(
    section: &DirectionSection<F>,
    f: &SmoothMap<F>,
    mesh: &MeshQuadrature<F>,
) -> Result<SystemEResidual<F>> {
    let m = f.domain_dim();
    let n = f.target_dim();
    let mut headers: Vec<String> = (0..m).map(|k| format!("a{}", k + 1)).collect();
    for i in 0..n {
        for al in 0..m {
            headers.push(format!("r_{}_{}", i + 1, al + 1));
        }
    }
    headers.push("node_max".into());
    let mut table = NodeTable::new(headers);
    let mut worst = F::zero();
    for node in mesh.nodes() {
        let jac = f.jacobian(node)?;
        let x = f.eval(node)?;
        let t_mat = section.eval(node, &x)?;
        let mut row: Vec<f64> = coords_f64(node);
        let mut node_max = F::zero();
        for i in 0..n {
            for al in 0..m {
                let r = jac[(i, al)] - t_mat[(i, al)];
                node_max = node_max.max(r.abs());
                row.push(num_traits::ToPrimitive::to_f64(&r).unwrap_or(f64::NAN));
            }
        }
        worst = worst.max(node_max);
        row.push(num_traits::ToPrimitive::to_f64(&node_max).unwrap_or(f64::NAN));
        table.push(row);
    }
    Ok(SystemEResidual {
        max_residual: worst,
        table,
    })
}

/// Central-difference directional derivative of a functional at `f` along a
/// perturbation `eta`: `(F(f + eps eta) - F(f - eps eta)) / (2 eps)`.
pub fn first_variation<F: Real>(
    functional: impl Fn(&SmoothMap<F>) -> Result<F>,
    f: &SmoothMap<F>,
    eta: &SmoothMap<F>,
    eps: F,
) -> Result<F> {
    let plus = functional(&f.perturbed(eta, eps))?;
    let minus = functional(&f.perturbed(eta, -eps))?;
    Ok((plus - minus) / (F::of(2.0) * eps))
}

/// Deterministic random polynomial bump vanishing on the boundary of the box:
/// each component is `prod_k 4 (a^k - lo)(hi - a^k)/(hi - lo)^2` times an
/// affine polynomial with coefficients drawn from the seeded generator.
pub fn polynomial_bump<F: Real>(domain: &[(F, F)], n_out: usize, seed: u64) -> SmoothMap<F> {
    let m = domain.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(n_out);
    for _ in 0..n_out {
        coeffs.push((0..=m).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    let domain: Vec<(F, F)> = domain.to_vec();
    SmoothMap::new(m, n_out, move |a: &[DualTower<F>]| {
        let mut factor = DualTower::constant(F::one());
        for (k, &(lo, hi)) in domain.iter().enumerate() {
            let span2 = (hi - lo) * (hi - lo);
            let up = &a[k] - lo;
            let down = -&a[k] + hi;
            factor = factor * (up * down * (F::of(4.0) / span2));
        }
        coeffs
            .iter()
            .map(|c| {
                let mut p = DualTower::constant(F::of(c[0]));
                for k in 0..m {
                    p = p + &a[k] * F::of(c[k + 1]);
                }
                &factor * p
            })
            .collect()
    })
}

/// A map together with the positive scaling function that relates it to a
/// section: candidate solution of `delta f = K T`.
#[derive(Clone)]
pub struct ScaledSolution<F: Real> {
    pub map: SmoothMap<F>,
    pub scaling: ScalarField<F>,
}

impl<F: Real> ScaledSolution<F> {
    /// Largest defect of `d f^i/d a^alpha - K(a) T^i_alpha(a, f(a))` over the
    /// mesh.
    pub fn residual(
        &self,
        section: &DirectionSection<F>,
        mesh: &MeshQuadrature<F>,
    ) -> Result<F> {
        let m = self.map.domain_dim();
        let n = self.map.target_dim();
        let mut worst = F::zero();
        for node in mesh.nodes() {
            let jac = self.map.jacobian(node)?;
            let x = self.map.eval(node)?;
            let t_mat = section.eval(node, &x)?;
            let k = self.scaling.eval(node)?;
            for i in 0..n {
                for al in 0..m {
                    worst = worst.max((jac[(i, al)] - k * t_mat[(i, al)]).abs());
                }
            }
        }
        Ok(worst)
    }
}
