//! Property-based invariants: derivative rules against finite differences,
//! exact structural symmetries, the discrete lower bound, and generic-scalar
//! smoke tests.

mod common;

use common::{close_rel, interior_points};
use glspace::chart::{DualTower, Mat, MetricField, ScalarField, VectorField};
use glspace::gl_metric::GLMetric;
use glspace::riemannian::{christoffel, covariant_derivative_2form};
use glspace::variational::{
    lagrangian_lt_detailed, polynomial_bump, DirectionSection, MeshQuadrature, SmoothMap,
};
use proptest::prelude::*;
use std::f64::consts::PI;

type T = DualTower<f64>;

/// Polynomial metric `B(x)^T B(x) + I` with `B` affine in the coordinates:
/// symmetric, positive definite, entries quadratic in `x`.
fn polynomial_metric(coeffs: [f64; 6]) -> MetricField<f64> {
    MetricField::new(2, move |x: &[T]| {
        let b = |i: usize, j: usize| -> T {
            let base = coeffs[2 * i + j];
            &x[0] * (0.3 * base) + &x[1] * (coeffs[4 + i] * 0.2) + base
        };
        let mut m = Mat::filled(2, 2, T::constant(0.0));
        for i in 0..2 {
            for j in i..2 {
                let mut acc = if i == j {
                    T::constant(1.0)
                } else {
                    T::constant(0.0)
                };
                for k in 0..2 {
                    acc = acc + b(k, i) * b(k, j);
                }
                m[(j, i)] = acc.clone();
                m[(i, j)] = acc;
            }
        }
        m
    })
}

#[test]
fn christoffel_lower_index_symmetry_is_exact() {
    let metric = polynomial_metric([0.4, -0.2, 0.1, 0.5, -0.3, 0.2]);
    for p in interior_points(100, 3) {
        let c = christoffel(&metric, &p).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(c.get(i, j, k).to_bits(), c.get(i, k, j).to_bits());
                }
            }
        }
    }
}

#[test]
fn metric_is_parallel_for_its_connection() {
    let metric = polynomial_metric([0.3, 0.1, -0.2, 0.4, 0.2, -0.1]);
    for p in interior_points(50, 5) {
        let (vals, deriv) = metric.partials(&p).unwrap();
        let cov = covariant_derivative_2form(&metric, &p, &vals, &deriv).unwrap();
        assert!(cov.max_abs() < 1e-9, "metricity defect {}", cov.max_abs());
    }
}

#[test]
fn nonlinear_connection_scales_exactly_with_the_fiber() {
    let metric = polynomial_metric([0.2, -0.1, 0.3, 0.1, 0.4, 0.0]);
    let h = GLMetric::riemannian(metric);
    for p in interior_points(20, 9) {
        let y = [0.7, -0.4];
        let y2 = [1.4, -0.8];
        let a = h.nonlinear_connection(&p, &y).unwrap();
        let b = h.nonlinear_connection(&p, &y2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!((2.0 * a[(i, j)]).to_bits(), b[(i, j)].to_bits());
            }
        }
    }
}

#[test]
fn f32_instantiation_smoke() {
    let gamma = MetricField::<f32>::euclidean(2);
    let c = christoffel(&gamma, &[0.5f32, -0.25]).unwrap();
    assert_eq!(c.max_abs(), 0.0f32);
    let mesh =
        MeshQuadrature::<f32>::trapezoid_euclidean(&[(0.0f32, 1.0), (0.0, 1.0)], &[5, 5]).unwrap();
    assert!((mesh.volume() - 1.0).abs() < 1e-5);
    let field = ScalarField::<f32>::new(2, |a| (&a[0] + &a[1] * 2.0f32).exp());
    let g = field.grad(&[0.0, 0.0]).unwrap();
    assert!((g[0] - 1.0).abs() < 1e-5);
    assert!((g[1] - 2.0).abs() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Product and chain rules agree with central finite differences.
    #[test]
    fn tower_rules_match_finite_differences(
        a in -0.8f64..0.8,
        b in -0.8f64..0.8,
        c0 in 0.2f64..2.0,
        c1 in -1.5f64..1.5,
    ) {
        let field = ScalarField::new(2, move |x: &[T]| {
            ((&x[0] * c1 + &x[1] * &x[1]).sin() + c0 + 1.5).ln() * (&x[0] * &x[1] + 2.0)
        });
        let x = [a, b];
        let g = field.grad(&x).unwrap();
        let h = 1e-5;
        for k in 0..2 {
            let mut xp = x; xp[k] += h;
            let mut xm = x; xm[k] -= h;
            let fd = (field.eval(&xp).unwrap() - field.eval(&xm).unwrap()) / (2.0 * h);
            prop_assert!(close_rel(g[k], fd, 1e-6));
        }
        let hess = field.hessian(&x).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert_eq!(hess[(i, j)].to_bits(), hess[(j, i)].to_bits());
                let mut xp = x; xp[j] += h;
                let mut xm = x; xm[j] -= h;
                let fd = (field.grad(&xp).unwrap()[i] - field.grad(&xm).unwrap()[i]) / (2.0 * h);
                prop_assert!(close_rel(hess[(i, j)], fd, 1e-6));
            }
        }
    }

    /// The discrete lower bound holds exactly (up to rounding) for every
    /// admissible curve, with equality exactly at nodewise parallelism.
    #[test]
    fn discrete_lower_bound_and_equality(
        amplitude in 0.0f64..0.2,
        seed in 0u64..500,
    ) {
        let phi = MetricField::euclidean(1);
        let psi = MetricField::euclidean(2);
        let mesh = MeshQuadrature::trapezoid_euclidean(&[(0.0, 2.0 * PI)], &[200]).unwrap();
        let section = DirectionSection::product(
            VectorField::new(2, 2, |x: &[T]| vec![-x[1].clone(), x[0].clone()]),
            VectorField::constant(1, vec![1.0]),
        );
        let orbit = SmoothMap::new(1, 2, |t: &[T]| vec![t[0].cos(), t[0].sin()]);
        let eta = polynomial_bump(&[(0.0, 2.0 * PI)], 2, seed);
        let f = orbit.perturbed(&eta, amplitude);
        let lt = lagrangian_lt_detailed(&phi, &psi, &section, &f, &mesh).unwrap();
        prop_assert!(lt.value >= lt.half_volume - 1e-9);
        if lt.value <= lt.half_volume + 1e-10 {
            // equality forces nodewise parallelism
            prop_assert!(lt.min_cos2 >= 1.0 - 1e-8);
        }
        if lt.min_cos2 < 1.0 - 1e-8 {
            prop_assert!(lt.value > lt.half_volume);
        }
    }

    /// Rescaling the section never moves the functional.
    #[test]
    fn section_rescaling_invariance(scale0 in 0.2f64..3.0, seed in 0u64..100) {
        let phi = MetricField::euclidean(1);
        let psi = MetricField::euclidean(2);
        let mesh = MeshQuadrature::trapezoid_euclidean(&[(0.0, 2.0 * PI)], &[150]).unwrap();
        let section = DirectionSection::product(
            VectorField::new(2, 2, |x: &[T]| vec![-x[1].clone(), x[0].clone()]),
            VectorField::constant(1, vec![1.0]),
        );
        let orbit = SmoothMap::new(1, 2, |t: &[T]| vec![t[0].cos(), t[0].sin()]);
        let eta = polynomial_bump(&[(0.0, 2.0 * PI)], 2, seed);
        let f = orbit.perturbed(&eta, 0.07);
        let base = lagrangian_lt_detailed(&phi, &psi, &section, &f, &mesh).unwrap().value;
        let k = ScalarField::new(1, move |t: &[T]| (&t[0] * 0.1).cos() * scale0 + scale0 + 0.1);
        let scaled = section.scaled_by(k);
        let v = lagrangian_lt_detailed(&phi, &psi, &scaled, &f, &mesh).unwrap().value;
        prop_assert!((v - base).abs() <= 1e-10 * base.abs().max(1.0));
    }
}
