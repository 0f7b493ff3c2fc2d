//! Shared helpers for the integration suites: a corpus of composite scalar
//! fields and the finite-difference oracles used against the derivative
//! engine.

// each test target compiles this module separately and uses a subset
#![allow(dead_code)]

use glspace::chart::{DualTower, Mat, ScalarField};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type T = DualTower<f64>;

/// Composite fields built from sums, products, quotients, exp, log, powers,
/// square roots and trigonometry; all smooth on the open square (-1, 1)^2.
pub fn composite_corpus() -> Vec<(&'static str, ScalarField<f64>)> {
    vec![
        (
            "polynomial",
            ScalarField::new(2, |a: &[T]| {
                &a[0] * &a[0] * &a[1] + (&a[0] * (&a[1] * &a[1])) * 3.0 - &a[0] + 2.0
            }),
        ),
        (
            "exp_linear",
            ScalarField::new(2, |a: &[T]| (&a[0] * 0.3 - &a[1] * 0.7).exp()),
        ),
        (
            "log_quadratic",
            ScalarField::new(2, |a: &[T]| {
                (&a[0] * &a[0] + (&a[1] * &a[1]) * 2.0 + 1.0).ln()
            }),
        ),
        (
            "quotient",
            ScalarField::new(2, |a: &[T]| {
                (&a[0] * &a[0] + 1.0) / (&a[1] * &a[1] + 2.0)
            }),
        ),
        (
            "trig_mix",
            ScalarField::new(2, |a: &[T]| (&a[0] * &a[1]).sin() + a[0].cos() * &a[1]),
        ),
        (
            "power",
            ScalarField::new(2, |a: &[T]| {
                (&a[0] * &a[0] + &a[1] * &a[1] + 1.0).powf(1.7)
            }),
        ),
        (
            "sqrt_chain",
            ScalarField::new(2, |a: &[T]| ((&a[0] + &a[1]).powi(2) + 1.0).sqrt()),
        ),
        (
            "reciprocal",
            ScalarField::new(2, |a: &[T]| (a[0].sin() + a[1].cos() + 2.0).recip()),
        ),
    ]
}

/// Deterministic interior sample points of the open square.
pub fn interior_points(count: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| [rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9)])
        .collect()
}

/// Central finite differences of the field values.
pub fn fd_gradient(field: &ScalarField<f64>, x: &[f64], step: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += step;
            xm[k] -= step;
            (field.eval(&xp).unwrap() - field.eval(&xm).unwrap()) / (2.0 * step)
        })
        .collect()
}

/// Central finite differences of the forward-mode gradient; checks the second
/// derivative level against the first.
pub fn fd_hessian(field: &ScalarField<f64>, x: &[f64], step: f64) -> Mat<f64> {
    let n = x.len();
    Mat::from_fn(n, n, |i, j| {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += step;
        xm[j] -= step;
        (field.grad(&xp).unwrap()[i] - field.grad(&xm).unwrap()[i]) / (2.0 * step)
    })
}

/// Relative agreement with floor 1.
pub fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
