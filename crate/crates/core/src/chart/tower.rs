//! Second-order forward-mode scalars.
//!
//! A [`DualTower`] carries a value together with its exact gradient and
//! Hessian with respect to a set of seeded coordinates. Arithmetic propagates
//! all three parts through product and chain rules, so any field written as an
//! ordinary closure over these scalars exposes exact first and second
//! derivatives at every evaluation point. Finite differences are used only as
//! an independent test oracle.
//!
//! Constants are dimension-0 towers and broadcast against seeded operands.
//! Hessian entries are computed for the upper triangle and mirrored, so the
//! stored matrix is symmetric under bit-equal transposition.

use crate::scalar::Real;
use num_traits::{One, Zero};
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct DualTower<F> {
    value: F,
    first: Vec<F>,
    second: Vec<F>, // row-major dim*dim, exactly symmetric
}

impl<F: Real> DualTower<F> {
    /// A constant: dimension-0 tower with zero derivatives.
    pub fn constant(value: F) -> Self {
        DualTower {
            value,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// A coordinate seeded as variable `index` out of `dim`.
    pub fn seeded(value: F, index: usize, dim: usize) -> Self {
        assert!(index < dim, "seed index {index} out of range for dim {dim}");
        let mut first = vec![F::zero(); dim];
        first[index] = F::one();
        DualTower {
            value,
            first,
            second: vec![F::zero(); dim * dim],
        }
    }

    /// Number of seeded coordinates (0 for constants).
    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn value(&self) -> F {
        self.value
    }

    /// Gradient entry; zero for constants.
    pub fn first_at(&self, i: usize) -> F {
        if self.first.is_empty() {
            F::zero()
        } else {
            self.first[i]
        }
    }

    /// Hessian entry; zero for constants.
    pub fn second_at(&self, i: usize, j: usize) -> F {
        if self.second.is_empty() {
            F::zero()
        } else {
            self.second[i * self.dim() + j]
        }
    }

    /// Gradient as a vector of length `dim`.
    pub fn gradient(&self, dim: usize) -> Vec<F> {
        (0..dim).map(|i| self.first_at(i)).collect()
    }

    /// True when the value and every derivative entry are finite.
    pub fn all_finite(&self) -> bool {
        self.value.is_finite()
            && self.first.iter().all(|v| v.is_finite())
            && self.second.iter().all(|v| v.is_finite())
    }

    /// Shifts one derivative level down: the returned tower has the `i`-th
    /// first derivative as its value and the corresponding Hessian row as its
    /// gradient. Its own second-order part is zeroed and must not be relied
    /// on.
    pub fn derivative_jet(&self, i: usize) -> Self {
        let d = self.dim();
        if d == 0 {
            return DualTower::constant(F::zero());
        }
        let first = (0..d).map(|k| self.second_at(i, k)).collect();
        DualTower {
            value: self.first[i],
            first,
            second: vec![F::zero(); d * d],
        }
    }

    fn promoted(&self, dim: usize) -> Self {
        if self.dim() == dim {
            self.clone()
        } else {
            debug_assert_eq!(self.dim(), 0, "incompatible tower dimensions");
            DualTower {
                value: self.value,
                first: vec![F::zero(); dim],
                second: vec![F::zero(); dim * dim],
            }
        }
    }

    fn unified(a: &Self, b: &Self) -> (Self, Self) {
        match (a.dim(), b.dim()) {
            (x, y) if x == y => (a.clone(), b.clone()),
            (0, y) => (a.promoted(y), b.clone()),
            (x, 0) => (a.clone(), b.promoted(x)),
            (x, y) => panic!("tower dimension mismatch: {x} vs {y}"),
        }
    }

    /// Applies a scalar function with known derivatives: `v = phi(value)`,
    /// `d1 = phi'(value)`, `d2 = phi''(value)`.
    fn chain(&self, v: F, d1: F, d2: F) -> Self {
        let d = self.dim();
        let first: Vec<F> = self.first.iter().map(|&g| d1 * g).collect();
        let mut second = vec![F::zero(); d * d];
        for i in 0..d {
            for j in i..d {
                let s = d1 * self.second[i * d + j] + d2 * self.first[i] * self.first[j];
                second[i * d + j] = s;
                second[j * d + i] = s;
            }
        }
        DualTower {
            value: v,
            first,
            second,
        }
    }

    fn add_impl(a: &Self, b: &Self) -> Self {
        let (a, b) = Self::unified(a, b);
        let d = a.dim();
        let mut out = a.clone();
        out.value = a.value + b.value;
        for i in 0..d {
            out.first[i] = a.first[i] + b.first[i];
        }
        for k in 0..d * d {
            out.second[k] = a.second[k] + b.second[k];
        }
        out
    }

    fn sub_impl(a: &Self, b: &Self) -> Self {
        let (a, b) = Self::unified(a, b);
        let d = a.dim();
        let mut out = a.clone();
        out.value = a.value - b.value;
        for i in 0..d {
            out.first[i] = a.first[i] - b.first[i];
        }
        for k in 0..d * d {
            out.second[k] = a.second[k] - b.second[k];
        }
        out
    }

    fn mul_impl(a: &Self, b: &Self) -> Self {
        let (a, b) = Self::unified(a, b);
        let d = a.dim();
        let mut first = vec![F::zero(); d];
        for i in 0..d {
            first[i] = a.value * b.first[i] + b.value * a.first[i];
        }
        let mut second = vec![F::zero(); d * d];
        for i in 0..d {
            for j in i..d {
                let s = a.value * b.second[i * d + j]
                    + a.first[i] * b.first[j]
                    + a.first[j] * b.first[i]
                    + b.value * a.second[i * d + j];
                second[i * d + j] = s;
                second[j * d + i] = s;
            }
        }
        DualTower {
            value: a.value * b.value,
            first,
            second,
        }
    }

    fn div_impl(a: &Self, b: &Self) -> Self {
        let (a, b) = Self::unified(a, b);
        let d = a.dim();
        let c = a.value / b.value;
        let mut first = vec![F::zero(); d];
        for i in 0..d {
            first[i] = (a.first[i] - c * b.first[i]) / b.value;
        }
        let mut second = vec![F::zero(); d * d];
        for i in 0..d {
            for j in i..d {
                let s = (a.second[i * d + j]
                    - first[i] * b.first[j]
                    - first[j] * b.first[i]
                    - c * b.second[i * d + j])
                    / b.value;
                second[i * d + j] = s;
                second[j * d + i] = s;
            }
        }
        DualTower {
            value: c,
            first,
            second,
        }
    }

    pub fn exp(&self) -> Self {
        let v = self.value.exp();
        self.chain(v, v, v)
    }

    pub fn ln(&self) -> Self {
        let inv = self.value.recip();
        self.chain(self.value.ln(), inv, -inv * inv)
    }

    pub fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        let d1 = (F::of(2.0) * s).recip();
        let d2 = -d1 / (F::of(2.0) * self.value);
        self.chain(s, d1, d2)
    }

    pub fn recip(&self) -> Self {
        let inv = self.value.recip();
        self.chain(inv, -inv * inv, F::of(2.0) * inv * inv * inv)
    }

    pub fn powi(&self, n: i32) -> Self {
        let v = self.value.powi(n);
        let d1 = F::of(n as f64) * self.value.powi(n - 1);
        let d2 = F::of((n as f64) * (n as f64 - 1.0)) * self.value.powi(n - 2);
        self.chain(v, d1, d2)
    }

    pub fn powf(&self, p: F) -> Self {
        let v = self.value.powf(p);
        let d1 = p * self.value.powf(p - F::one());
        let d2 = p * (p - F::one()) * self.value.powf(p - F::of(2.0));
        self.chain(v, d1, d2)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = (self.value.sin(), self.value.cos());
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = (self.value.sin(), self.value.cos());
        self.chain(c, -s, -c)
    }

    pub fn tan(&self) -> Self {
        let t = self.value.tan();
        let sec2 = F::one() + t * t;
        self.chain(t, sec2, F::of(2.0) * t * sec2)
    }

    /// Absolute value; away from zero the derivative is the sign of the
    /// value. At exactly zero the positive branch is taken.
    pub fn abs(&self) -> Self {
        let s = if self.value < F::zero() {
            -F::one()
        } else {
            F::one()
        };
        self.chain(self.value.abs(), s, F::zero())
    }

    /// Scales by a plain scalar.
    pub fn scale(&self, c: F) -> Self {
        self.chain(self.value * c, c, F::zero())
    }
}

macro_rules! tower_binop {
    ($trait:ident, $method:ident, $impl_fn:ident) => {
        impl<F: Real> $trait for DualTower<F> {
            type Output = DualTower<F>;
            fn $method(self, rhs: DualTower<F>) -> DualTower<F> {
                DualTower::$impl_fn(&self, &rhs)
            }
        }
        impl<F: Real> $trait<&DualTower<F>> for DualTower<F> {
            type Output = DualTower<F>;
            fn $method(self, rhs: &DualTower<F>) -> DualTower<F> {
                DualTower::$impl_fn(&self, rhs)
            }
        }
        impl<F: Real> $trait<DualTower<F>> for &DualTower<F> {
            type Output = DualTower<F>;
            fn $method(self, rhs: DualTower<F>) -> DualTower<F> {
                DualTower::$impl_fn(self, &rhs)
            }
        }
        impl<F: Real> $trait<&DualTower<F>> for &DualTower<F> {
            type Output = DualTower<F>;
            fn $method(self, rhs: &DualTower<F>) -> DualTower<F> {
                DualTower::$impl_fn(self, rhs)
            }
        }
    };
}

tower_binop!(Add, add, add_impl);
tower_binop!(Sub, sub, sub_impl);
tower_binop!(Mul, mul, mul_impl);
tower_binop!(Div, div, div_impl);

macro_rules! tower_scalar_op {
    ($trait:ident, $method:ident, |$s:ident, $c:ident| $body:expr) => {
        impl<F: Real> $trait<F> for DualTower<F> {
            type Output = DualTower<F>;
            fn $method(self, $c: F) -> DualTower<F> {
                let $s = &self;
                $body
            }
        }
        impl<F: Real> $trait<F> for &DualTower<F> {
            type Output = DualTower<F>;
            fn $method(self, $c: F) -> DualTower<F> {
                let $s = self;
                $body
            }
        }
    };
}

tower_scalar_op!(Add, add, |s, c| s.chain(s.value + c, F::one(), F::zero()));
tower_scalar_op!(Sub, sub, |s, c| s.chain(s.value - c, F::one(), F::zero()));
tower_scalar_op!(Mul, mul, |s, c| s.scale(c));
tower_scalar_op!(Div, div, |s, c| s.scale(c.recip()));

impl<F: Real> Neg for DualTower<F> {
    type Output = DualTower<F>;
    fn neg(self) -> DualTower<F> {
        self.chain(-self.value, -F::one(), F::zero())
    }
}

impl<F: Real> Neg for &DualTower<F> {
    type Output = DualTower<F>;
    fn neg(self) -> DualTower<F> {
        self.chain(-self.value, -F::one(), F::zero())
    }
}

impl<F: Real> Zero for DualTower<F> {
    fn zero() -> Self {
        DualTower::constant(F::zero())
    }
    fn is_zero(&self) -> bool {
        self.value.is_zero()
            && self.first.iter().all(|v| v.is_zero())
            && self.second.iter().all(|v| v.is_zero())
    }
}

impl<F: Real> One for DualTower<F> {
    fn one() -> Self {
        DualTower::constant(F::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type T = DualTower<f64>;

    fn vars2(x: f64, y: f64) -> (T, T) {
        (T::seeded(x, 0, 2), T::seeded(y, 1, 2))
    }

    #[test]
    fn product_rule_matches_hand_expansion() {
        let (x, y) = vars2(1.3, -0.4);
        let p = &x * &y;
        assert_eq!(p.value(), 1.3 * -0.4);
        assert_eq!(p.first_at(0), -0.4);
        assert_eq!(p.first_at(1), 1.3);
        assert_eq!(p.second_at(0, 1), 1.0);
        assert_eq!(p.second_at(1, 0), 1.0);
        assert_eq!(p.second_at(0, 0), 0.0);
    }

    #[test]
    fn chain_rule_exp_of_linear() {
        let (x, y) = vars2(0.0, 0.0);
        let f = (&x + (&y * 2.0)).exp();
        assert!((f.value() - 1.0).abs() < 1e-15);
        assert!((f.first_at(0) - 1.0).abs() < 1e-15);
        assert!((f.first_at(1) - 2.0).abs() < 1e-15);
        assert!((f.second_at(0, 1) - 2.0).abs() < 1e-15);
        assert!((f.second_at(1, 1) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn division_and_log_against_finite_differences() {
        let f = |x: f64, y: f64| ((x * x + 2.0) / (y + 3.0)).ln();
        let eval = |x: f64, y: f64| {
            let (tx, ty) = vars2(x, y);
            ((&tx * &tx + 2.0) / (&ty + 3.0)).ln()
        };
        let (x0, y0) = (0.7, -0.2);
        let t = eval(x0, y0);
        let h = 1e-5;
        let gx = (f(x0 + h, y0) - f(x0 - h, y0)) / (2.0 * h);
        let gy = (f(x0, y0 + h) - f(x0, y0 - h)) / (2.0 * h);
        assert!((t.first_at(0) - gx).abs() <= 1e-6 * gx.abs().max(1.0));
        assert!((t.first_at(1) - gy).abs() <= 1e-6 * gy.abs().max(1.0));
        let hxx = (f(x0 + h, y0) - 2.0 * f(x0, y0) + f(x0 - h, y0)) / (h * h);
        let hxy = (f(x0 + h, y0 + h) - f(x0 + h, y0 - h) - f(x0 - h, y0 + h)
            + f(x0 - h, y0 - h))
            / (4.0 * h * h);
        assert!((t.second_at(0, 0) - hxx).abs() <= 1e-5 * hxx.abs().max(1.0));
        assert!((t.second_at(0, 1) - hxy).abs() <= 1e-5 * hxy.abs().max(1.0));
    }

    #[test]
    fn hessian_is_bit_exact_symmetric() {
        let (x, y) = vars2(0.9, 1.7);
        let f = ((&x * &y).sin() + (&x / &y).exp()).powi(3);
        for i in 0..2 {
            for j in 0..2 {
                assert!(f.second_at(i, j).to_bits() == f.second_at(j, i).to_bits());
            }
        }
    }

    #[test]
    fn constants_broadcast() {
        let x = T::seeded(2.0, 0, 1);
        let c = T::constant(3.0);
        let s = &c * &x + &c;
        assert_eq!(s.value(), 9.0);
        assert_eq!(s.first_at(0), 3.0);
    }

    #[test]
    fn derivative_jet_shifts_orders() {
        let (x, y) = vars2(0.5, 1.5);
        let f = &x * &x * &y; // f = x^2 y
        let fx = f.derivative_jet(0); // 2xy
        assert!((fx.value() - 2.0 * 0.5 * 1.5).abs() < 1e-15);
        assert!((fx.first_at(0) - 2.0 * 1.5).abs() < 1e-15);
        assert!((fx.first_at(1) - 2.0 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_finite_detected() {
        let x = T::seeded(-1.0, 0, 1);
        let f = x.ln();
        assert!(!f.all_finite());
    }
}
