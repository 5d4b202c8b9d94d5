//! Forward-mode automatic differentiation.
//!
//! [`Dual`] carries one directional derivative. Nesting `Dual<Dual<f64>>`
//! (and one level deeper) gives mixed second and third partials, which is
//! all the residual operators of this crate need: a prolonged Lagrangian
//! consumes one order and its Euler-Lagrange residual two more.
//!
//! Every helper seeds one direction per pass; there is no vector-mode
//! batching, so results are reproducible bit for bit.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use nalgebra::DMatrix;

/// A real-like number that user Lagrangians, forces and sections are
/// written against. Implemented for `f64` and for [`Dual`] of any scalar.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// Embeds a constant (all derivative parts zero).
    fn cst(v: f64) -> Self;
    /// The underlying real value, with every derivative part dropped.
    fn value(self) -> f64;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn one() -> Self {
        Self::cst(1.0)
    }

    fn tanh(self) -> Self {
        let e2 = (self * 2.0).exp();
        (e2 - 1.0) / (e2 + 1.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
}

/// `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    #[inline]
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    #[inline]
    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::zero() }
    }

    #[inline]
    pub fn variable(re: T) -> Self {
        Dual { re, eps: T::one() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = T::one() / o.re;
        let r = self.re * inv;
        Dual::new(r, (self.eps - r * o.eps) * inv)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: f64) -> Self {
        Dual::new(self.re + o, self.eps)
    }
}

impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: f64) -> Self {
        Dual::new(self.re - o, self.eps)
    }
}

impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        Dual::new(self.re * o, self.eps * o)
    }
}

impl<T: Scalar> Div<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        Dual::new(self.re / o, self.eps / o)
    }
}

impl<T: Scalar> AddAssign for Dual<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> SubAssign for Dual<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar> MulAssign for Dual<T> {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual::constant(T::cst(v))
    }
    #[inline]
    fn value(self) -> f64 {
        self.re.value()
    }
    #[inline]
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.eps * self.re.cos())
    }
    #[inline]
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.eps * self.re.sin()))
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }
    #[inline]
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, self.eps / (s * 2.0))
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::one(),
            1 => self,
            _ => Dual::new(self.re.powi(n), self.eps * self.re.powi(n - 1) * f64::from(n)),
        }
    }
}

/// First-order dual of `T` seeded along `dir`.
#[inline]
pub fn seed<T: Scalar>(p: &[T], dir: &[T]) -> Vec<Dual<T>> {
    p.iter().zip(dir).map(|(&v, &d)| Dual::new(v, d)).collect()
}

/// `∇f(p)`, one pass per coordinate. Generic over the base scalar so it can
/// be called from inside another differentiation.
pub fn gradient<T, F>(f: F, p: &[T]) -> Vec<T>
where
    T: Scalar,
    F: Fn(&[Dual<T>]) -> Dual<T>,
{
    let mut u: Vec<Dual<T>> = p.iter().map(|&v| Dual::constant(v)).collect();
    let mut out = Vec::with_capacity(p.len());
    for a in 0..p.len() {
        u[a].eps = T::one();
        out.push(f(&u).eps);
        u[a].eps = T::zero();
    }
    out
}

/// `Df(p)[dir]` in a single pass.
pub fn directional_derivative<T, F>(f: F, p: &[T], dir: &[T]) -> T
where
    T: Scalar,
    F: Fn(&[Dual<T>]) -> Dual<T>,
{
    f(&seed(p, dir)).eps
}

/// `D²f(p)[d1, d2]` in a single nested pass.
pub fn second_directional<T, F>(f: F, p: &[T], d1: &[T], d2: &[T]) -> T
where
    T: Scalar,
    F: Fn(&[Dual<Dual<T>>]) -> Dual<Dual<T>>,
{
    let u: Vec<Dual<Dual<T>>> =
        p.iter().zip(d1).zip(d2).map(|((&v, &a), &b)| Dual::new(Dual::new(v, b), Dual::constant(a))).collect();
    f(&u).eps.eps
}

/// Full Hessian, every entry from its own nested pass (no symmetrization).
pub fn hessian<F>(f: F, p: &[f64]) -> DMatrix<f64>
where
    F: Fn(&[Dual<Dual<f64>>]) -> Dual<Dual<f64>>,
{
    let m = p.len();
    let mut u: Vec<Dual<Dual<f64>>> = p.iter().map(|&v| Dual::constant(Dual::constant(v))).collect();
    DMatrix::from_fn(m, m, |a, b| {
        u[a].eps.re = 1.0;
        u[b].re.eps = 1.0;
        let h = f(&u).eps.eps;
        u[a].eps.re = 0.0;
        u[b].re.eps = 0.0;
        h
    })
}

/// `D³f(p)[·, ·, dir]`: the derivative of the Hessian along `dir`, using
/// a third nesting level seeded with `dir`.
pub fn directional_derivative_of_hessian<F>(f: F, p: &[f64], dir: &[f64]) -> DMatrix<f64>
where
    F: Fn(&[Dual<Dual<Dual<f64>>>]) -> Dual<Dual<Dual<f64>>>,
{
    let m = p.len();
    let mut u: Vec<Dual<Dual<Dual<f64>>>> =
        p.iter().zip(dir).map(|(&v, &d)| Dual::new(Dual::constant(Dual::constant(v)), Dual::cst(d))).collect();
    DMatrix::from_fn(m, m, |a, b| {
        u[a].re.eps.re = 1.0;
        u[b].re.re.eps = 1.0;
        let t = f(&u).eps.eps.eps;
        u[a].re.eps.re = 0.0;
        u[b].re.re.eps = 0.0;
        t
    })
}

/// The `a`-th standard basis vector of length `m`.
pub fn basis(m: usize, a: usize) -> Vec<f64> {
    let mut e = vec![0.0; m];
    e[a] = 1.0;
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(f: impl Fn(&[f64]) -> f64, p: &[f64], h: f64) -> Vec<f64> {
        (0..p.len())
            .map(|a| {
                let mut pp = p.to_vec();
                let mut pm = p.to_vec();
                pp[a] += h;
                pm[a] -= h;
                (f(&pp) - f(&pm)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_of_product() {
        let g = gradient(|u| u[0] * u[1], &[2.0, 3.0]);
        assert_eq!(g, vec![3.0, 2.0]);
    }

    #[test]
    fn gradient_of_quadratic() {
        let g = gradient(|u| (u[0] * u[0] - u[1] * u[1]) * 0.5, &[2.0, 3.0]);
        assert_eq!(g, vec![2.0, -3.0]);
    }

    #[test]
    fn hessian_of_product() {
        let h = hessian(|u| u[0] * u[1], &[0.7, -1.1]);
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn cubic_third_derivative() {
        let t = directional_derivative_of_hessian(|u| u[0].powi(3), &[2.0], &[1.0]);
        assert_eq!(t[(0, 0)], 6.0);
        assert_eq!(hessian(|u| u[0].powi(3), &[2.0])[(0, 0)], 12.0);
    }

    #[test]
    fn third_derivative_of_quadratic_vanishes() {
        let f = |u: &[Dual<Dual<Dual<f64>>>]| u[0] * u[1] * 3.0 - u[2] * u[2] + u[0] * u[0] * 0.5;
        let t = directional_derivative_of_hessian(f, &[0.3, 1.2, -0.4], &[1.0, -2.0, 0.5]);
        assert!(t.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn elementary_functions_match_finite_differences() {
        let p = [0.4, 1.3];
        let g = gradient(
            |u| u[0].sin() * u[1].exp() + (u[1] * u[1] + 1.0).sqrt().ln() / (u[0].cos() + 2.0) + u[0].tanh(),
            &p,
        );
        let fd = fd_gradient(
            |u| u[0].sin() * u[1].exp() + (u[1] * u[1] + 1.0).sqrt().ln() / (u[0].cos() + 2.0) + u[0].tanh(),
            &p,
            1e-6,
        );
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn second_directional_matches_hessian_contraction() {
        let f2 = |u: &[Dual<Dual<f64>>]| u[0].sin() * u[1] * u[1] + u[0] * u[1].exp();
        let p = [0.3, -0.8];
        let h = hessian(f2, &p);
        let d1 = [1.5, -0.25];
        let d2 = [0.5, 2.0];
        let direct = second_directional(f2, &p, &d1, &d2);
        let mut contracted = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                contracted += d1[a] * h[(a, b)] * d2[b];
            }
        }
        assert!((direct - contracted).abs() < 1e-13);
    }

    #[test]
    fn nonfinite_values_propagate() {
        let g = gradient(|u| u[0].ln(), &[0.0]);
        assert!(!g[0].is_finite());
    }
}
