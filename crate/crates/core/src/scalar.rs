//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn czero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn creal<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// `ln(cosh z)` evaluated without overflow for large `|Re z|`.
///
/// Uses `ln cosh z = z + ln(1 + e^{-2z}) - ln 2` on the half plane
/// `Re z >= 0` and the evenness of `cosh` elsewhere.
pub fn ln_cosh<T: Real>(z: C<T>) -> C<T> {
    let z = if z.re < T::zero() { -z } else { z };
    let two = T::of(2.0);
    let tail = (-z * two).exp();
    z + (creal::<T>(T::one()) + tail).ln() - creal(T::LN_2())
}

/// `tanh z` without the `inf/inf` of the textbook form at large `|Re z|`.
pub fn tanh<T: Real>(z: C<T>) -> C<T> {
    if z.re < T::zero() {
        return -tanh(-z);
    }
    let e = (-z * T::of(2.0)).exp();
    let one = creal::<T>(T::one());
    (one - e) / (one + e)
}

/// Sum of squared moduli.
pub fn norm_sqr<T: Real>(v: &[C<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Hermitian inner product `<a|b> = sum conj(a_i) b_i`.
pub fn dot<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter()
        .zip(b)
        .fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_cosh_matches_direct_form() {
        for &(re, im) in &[(0.3, 0.1), (-1.2, 0.7), (0.0, 0.4), (2.5, -1.3)] {
            let z = Complex::new(re, im);
            let direct = z.cosh().ln();
            let stable = ln_cosh(z);
            assert!((direct - stable).norm() < 1e-12, "{z}: {direct} vs {stable}");
        }
    }

    #[test]
    fn ln_cosh_finite_for_large_arguments() {
        let z = Complex::new(800.0_f64, 0.3);
        let v = ln_cosh(z);
        assert!(v.re.is_finite() && v.im.is_finite());
        assert!((v.re - (800.0 - std::f64::consts::LN_2)).abs() < 1e-9);
        let w = ln_cosh(Complex::new(-800.0_f64, 0.0));
        assert!((w.re - (800.0 - std::f64::consts::LN_2)).abs() < 1e-9);
    }

    #[test]
    fn tanh_matches_library_and_saturates() {
        for &(re, im) in &[(0.3, 0.1), (-1.2, 0.7), (0.0, 0.4), (2.5, -1.3)] {
            let z = Complex::new(re, im);
            assert!((tanh(z) - z.tanh()).norm() < 1e-14);
        }
        assert_eq!(tanh(Complex::new(900.0_f64, 0.2)), Complex::new(1.0, 0.0));
        assert_eq!(tanh(Complex::new(-900.0_f64, 0.2)), Complex::new(-1.0, 0.0));
    }

    #[test]
    fn ln_cosh_f32() {
        let z = Complex::new(0.5_f32, -0.25);
        assert!((ln_cosh(z) - z.cosh().ln()).norm() < 1e-6);
    }
}
