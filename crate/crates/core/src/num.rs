//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the physics and quadrature code is written against.
///
/// Implemented for `f32` and `f64`. Production sweeps use `f64`; the `f32`
/// instantiation is useful for quick exploratory runs where round-off of
/// order `1e-7` is acceptable.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Send + Sync + Debug + Display + Default + 'static
{
    /// Euler gamma function.
    fn gamma(self) -> Self;
}

impl Real for f32 {
    #[inline]
    fn gamma(self) -> Self {
        libm::tgammaf(self)
    }
}

impl Real for f64 {
    #[inline]
    fn gamma(self) -> Self {
        libm::tgamma(self)
    }
}

/// Converts an `f64` literal into the working scalar.
#[inline(always)]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

#[inline(always)]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Two-component transverse vector.
pub type Vec2<T> = [T; 2];

#[inline(always)]
pub fn dot<T: Real>(a: Vec2<T>, b: Vec2<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline(always)]
pub fn norm_sq<T: Real>(a: Vec2<T>) -> T {
    dot(a, a)
}

#[inline(always)]
pub fn norm<T: Real>(a: Vec2<T>) -> T {
    a[0].hypot(a[1])
}

#[inline(always)]
pub fn axpy<T: Real>(alpha: T, x: Vec2<T>, y: Vec2<T>) -> Vec2<T> {
    [alpha * x[0] + y[0], alpha * x[1] + y[1]]
}

#[inline(always)]
pub fn scale<T: Real>(alpha: T, x: Vec2<T>) -> Vec2<T> {
    [alpha * x[0], alpha * x[1]]
}

/// Rotates `v` by `angle` (counter-clockwise).
#[inline]
pub fn rotate<T: Real>(v: Vec2<T>, angle: T) -> Vec2<T> {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}
