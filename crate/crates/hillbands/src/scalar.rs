//! Scalar abstraction shared by the numerical kernels.
//!
//! The potential, quadrature, integrator, fundamental-solution and Lyapunov
//! layers are written against [`Real`] so they run in `f32` or `f64`. The
//! spectral layers built on top of them are `f64` only: their tolerances are
//! double-precision quantities.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar usable by the generic kernels.
pub trait Real:
    Float + FloatConst + FromPrimitive + Default + Debug + Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Lossless-enough conversion of an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Real scalar promoted to a complex number.
#[inline]
pub fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// `i`.
#[inline]
pub fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}
