// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All physics code is written against [`Real`], which is implemented for
//! `f32` and `f64`. Linear algebra goes through nalgebra, so the bound is
//! `RealField`; conversions from literals use num-traits.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use nalgebra::{Complex, DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Sum + Display + Debug + LowerExp + Default {
    /// Converts an `f64` literal. Never fails for the provided impls.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    /// Machine epsilon of the type.
    fn eps() -> Self;

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    #[inline]
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    #[inline]
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Dense complex matrix over a real scalar `T`.
pub type CMatrix<T> = DMatrix<Complex<T>>;
/// Dense complex column vector over a real scalar `T`.
pub type CVector<T> = DVector<Complex<T>>;

/// `e^{i theta}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

/// `e^{re} * e^{i im}` without going through `Complex::exp` (which needs `num_traits::Float`).
#[inline]
pub fn exp_polar<T: Real>(re: T, im: T) -> Complex<T> {
    cis(im) * re.exp()
}

#[inline]
pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn creal<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub(crate) fn norm_sqr<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// `max(base, 64 eps)`: a fixed tolerance that degrades gracefully for `f32`.
#[inline]
pub(crate) fn tolerance<T: Real>(base: f64) -> T {
    T::lit(base).max(T::eps() * T::lit(64.0))
}

/// Largest element of a slice, `-inf` when empty.
pub(crate) fn max_of<T: Real>(xs: impl IntoIterator<Item = T>) -> T {
    xs.into_iter().fold(T::lit(f64::NEG_INFINITY), |a, b| if b > a { b } else { a })
}

/// Pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        let mut acc = T::zero();
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Maximum absolute entry of `a - a^dagger`.
pub fn hermiticity_defect<T: Real>(a: &CMatrix<T>) -> T {
    let n = a.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            let d = a[(i, j)] - a[(j, i)].conj();
            let m = norm_sqr(d).sqrt();
            if m > worst {
                worst = m;
            }
        }
    }
    worst
}

/// Max-norm of a complex matrix.
pub fn max_abs<T: Real>(a: &CMatrix<T>) -> T {
    a.iter().fold(T::zero(), |m, z| {
        let v = norm_sqr(*z).sqrt();
        if v > m {
            v
        } else {
            m
        }
    })
}
