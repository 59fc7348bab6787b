//! The floating-point abstraction the numeric core is written against.
//!
//! Everything in [`crate::family`], [`crate::mixing`], [`crate::moments`] and
//! [`crate::linalg`] is generic over [`Scalar`], which is implemented for
//! `f32` and `f64`. The estimation and simulation layers are pinned to `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

/// Real scalar usable by the generic numeric core.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Tolerance on `|sum of weights - 1|` for a probability vector.
    fn weight_tol() -> Self;

    /// Atoms closer than this are merged during canonicalization.
    fn merge_tol() -> Self;

    /// Signed weights at or below this magnitude are treated as zero.
    fn zero_mass_tol() -> Self;

    /// Complementary error function.
    fn erfc(self) -> Self;

    /// One draw from the standard normal distribution.
    fn standard_normal(rng: &mut dyn RngCore) -> Self;

    /// One draw from the uniform distribution on `[0, 1)`.
    fn unit_uniform(rng: &mut dyn RngCore) -> Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn weight_tol() -> Self {
        1e-12
    }

    fn merge_tol() -> Self {
        1e-12
    }

    fn zero_mass_tol() -> Self {
        1e-15
    }

    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }

    #[inline]
    fn standard_normal(rng: &mut dyn RngCore) -> Self {
        StandardNormal.sample(rng)
    }

    #[inline]
    fn unit_uniform(rng: &mut dyn RngCore) -> Self {
        rand::Rng::gen::<f64>(rng)
    }
}

impl Scalar for f32 {
    fn weight_tol() -> Self {
        1e-5
    }

    fn merge_tol() -> Self {
        1e-6
    }

    fn zero_mass_tol() -> Self {
        1e-7
    }

    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }

    #[inline]
    fn standard_normal(rng: &mut dyn RngCore) -> Self {
        StandardNormal.sample(rng)
    }

    #[inline]
    fn unit_uniform(rng: &mut dyn RngCore) -> Self {
        rand::Rng::gen::<f32>(rng)
    }
}

/// Standard normal density.
#[inline]
pub fn normal_pdf<T: Scalar>(z: T) -> T {
    let inv_sqrt_2pi = T::FRAC_1_SQRT_2() * T::FRAC_2_SQRT_PI() * T::lit(0.5);
    inv_sqrt_2pi * (-(z * z) * T::lit(0.5)).exp()
}

/// Standard normal CDF, accurate in both tails.
#[inline]
pub fn normal_cdf<T: Scalar>(z: T) -> T {
    T::lit(0.5) * (-z * T::FRAC_1_SQRT_2()).erfc()
}

/// Kahan-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum<T> {
    sum: T,
    carry: T,
}

impl<T: Scalar> KahanSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, v: T) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum
    }
}
