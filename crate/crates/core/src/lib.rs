//! # mixrate
//!
//! Estimation of finite mixing distributions under the Wasserstein-1 loss.
//!
//! The crate covers:
//!
//! - component families with exact theta-derivatives ([`family`]),
//! - mixing distributions, the exact 1-D transportation distance and
//!   witness lower bounds from a coarse-graining tree ([`mixing`]),
//! - truncated Hankel moment problems, moment-matched adversarial pairs and
//!   the locally asymptotically normal family `G_n(u)` ([`moments`]),
//! - the sup-norm minimum-distance estimator and its order selection rule
//!   ([`estimate`]),
//! - numerical checks of identifiability, moment-map Jacobians, smoothness
//!   integrals, the DKW inequality and LAN ([`verify`]),
//! - seeded Monte Carlo rate experiments ([`bench`]).
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the estimation and
//! simulation layers use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod estimate;
pub mod family;
pub mod linalg;
pub mod mixing;
pub mod moments;
pub mod rng;
pub mod sample;
pub mod scalar;
pub mod verify;

pub use error::{MixError, Result};
pub use family::{ComponentFamily, FamilySpec, GaussianLocation, ParamDomain};
pub use mixing::{MixingDistribution, SignedAtomMeasure};
pub use moments::MomentSequence;
pub use sample::EmpiricalSample;
pub use scalar::Scalar;

#[cfg(feature = "cauchy")]
pub use family::CauchyLocation;

/// Default upper bound on the number of mixture components.
pub const DEFAULT_M_MAX: usize = 6;

pub type Mixing = MixingDistribution<f64>;
pub type Mixing32 = MixingDistribution<f32>;
pub type SignedMeasure = SignedAtomMeasure<f64>;
pub type SignedMeasure32 = SignedAtomMeasure<f32>;
pub type Moments = MomentSequence<f64>;
pub type Moments32 = MomentSequence<f32>;
pub type Gaussian = GaussianLocation<f64>;
pub type Gaussian32 = GaussianLocation<f32>;
pub type Sample = EmpiricalSample<f64>;
pub type Domain = ParamDomain<f64>;
