//! Unadjusted Langevin sampling with explicit, non-asymptotic total-variation bounds.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix `f64`.

pub mod certifier;
pub mod coupling;
pub mod error;
pub mod oracle;
pub mod potentials;
pub mod sampler;
pub mod scalar;
pub mod schedule;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Builtin64 = potentials::BuiltinPotential<f64>;
pub type Certificate64 = potentials::ClassCertificate<f64>;
pub type Family64 = potentials::Family<f64>;
pub type Schedule64 = schedule::StepSchedule<f64>;
pub type Route64 = certifier::Route<f64>;
pub type Certifier64<'m> = certifier::TvCertifier<'m, f64>;
pub type Plan64 = certifier::Plan<f64>;
pub type Gaussian64 = oracle::GaussianDist<f64>;
pub type Ensemble64<'m> = sampler::ChainEnsemble<'m, f64>;
