//! Explicit constants, total-variation bound curves and step-size planners.
//!
//! Constants are evaluated in `f64` (and in log space wherever a quantity can
//! overflow) whatever the scalar type of the model; results are cast back to `T`.

mod bounds;
mod diffusion;
mod drift;
mod functions;
mod plan;
mod rate;

pub use bounds::{bias_bound_b, bias_bound_b_raw, a_bound, BiasBound, BiasInputs, BoundPoint, SplitChoice, TvBoundCurve, TvCertifier};
pub use diffusion::CouplingCurve;
pub use drift::{euler_drift, DriftConstants, Lyapunov};
pub use functions::{eval_f, eval_g, eval_omega, log_f, log_g};
pub use plan::{
    fit_slope, plan_fixed_budget, plan_precision, scaling_study, DimensionFamily, FixedBudget, Plan, ScalingReport, ScalingRow,
};
pub use rate::{ergodicity_rate, ErgodicityRate, RateAux, SdeParams};

use serde::{Deserialize, Serialize};

use crate::potentials::ClassKind;

/// Where a non-formula input came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    User,
    /// Estimated by simulation; never used for soundness claims.
    MonteCarlo,
}

/// Which exponent multiplies `ω` in the reflection-route constants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaExponent {
    /// `e^{θω/4}`.
    #[default]
    Statement,
    /// `e^{4ω/θ}`.
    Proof,
}

/// How the ergodicity constants `(C, κ)` of the master bound are obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "route", rename_all = "snake_case", deny_unknown_fields)]
pub enum Route<T> {
    /// `C(δ_x Q^n) = C_{1/2}·F(λ, Γ_{1,n}, c, γ₁, V(x))`, `κ = e^{−υ}`, with constants from elsewhere.
    UserSupplied { c_half: T, upsilon: T },
    Poincare,
    Bobkov { variance: T, provenance: Provenance },
    ReflectionConvex {
        #[serde(default)]
        omega_exponent: OmegaExponent,
    },
    StrongConvex,
    LogSobolev,
    /// Rates of a generic diffusion under a drift condition; no discrete-chain `C` exists for it.
    GenericSde { params: SdeParams<T> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteKind {
    UserSupplied,
    Poincare,
    Bobkov,
    ReflectionConvex,
    StrongConvex,
    LogSobolev,
    GenericSde,
}

impl<T> Route<T> {
    pub fn kind(&self) -> RouteKind {
        match self {
            Route::UserSupplied { .. } => RouteKind::UserSupplied,
            Route::Poincare => RouteKind::Poincare,
            Route::Bobkov { .. } => RouteKind::Bobkov,
            Route::ReflectionConvex { .. } => RouteKind::ReflectionConvex,
            Route::StrongConvex => RouteKind::StrongConvex,
            Route::LogSobolev => RouteKind::LogSobolev,
            Route::GenericSde { .. } => RouteKind::GenericSde,
        }
    }
}

impl RouteKind {
    /// Certificate classes the route can be built from.
    pub fn accepts(self, class: ClassKind) -> bool {
        use ClassKind::*;
        match self {
            RouteKind::UserSupplied => class != PerturbedStronglyConvex,
            RouteKind::Poincare => class == Superexponential,
            RouteKind::Bobkov | RouteKind::ReflectionConvex => class == LogConcave,
            RouteKind::StrongConvex => class == StronglyConvexOutsideBall,
            RouteKind::LogSobolev => class == PerturbedStronglyConvex,
            RouteKind::GenericSde => true,
        }
    }
}
