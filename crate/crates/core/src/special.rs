//! Standard-normal and Gamma-function helpers, evaluated in `f64`.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma as statrs_ln_gamma};

use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal survival function `1 - Φ(x)`, accurate in the upper tail.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile `Φ⁻¹(p)` for `p ∈ (0, 1)`.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("special", "normal quantile", format!("p = {p} not in (0,1)")));
    }
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // one Newton step against the CDF tightens the tails
    let err = if x > 0.0 { (1.0 - p) - norm_sf(x) } else { norm_cdf(x) - p };
    let pdf = norm_pdf(x);
    if pdf > 0.0 && err.is_finite() {
        let step = if x > 0.0 { -err / pdf } else { err / pdf };
        Ok(x - step)
    } else {
        Ok(x)
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs_ln_gamma(x)
}

/// ln((n-1)!) for integer n >= 1.
pub fn ln_factorial_minus_one(n: usize) -> f64 {
    ln_gamma(n as f64)
}

/// P(χ²_k ≤ x).
pub fn chi2_cdf(k: usize, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(0.5 * k as f64, 0.5 * x)
    }
}

/// P(χ²_k > x).
pub fn chi2_sf(k: usize, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(0.5 * k as f64, 0.5 * x)
    }
}
