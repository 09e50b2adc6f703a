use serde::{Deserialize, Serialize};

use super::functions::omega;
use super::{OmegaExponent, Provenance, Route, RouteKind};
use crate::error::{Error, Result};
use crate::potentials::{ClassCertificate, Potential};
use crate::scalar::{log_add_exp, Scalar};

/// Inputs of the generic diffusion rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum SdeParams<T> {
    /// Drift condition `AV ≤ −θV + β1_Θ` with `Θ ⊂ {‖x−y‖ ≤ R}` and excess `δ`.
    Drift { theta: T, beta: T, delta: T, r: T, epsilon: T },
    /// Drift `b` contracting with modulus `m̃` outside the ball of radius `M_s`.
    Strong { m_tilde: T, m_s: T, epsilon: T },
}

/// `κ` together with every route-specific intermediate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErgodicityRate<T> {
    pub route: RouteKind,
    pub kappa: T,
    pub log_kappa: T,
    pub aux: RateAux<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "route", rename_all = "snake_case")]
pub enum RateAux<T> {
    UserSupplied { c_half: T, upsilon: T },
    Poincare { theta: T, log_beta: T, k: T, osc: T },
    Bobkov { variance: T, provenance: Provenance },
    ReflectionConvex {
        theta: T,
        log_beta: T,
        k: T,
        /// `ln ϖ`; the chain's second tail is `ϖ^Γ`.
        log_varpi: T,
        delta: T,
        r: T,
        omega: T,
        /// `θω/4` or `4ω/θ`, depending on `omega_exponent`.
        omega_term: T,
        omega_exponent: OmegaExponent,
    },
    StrongConvex { m: T, m_s: T, m_tilde: T, omega: T },
    LogSobolev { m: T, l1: T, varpi: T, osc_u2: T, c_ls: T },
    GenericSde { theta_tilde: T, log_k: T, epsilon: T, delta: T, r: T, omega: T },
    GenericSdeStrong { m_tilde: T, big_m: T, log_d: T, epsilon: T, omega: T },
}

pub(crate) struct Reflection {
    pub theta: f64,
    pub log_beta: f64,
    pub k: f64,
    pub r: f64,
    pub omega: f64,
    pub omega_term: f64,
    pub log_varpi: f64,
}

pub(crate) fn reflection_constants(eta: f64, m_eta: f64, d: f64, exponent: OmegaExponent) -> Result<Reflection> {
    let theta = eta * eta / 8.0;
    let k = 1f64.max(m_eta).max(4.0 * d / eta);
    let s = (k * k + 1.0).sqrt();
    let log_beta = ((eta / 4.0) * ((eta / 4.0) * k + d)).ln() + (eta * s / 4.0 - s.ln()).max(0.0);
    let r = (8.0 / eta) * (4f64.ln() + log_beta - theta.ln());
    let om = omega(0.5, r)?;
    let omega_term = match exponent {
        OmegaExponent::Statement => theta * om / 4.0,
        OmegaExponent::Proof => 4.0 * om / theta,
    };
    let denom = log_beta - theta.ln() + log_add_exp(3f64.ln(), 4f64.ln() + omega_term) + std::f64::consts::LN_2;
    let log_varpi = -std::f64::consts::LN_2 * (theta / 4.0) / denom;
    Ok(Reflection { theta, log_beta, k, r, omega: om, omega_term, log_varpi })
}

pub(crate) fn strong_log_kappa(m: f64, m_s: f64) -> Result<(f64, f64, f64)> {
    let mt = 1f64.max(m_s);
    let om = omega(0.5, mt)?;
    let ln2 = std::f64::consts::LN_2;
    let lk = -(m / 2.0) * ln2 / (log_add_exp(0.0, m * om / 4.0) + mt.ln_1p() + ln2);
    Ok((lk, mt, om))
}

/// `ln κ` of the generic drift-condition theorem, with `θ̃` and `ln K(ε)`.
pub(crate) fn sde_drift_rate(theta: f64, beta: f64, delta: f64, r: f64, eps: f64) -> Result<(f64, f64, f64, f64)> {
    if !(theta > 0.0 && beta > 0.0 && delta > 0.0) {
        return Err(Error::domain("certifier", "generic diffusion rate", "theta, beta, delta must be positive"));
    }
    let tt = theta * theta * delta / (2.0 * beta + theta * delta);
    let om = omega(eps, r)?;
    let log_k = log_add_exp(beta.ln() - tt.ln() + log_add_exp(0.0, tt * om), (delta / 2.0).ln());
    let l1e = (-eps).ln_1p();
    Ok(((tt / 2.0) * l1e / (log_k - l1e), tt, log_k, om))
}

/// `ln κ` of the generic strongly-contracting theorem, with `M̃` and `ln D(ε)`.
pub(crate) fn sde_strong_rate(m_tilde: f64, m_s: f64, eps: f64) -> Result<(f64, f64, f64, f64)> {
    if !(m_tilde > 0.0) {
        return Err(Error::domain("certifier", "generic diffusion rate", "m_tilde must be positive"));
    }
    let big_m = 1f64.max(m_s);
    let om = omega(eps, big_m)?;
    let log_d = log_add_exp(0.0, m_tilde * om / 2.0) + big_m.ln_1p();
    let l1e = (-eps).ln_1p();
    Ok(((m_tilde / 2.0) * l1e / (log_d - l1e), big_m, log_d, om))
}

fn mismatch<T>(route: &Route<T>, cert: &ClassCertificate<T>) -> Error
where
    T: Scalar,
{
    Error::config(
        "certifier",
        format!("route {:?} cannot be built from a {:?} certificate", route.kind(), cert.kind()),
    )
}

/// Exponential rate `κ` of the diffusion semigroup (or chain) for a route.
pub fn ergodicity_rate<T: Scalar>(
    route: &Route<T>,
    model: &dyn Potential<T>,
    cert: &ClassCertificate<T>,
) -> Result<ErgodicityRate<T>> {
    if !route.kind().accepts(cert.kind()) {
        return Err(mismatch(route, cert));
    }
    cert.validate(model.dim())?;
    let d = model.dim() as f64;
    let l = model.lipschitz().as_f64();
    let t = T::lit;
    let (log_kappa, aux) = match (route, cert) {
        (Route::UserSupplied { c_half, upsilon }, _) => {
            if !(c_half.as_f64() > 0.0 && upsilon.as_f64() > 0.0) {
                return Err(Error::config("certifier", "user-supplied C_1/2 and upsilon must be positive"));
            }
            (-upsilon.as_f64(), RateAux::UserSupplied { c_half: *c_half, upsilon: *upsilon })
        }
        (Route::Poincare, ClassCertificate::Superexponential { rho, alpha, m_rho }) => {
            let (rho, alpha, m_rho) = (rho.as_f64(), alpha.as_f64(), m_rho.as_f64());
            let theta = d * l / 2.0;
            let k = (4.0 * d * l / rho).powf(1.0 / (2.0 * (alpha - 1.0))).max(m_rho);
            let log_beta = (d * l / 2.0).ln() + l * k * k / 4.0;
            let osc = l * k * k / 2.0;
            let pi = std::f64::consts::PI;
            let big = 4f64.ln() + log_beta + 2.0 * k.ln() - 2.0 * pi.ln() + osc;
            let lk = -(theta.ln() - log_add_exp(0.0, big)).exp();
            (lk, RateAux::Poincare { theta: t(theta), log_beta: t(log_beta), k: t(k), osc: t(osc) })
        }
        (Route::Bobkov { variance, provenance }, _) => {
            let v = variance.as_f64();
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config("certifier", format!("variance integral {v} must be positive")));
            }
            (-1.0 / (432.0 * v), RateAux::Bobkov { variance: *variance, provenance: *provenance })
        }
        (Route::ReflectionConvex { omega_exponent }, ClassCertificate::LogConcave { eta, m_eta }) => {
            let rc = reflection_constants(eta.as_f64(), m_eta.as_f64(), d, *omega_exponent)?;
            let lk = (-rc.theta / 4.0).max(rc.log_varpi);
            let aux = RateAux::ReflectionConvex {
                theta: t(rc.theta),
                log_beta: t(rc.log_beta),
                k: t(rc.k),
                log_varpi: t(rc.log_varpi),
                delta: t(2.0 * (rc.log_beta - rc.theta.ln()).exp()),
                r: t(rc.r),
                omega: t(rc.omega),
                omega_term: t(rc.omega_term),
                omega_exponent: *omega_exponent,
            };
            (lk, aux)
        }
        (Route::StrongConvex, ClassCertificate::StronglyConvexOutsideBall { m, m_s }) => {
            let (lk, mt, om) = strong_log_kappa(m.as_f64(), m_s.as_f64())?;
            (lk, RateAux::StrongConvex { m: *m, m_s: *m_s, m_tilde: t(mt), omega: t(om) })
        }
        (Route::LogSobolev, ClassCertificate::PerturbedStronglyConvex { m, l1, osc_u2, .. }) => {
            let (m, l1, osc) = (m.as_f64(), l1.as_f64(), osc_u2.as_f64());
            let varpi = 2.0 * m * l1 / (m + l1);
            let aux = RateAux::LogSobolev {
                m: t(m),
                l1: t(l1),
                varpi: t(varpi),
                osc_u2: t(osc),
                c_ls: t(osc.exp() / m),
            };
            (-m * (-osc).exp(), aux)
        }
        (Route::GenericSde { params }, _) => match params {
            SdeParams::Drift { theta, beta, delta, r, epsilon } => {
                let (lk, tt, log_k, om) =
                    sde_drift_rate(theta.as_f64(), beta.as_f64(), delta.as_f64(), r.as_f64(), epsilon.as_f64())?;
                let aux = RateAux::GenericSde {
                    theta_tilde: t(tt),
                    log_k: t(log_k),
                    epsilon: *epsilon,
                    delta: *delta,
                    r: *r,
                    omega: t(om),
                };
                (lk, aux)
            }
            SdeParams::Strong { m_tilde, m_s, epsilon } => {
                let (lk, big_m, log_d, om) = sde_strong_rate(m_tilde.as_f64(), m_s.as_f64(), epsilon.as_f64())?;
                let aux = RateAux::GenericSdeStrong {
                    m_tilde: *m_tilde,
                    big_m: t(big_m),
                    log_d: t(log_d),
                    epsilon: *epsilon,
                    omega: t(om),
                };
                (lk, aux)
            }
        },
        _ => return Err(mismatch(route, cert)),
    };
    if !(log_kappa < 0.0 && log_kappa.is_finite()) {
        return Err(Error::infeasible(
            "certifier",
            "ergodicity rate",
            format!("log kappa = {log_kappa:e} does not certify kappa < 1 ({aux:?})"),
        ));
    }
    Ok(ErgodicityRate { route: route.kind(), kappa: t(log_kappa.exp()), log_kappa: t(log_kappa), aux })
}
