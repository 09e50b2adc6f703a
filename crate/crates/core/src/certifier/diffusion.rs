use serde::Serialize;

use super::rate::{reflection_constants, sde_drift_rate, sde_strong_rate};
use super::{Lyapunov, OmegaExponent};
use crate::error::{Error, Result};
use crate::potentials::{ClassCertificate, Potential};
use crate::scalar::{dist_sq, log_add_exp, Scalar};

/// Bound on `‖P_s(x,·) − P_s(y,·)‖` for the rescaled Langevin diffusion `dX = −∇U(X)/2 ds + dB`.
///
/// The rescaled generator is half the Langevin one, so the continuous drift constants
/// become `θ/2, β/2`, and the contraction modulus `m/2`. All curves use `ε = 1/2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CouplingCurve {
    /// `2{(1−ε)⁻¹ + 1 + ‖x−y‖}κ^s`.
    Strong { m_tilde: f64, big_m: f64, epsilon: f64, omega: f64, log_d: f64, log_kappa: f64, distance: f64 },
    /// `2e^{−θ̃s/2}{½(V(x)+V(y)) + e^{θ̃ω}β/θ̃} + 4κ^s` with `V = exp((η/4)√(‖·−x⋆‖²+1))`.
    Reflection {
        theta: f64,
        beta: f64,
        delta: f64,
        r: f64,
        epsilon: f64,
        omega: f64,
        theta_tilde: f64,
        log_k: f64,
        log_kappa: f64,
        log_v_mean: f64,
    },
}

const EPS: f64 = 0.5;

impl CouplingCurve {
    pub fn new<T: Scalar>(model: &dyn Potential<T>, cert: &ClassCertificate<T>, x: &[T], y: &[T]) -> Result<Self> {
        cert.validate(model.dim())?;
        if x.len() != model.dim() || y.len() != model.dim() {
            return Err(Error::domain("certifier", "coupling curve", "start points must match the model dimension"));
        }
        let d = model.dim() as f64;
        match cert {
            ClassCertificate::StronglyConvexOutsideBall { m, m_s } => {
                let m_tilde = m.as_f64() / 2.0;
                let (log_kappa, big_m, log_d, omega) = sde_strong_rate(m_tilde, m_s.as_f64(), EPS)?;
                let distance = dist_sq(x, y).as_f64().sqrt();
                Ok(CouplingCurve::Strong { m_tilde, big_m, epsilon: EPS, omega, log_d, log_kappa, distance })
            }
            ClassCertificate::LogConcave { eta, m_eta } => {
                let rc = reflection_constants(eta.as_f64(), m_eta.as_f64(), d, OmegaExponent::Statement)?;
                let beta_full = rc.log_beta.exp();
                let (theta, beta) = (rc.theta / 2.0, beta_full / 2.0);
                let delta = 2.0 * beta_full / rc.theta;
                let (log_kappa, theta_tilde, log_k, omega) = sde_drift_rate(theta, beta, delta, rc.r, EPS)?;
                let v = Lyapunov::ExpEtaDist { eta: *eta };
                let log_v_mean = log_add_exp(v.log_value(model, x)?, v.log_value(model, y)?) - std::f64::consts::LN_2;
                Ok(CouplingCurve::Reflection {
                    theta,
                    beta,
                    delta,
                    r: rc.r,
                    epsilon: EPS,
                    omega,
                    theta_tilde,
                    log_k,
                    log_kappa,
                    log_v_mean,
                })
            }
            _ => Err(Error::config(
                "certifier",
                format!("no diffusion coupling curve for the {:?} class", cert.kind()),
            )),
        }
    }

    pub fn log_kappa(&self) -> f64 {
        match self {
            CouplingCurve::Strong { log_kappa, .. } | CouplingCurve::Reflection { log_kappa, .. } => *log_kappa,
        }
    }

    /// Curve value at rescaled time `s ≥ 0`.
    pub fn value(&self, s: f64) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        match *self {
            CouplingCurve::Strong { epsilon, log_kappa, distance, .. } => {
                2.0 * (1.0 / (1.0 - epsilon) + 1.0 + distance) * (s * log_kappa).exp()
            }
            CouplingCurve::Reflection { beta, omega, theta_tilde, log_kappa, log_v_mean, .. } => {
                let inner = log_add_exp(log_v_mean, theta_tilde * omega + beta.ln() - theta_tilde.ln());
                let first = ln2 - theta_tilde * s / 2.0 + inner;
                log_add_exp(first, 2.0 * ln2 + s * log_kappa).exp()
            }
        }
    }
}
