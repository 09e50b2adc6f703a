use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{checked_value, ClassCertificate, ClassKind, Potential};
use crate::scalar::{dist_sq, Scalar};

/// The Lyapunov function `V` a drift condition is stated for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Lyapunov<T> {
    /// `V = e^{U/2}`.
    ExpHalfU,
    /// `V = exp((η/4)·√(‖x−x⋆‖² + 1))`.
    ExpEtaDist { eta: T },
    /// `V = ‖x−x⋆‖²`.
    SqDist,
}

impl<T: Scalar> Lyapunov<T> {
    /// `ln V(x)`; `−∞` for `SqDist` at `x⋆`.
    pub fn log_value(&self, model: &dyn Potential<T>, x: &[T]) -> Result<f64> {
        let r2 = dist_sq(x, model.minimizer()).as_f64();
        Ok(match self {
            Lyapunov::ExpHalfU => 0.5 * checked_value(model, x)?.as_f64(),
            Lyapunov::ExpEtaDist { eta } => 0.25 * eta.as_f64() * (r2 + 1.0).sqrt(),
            Lyapunov::SqDist => r2.ln(),
        })
    }
}

/// Constants of `R_γ V ≤ λ^γ V + γc`, valid for every `γ ∈ (0, γ̄]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftConstants<T> {
    pub class: ClassKind,
    pub lambda: T,
    pub log_lambda: T,
    /// May be `inf` in narrow types; `log_c` is authoritative.
    pub c: T,
    pub log_c: T,
    pub gamma_bar: T,
    pub lyapunov: Lyapunov<T>,
    /// Exponent ς of the continuous-time family `V_ς = e^{ςU}` the route uses, when any.
    pub varsigma: Option<T>,
    /// Radius outside which the drift is contracting (`K`, `R_c`, or `max(1, M_s, √(d/m))`).
    pub radius: T,
}

/// Foster–Lyapunov constants of the ULA kernel for the certificate's class.
pub fn euler_drift<T: Scalar>(
    model: &dyn Potential<T>,
    cert: &ClassCertificate<T>,
    gamma_bar: T,
) -> Result<DriftConstants<T>> {
    let d = model.dim() as f64;
    cert.validate(model.dim())?;
    let l = model.lipschitz().as_f64();
    let gb = gamma_bar.as_f64();
    if !(gb > 0.0 && gb.is_finite()) {
        return Err(Error::domain("certifier", "euler drift", format!("gamma_bar = {gb} must be positive")));
    }
    let (log_lambda, log_c, lyapunov, varsigma, radius) = match cert {
        ClassCertificate::Superexponential { rho, alpha, m_rho } => {
            if !(gb < 1.0 / l) {
                return Err(Error::domain(
                    "certifier",
                    "superexponential drift",
                    format!("gamma_bar = {gb} must be strictly below 1/L = {}", 1.0 / l),
                ));
            }
            let (rho, alpha, m_rho) = (rho.as_f64(), alpha.as_f64(), m_rho.as_f64());
            let ll = -d * l / (2.0 * (1.0 - l * gb));
            let k = m_rho.max((-8.0 * ll / (rho * rho)).powf(1.0 / (2.0 * (alpha - 1.0))));
            // sup of e^{U/2} on B(x⋆, K) is at most e^{LK²/4}
            let lc = (2.0 * -ll).ln() - gb * ll + l * k * k / 4.0;
            (ll, lc, Lyapunov::ExpHalfU, Some(0.5), k)
        }
        ClassCertificate::LogConcave { eta, m_eta } => {
            if !(gb <= 1.0 / l) {
                return Err(Error::domain(
                    "certifier",
                    "log-concave drift",
                    format!("gamma_bar = {gb} must not exceed 1/L = {}", 1.0 / l),
                ));
            }
            let (eta, m_eta) = (eta.as_f64(), m_eta.as_f64());
            let ll = -eta * eta * (std::f64::consts::SQRT_2 - 1.0) / 16.0;
            let rc = 1f64.max(2.0 * d / eta).max(m_eta);
            let e = eta * gb / 4.0 * (d + eta * gb / 4.0);
            let lc = ((eta / 4.0) * (d + eta * gb / 4.0) - ll).ln() + eta * (rc * rc + 1.0).sqrt() / 4.0 + e;
            (ll, lc, Lyapunov::ExpEtaDist { eta: T::lit(eta) }, None, rc)
        }
        ClassCertificate::StronglyConvexOutsideBall { m, m_s } => {
            let (m, m_s) = (m.as_f64(), m_s.as_f64());
            if !(gb < 2.0 * m / (l * l)) {
                return Err(Error::domain(
                    "certifier",
                    "strongly convex drift",
                    format!("gamma_bar = {gb} must be strictly below 2m/L^2 = {}", 2.0 * m / (l * l)),
                ));
            }
            let ll = -2.0 * m + gb * l * l;
            let lc = (2.0 * (d + m * m_s * m_s)).ln();
            let radius = 1f64.max(m_s).max((d / m).sqrt());
            (ll, lc, Lyapunov::SqDist, None, radius)
        }
        ClassCertificate::PerturbedStronglyConvex { .. } => {
            return Err(Error::config(
                "certifier",
                "no discrete drift condition is available for the perturbed strongly convex class",
            ))
        }
    };
    Ok(DriftConstants {
        class: cert.kind(),
        lambda: T::lit(log_lambda.exp()),
        log_lambda: T::lit(log_lambda),
        c: T::lit(log_c.exp()),
        log_c: T::lit(log_c),
        gamma_bar,
        lyapunov,
        varsigma: varsigma.map(T::lit),
        radius: T::lit(radius),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::BuiltinPotential;
    use approx::assert_relative_eq;

    #[test]
    fn strong_example() {
        let u = BuiltinPotential::isotropic_quadratic(2).unwrap();
        let cert = ClassCertificate::StronglyConvexOutsideBall { m: 1.0, m_s: 0.0 };
        let dc = euler_drift(&u, &cert, 0.5).unwrap();
        assert_relative_eq!(dc.lambda, 0.223_130_160_148_429_8, epsilon = 1e-15);
        assert_relative_eq!(dc.c, 4.0, epsilon = 1e-14);
        assert!(euler_drift(&u, &cert, 2.0).is_err());
    }

    #[test]
    fn superexponential_open_bound() {
        let u = BuiltinPotential::isotropic_quadratic(1).unwrap();
        let cert = ClassCertificate::Superexponential { rho: 1.0, alpha: 2.0, m_rho: 0.0 };
        assert!(matches!(euler_drift(&u, &cert, 1.0), Err(Error::Domain { .. })));
        let dc = euler_drift(&u, &cert, 0.5).unwrap();
        // λ = e^{−1}, K = √8, c = 2·e^{0.5}·e^{2}
        assert_relative_eq!(dc.log_lambda, -1.0, epsilon = 1e-15);
        assert_relative_eq!(dc.radius, 8f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(dc.c, 2.0 * (2.5f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn log_concave_lambda_is_dimension_free() {
        for d in [1, 7, 50] {
            let u = BuiltinPotential::isotropic_quadratic(d).unwrap();
            let cert = ClassCertificate::LogConcave { eta: 1.0, m_eta: 2.0 };
            let dc = euler_drift(&u, &cert, 1.0).unwrap();
            assert_relative_eq!(dc.lambda, (-(2f64.sqrt() - 1.0) / 16.0).exp(), epsilon = 1e-15);
            assert_relative_eq!(dc.lambda, 0.974_436, epsilon = 1e-5);
        }
    }
}
