use crate::error::{Error, Result};
use crate::scalar::{log_add_exp, Scalar};
use crate::special::norm_quantile;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("certifier", "moment function", format!("lambda = {lambda} not in (0,1)")))
    }
}

fn check_args(a: f64, c: f64, gamma: f64, w: f64) -> Result<()> {
    if !(a >= 0.0 && c >= 0.0 && gamma > 0.0 && w >= 0.0) {
        return Err(Error::domain(
            "certifier",
            "moment function",
            format!("need a >= 0, c >= 0, gamma > 0, w >= 0 (got a={a}, c={c}, gamma={gamma}, w={w})"),
        ));
    }
    Ok(())
}

/// `ln F(λ,a,c,γ,w)` from `ln λ`, `ln c` and `ln w`.
pub fn log_f(log_lambda: f64, a: f64, log_c: f64, gamma: f64, log_w: f64) -> f64 {
    let head = if log_w == f64::NEG_INFINITY { f64::NEG_INFINITY } else { a * log_lambda + log_w };
    log_add_exp(head, log_g_tail(log_lambda, log_c, gamma))
}

/// `ln G(λ,c,γ,w)`.
pub fn log_g(log_lambda: f64, log_c: f64, gamma: f64, log_w: f64) -> f64 {
    log_add_exp(log_w, log_g_tail(log_lambda, log_c, gamma))
}

// ln of c / (−λ^γ log λ)
fn log_g_tail(log_lambda: f64, log_c: f64, gamma: f64) -> f64 {
    if log_c == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    log_c - gamma * log_lambda - (-log_lambda).ln()
}

/// `F(λ,a,c,γ,w) = λ^a w + c/(−λ^γ log λ)`.
pub fn eval_f<T: Scalar>(lambda: T, a: T, c: T, gamma: T, w: T) -> Result<T> {
    let (l, a, c, g, w) = (lambda.as_f64(), a.as_f64(), c.as_f64(), gamma.as_f64(), w.as_f64());
    check_lambda(l)?;
    check_args(a, c, g, w)?;
    Ok(T::lit(log_f(l.ln(), a, c.ln(), g, w.ln()).exp()))
}

/// `G(λ,c,γ,w) = w + c/(−λ^γ log λ)`.
pub fn eval_g<T: Scalar>(lambda: T, c: T, gamma: T, w: T) -> Result<T> {
    let (l, c, g, w) = (lambda.as_f64(), c.as_f64(), gamma.as_f64(), w.as_f64());
    check_lambda(l)?;
    check_args(0.0, c, g, w)?;
    Ok(T::lit(log_g(l.ln(), c.ln(), g, w.ln()).exp()))
}

/// `ω(ε,R) = R² / {2Φ⁻¹(1−ε/2)}²`.
pub fn eval_omega<T: Scalar>(epsilon: T, r: T) -> Result<T> {
    Ok(T::lit(omega(epsilon.as_f64(), r.as_f64())?))
}

pub(crate) fn omega(eps: f64, r: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain("certifier", "omega", format!("epsilon = {eps} not in (0,1)")));
    }
    if !(r >= 0.0) {
        return Err(Error::domain("certifier", "omega", format!("R = {r} must be nonnegative")));
    }
    // 1 − ε/2 loses digits for small ε; use the symmetric lower quantile
    let q = -norm_quantile(0.5 * eps)?;
    Ok(r * r / (4.0 * q * q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn f_examples() {
        assert_relative_eq!(eval_f(0.3, 0.0, 0.0, 0.7, 5.0).unwrap(), 5.0, epsilon = 1e-14);
        let expect = 0.25 + 1.0 / (0.5 * std::f64::consts::LN_2);
        assert_relative_eq!(eval_f(0.5, 2.0, 1.0, 1.0, 1.0).unwrap(), expect, epsilon = 1e-13);
        assert_relative_eq!(expect, 3.135_390_1, epsilon = 1e-6);
        assert!(eval_f(1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(eval_g(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn g_dominates_f() {
        for &(l, a, c, g, w) in &[(0.2, 0.5, 3.0, 0.1, 2.0), (0.9, 10.0, 0.1, 1.0, 1.0), (0.01, 3.0, 7.0, 0.5, 0.0)] {
            let f: f64 = eval_f(l, a, c, g, w).unwrap();
            let gg: f64 = eval_g(l, c, g, w).unwrap();
            assert!(gg >= f);
        }
    }

    #[test]
    fn omega_examples() {
        assert_eq!(eval_omega(0.3, 0.0).unwrap(), 0.0);
        let eps = 2.0 * crate::special::norm_sf(1.0);
        assert_relative_eq!(eval_omega(eps, 2.0).unwrap(), 1.0, epsilon = 1e-12);
        let q = crate::special::norm_quantile(0.75).unwrap();
        assert_relative_eq!(eval_omega(0.5, 1.0).unwrap(), 1.0 / (2.0 * q).powi(2), epsilon = 1e-14);
        assert_relative_eq!(eval_omega(0.5, 1.0).unwrap(), 0.549_527_3, epsilon = 1e-7);
        assert!(eval_omega(1.0, 1.0).is_err());
        assert!(eval_omega(0.0, 1.0).is_err());
    }
}
