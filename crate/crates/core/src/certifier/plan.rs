use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{a_bound_at, BoundPoint, SplitChoice, TvCertifier};
use super::drift::euler_drift;
use super::functions::log_g;
use super::rate::{ergodicity_rate, RateAux};
use super::{Route, RouteKind};
use crate::error::{Error, Result};
use crate::potentials::{BuiltinPotential, ClassCertificate, ClassKind, Family, Potential};
use crate::scalar::{dist_sq, log_add_exp, Scalar};
use crate::schedule::StepSchedule;

const LN_2: f64 = std::f64::consts::LN_2;

/// A `(γ, p)` recommendation and the certificate obtained by re-evaluating the bound there.
#[derive(Clone, Debug, Serialize)]
pub struct Plan<T> {
    pub route: RouteKind,
    pub gamma: T,
    pub p: u64,
    /// Horizon `T` in Γ-time.
    pub horizon: T,
    pub epsilon: T,
    pub gamma_bar: T,
    /// The step-size cap before taking the minimum with `γ̄`.
    pub gamma_cap: T,
    pub a_bar: T,
    pub log_c_bar: T,
    pub kappa: T,
    pub log_kappa: T,
    /// `T ≤ 0`: the target precision holds from the start and `p = 1` is returned.
    pub degenerate: bool,
    pub certified: BoundPoint<T>,
    pub certified_ok: bool,
}

/// Constants that hold uniformly over `n` and over every step `γ ≤ γ̄`.
struct Uniform {
    a_bar: f64,
    log_c_bar: f64,
    log_kappa: f64,
    /// `(θ, ln ϖ, ln Λ̃)` for the reflection route.
    reflection: Option<(f64, f64, f64)>,
}

fn uniform<T: Scalar>(route: &Route<T>, model: &dyn Potential<T>, cert: &ClassCertificate<T>, x: &[T], gb: f64) -> Result<Uniform> {
    let rate = ergodicity_rate(route, model, cert)?;
    let log_kappa = rate.log_kappa.as_f64();
    match route.kind() {
        RouteKind::Poincare | RouteKind::Bobkov => {
            return Err(Error::config(
                "certifier",
                format!("route {:?} has no n-uniform constant C and cannot be planned; use curves", route.kind()),
            ))
        }
        RouteKind::GenericSde => return Err(Error::config("certifier", "the generic diffusion route cannot be planned")),
        RouteKind::LogSobolev => {
            return Err(Error::config("certifier", "log-Sobolev constants depend on gamma; use the fixed-point planner"))
        }
        _ => {}
    }
    let dc = euler_drift(model, cert, T::lit(gb))?;
    let a_bar = a_bound_at(Some(&dc), model, cert, gb, x)?;
    let lw = dc.lyapunov.log_value(model, x)?;
    let lg = log_g(dc.log_lambda.as_f64(), dc.log_c.as_f64(), gb, lw);
    let d = model.dim() as f64;
    let (log_c_bar, reflection) = match (&rate.aux, cert) {
        (RateAux::UserSupplied { c_half, .. }, _) => (c_half.as_f64().ln() + lg, None),
        (RateAux::StrongConvex { m, m_s, .. }, _) => {
            let (m, ms) = (m.as_f64(), m_s.as_f64());
            ((6.0 + 2.0 * (d / m + ms * ms).sqrt() + 2.0 * (0.5 * lg).exp()).ln(), None)
        }
        (RateAux::ReflectionConvex { theta, log_beta, omega_term, log_varpi, .. }, _) => {
            let lbt = log_beta.as_f64() - theta.as_f64().ln();
            let lam = log_add_exp(-LN_2 + log_add_exp(lg, lbt), LN_2 + lbt + omega_term.as_f64());
            // 2Λ̃ e^{−θΓ/4} + 4ϖ^Γ ≤ (2Λ̃ + 4) κ^Γ for the fixed-budget form
            (log_add_exp(LN_2 + lam, 4f64.ln()), Some((theta.as_f64(), log_varpi.as_f64(), lam)))
        }
        _ => unreachable!("non-plannable routes rejected above"),
    };
    Ok(Uniform { a_bar, log_c_bar, log_kappa, reflection })
}

/// Largest step meeting the discretization budget: the positive root of
/// `(Ā/3)γ² + dγ = ε²/(2L²T)`, written without cancellation.
fn gamma_cap(eps: f64, l: f64, t: f64, d: f64, a_bar: f64) -> f64 {
    let q = eps * eps / (l * l * t);
    q / (d + (d * d + (2.0 / 3.0) * a_bar * q).sqrt())
}

fn default_gamma_bar<T: Scalar>(route: RouteKind, model: &dyn Potential<T>, cert: &ClassCertificate<T>) -> f64 {
    let l = model.lipschitz().as_f64();
    match cert {
        ClassCertificate::StronglyConvexOutsideBall { m, .. } => m.as_f64() / (2.0 * l * l),
        ClassCertificate::PerturbedStronglyConvex { m, l1, .. } => 2.0 / (m.as_f64() + l1.as_f64()),
        ClassCertificate::Superexponential { .. } => 0.5 / l,
        ClassCertificate::LogConcave { .. } if route == RouteKind::UserSupplied => 0.5 / l,
        ClassCertificate::LogConcave { .. } => 1.0 / l,
    }
}

/// Step size and iteration count reaching precision `ε` from `x`.
pub fn plan_precision<T: Scalar>(
    route: &Route<T>,
    model: &dyn Potential<T>,
    cert: &ClassCertificate<T>,
    x: &[T],
    epsilon: T,
    gamma_bar: Option<T>,
) -> Result<Plan<T>> {
    let eps = epsilon.as_f64();
    if !(eps > 0.0 && eps < 2.0) {
        return Err(Error::domain("certifier", "precision planner", format!("epsilon = {eps} not in (0,2)")));
    }
    let gb = gamma_bar.map(|g| g.as_f64()).unwrap_or_else(|| default_gamma_bar(route.kind(), model, cert));
    let l = model.lipschitz().as_f64();
    let d = model.dim() as f64;
    let (t, a_bar, log_c_bar, log_kappa, cap) = if route.kind() == RouteKind::LogSobolev {
        log_sobolev_fixed_point(route, model, cert, x, eps, gb)?
    } else {
        let u = uniform(route, model, cert, x, gb)?;
        let t = match u.reflection {
            Some((theta, log_varpi, lam)) => {
                (4.0 / theta * ((8.0 / eps).ln() + lam)).max((16.0 / eps).ln() / (-log_varpi))
            }
            None => (u.log_c_bar - (eps / 2.0).ln()) / (-u.log_kappa),
        };
        let cap = if t > 0.0 { gamma_cap(eps, l, t, d, u.a_bar) } else { f64::INFINITY };
        (t, u.a_bar, u.log_c_bar, u.log_kappa, cap)
    };
    let degenerate = !(t > 0.0);
    let gamma = cap.min(gb);
    let p = if degenerate { 1 } else { (t / gamma).floor() as u64 + 1 };
    let schedule = StepSchedule::constant(T::lit(gamma))?;
    let tc = TvCertifier::new(model, cert, route, &schedule, x, Some(T::lit(gb)), 0)?;
    let p_cert = if route.kind() == RouteKind::LogSobolev { p.max(2) } else { p };
    let certified = tc.bound(p_cert, SplitChoice::Optimize)?;
    let certified_ok = certified.raw_total.as_f64() <= eps;
    Ok(Plan {
        route: route.kind(),
        gamma: T::lit(gamma),
        p,
        horizon: T::lit(t),
        epsilon,
        gamma_bar: T::lit(gb),
        gamma_cap: T::lit(cap),
        a_bar: T::lit(a_bar),
        log_c_bar: T::lit(log_c_bar),
        kappa: T::lit(log_kappa.exp()),
        log_kappa: T::lit(log_kappa),
        degenerate,
        certified,
        certified_ok,
    })
}

/// The log-Sobolev `C̄` grows as `γ` shrinks, so `C̄(γ) → T → γ` is iterated to a fixed point.
fn log_sobolev_fixed_point<T: Scalar>(
    route: &Route<T>,
    model: &dyn Potential<T>,
    cert: &ClassCertificate<T>,
    x: &[T],
    eps: f64,
    gb: f64,
) -> Result<(f64, f64, f64, f64, f64)> {
    let ClassCertificate::PerturbedStronglyConvex { m, l1, xstar1, sup_grad_u2, osc_u2, .. } = cert else {
        return Err(Error::config("certifier", "log-Sobolev route needs a perturbed strongly convex certificate"));
    };
    let (m, l1, g2, osc) = (m.as_f64(), l1.as_f64(), sup_grad_u2.as_f64(), osc_u2.as_f64());
    if gb > 2.0 / (m + l1) {
        return Err(Error::precondition("certifier", format!("log-Sobolev route needs gamma_bar <= 2/(m+L1) = {}", 2.0 / (m + l1))));
    }
    let rate = ergodicity_rate(route, model, cert)?;
    let lk = rate.log_kappa.as_f64();
    let a_bar = a_bound_at(None, model, cert, gb, x)?;
    let l = model.lipschitz().as_f64();
    let d = model.dim() as f64;
    let w = 2.0 * m * l1 / (m + l1);
    let r2 = dist_sq(x, xstar1).as_f64();
    let log_c_bar = |g: f64| {
        let c2 = l1 * r2
            + l1 * g * (g + 2.0 / w) * g2 * g2
            + 2.0 * osc
            + 2.0 * l1 / w * (1.0 - w * g) * (2.0 * d + (g + 2.0 / w) * g2 * g2)
            - d * (1.0 + (2.0 * g * m).ln() - 2.0 * l1 * g);
        0.5 * c2.max(0.0).ln()
    };
    let mut g = gb;
    let mut out = (0.0, a_bar, 0.0, lk, f64::INFINITY);
    for _ in 0..200 {
        let lc = log_c_bar(g);
        let t = (lc - (eps / 2.0).ln()) / (-lk);
        let cap = if t > 0.0 { gamma_cap(eps, l, t, d, a_bar) } else { f64::INFINITY };
        let next = cap.min(gb);
        out = (t, a_bar, lc, lk, cap);
        if (next - g).abs() <= 1e-14 * g {
            break;
        }
        g = next;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedBudget<T> {
    pub gamma: T,
    /// The closed-form bound of the fixed-budget lemma.
    pub bound: T,
    /// The master bound evaluated at the same `(γ, p, n)`.
    pub master: BoundPoint<T>,
    pub a_bar: T,
    pub log_c_bar: T,
    pub log_kappa: T,
}

/// Step size for a fixed budget of `p` iterations with burn-in `n`.
pub fn plan_fixed_budget<T: Scalar>(
    route: &Route<T>,
    model: &dyn Potential<T>,
    cert: &ClassCertificate<T>,
    x: &[T],
    p: u64,
    n: u64,
    gamma_bar: Option<T>,
) -> Result<FixedBudget<T>> {
    if p < n + 2 {
        return Err(Error::precondition("certifier", format!("fixed budget needs p - n >= 2 (got p = {p}, n = {n})")));
    }
    let gb = gamma_bar.map(|g| g.as_f64()).unwrap_or_else(|| default_gamma_bar(route.kind(), model, cert));
    let u = uniform(route, model, cert, x, gb)?;
    let rate = -u.log_kappa;
    let gamma_of = |m: u64| (m as f64).ln() / (m as f64 * rate);
    let m = p - n;
    let gamma = gamma_of(m);
    if gamma > gb {
        // γ(m) decreases for m ≥ 3
        let mut hi = 3u64;
        while gamma_of(hi) > gb {
            hi = hi.checked_mul(2).ok_or_else(|| Error::infeasible("certifier", "fixed budget", "no feasible p"))?;
        }
        let mut lo = (hi / 2).max(3);
        if gamma_of(lo) <= gb {
            hi = lo;
        }
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if gamma_of(mid) <= gb {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        return Err(Error::infeasible(
            "certifier",
            "fixed budget",
            format!("gamma = {gamma} exceeds gamma_bar = {gb}; the smallest feasible budget is p = {}", n + hi),
        ));
    }
    let mf = m as f64;
    let lm = mf.ln();
    let d = model.dim() as f64;
    let bound = mf.powf(-0.5) * (u.log_c_bar.exp() * mf.powf(-0.5) + lm * (d + u.a_bar * lm / mf).sqrt());
    let schedule = StepSchedule::constant(T::lit(gamma))?;
    let tc = TvCertifier::new(model, cert, route, &schedule, x, Some(T::lit(gb)), 0)?;
    let master = tc.bound_at(p, n)?;
    Ok(FixedBudget {
        gamma: T::lit(gamma),
        bound: T::lit(bound),
        master,
        a_bar: T::lit(u.a_bar),
        log_c_bar: T::lit(u.log_c_bar),
        log_kappa: T::lit(u.log_kappa),
    })
}

/// Potentials indexed by dimension, for scaling studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DimensionFamily<T> {
    IsotropicGaussian,
    Huber { scale: T },
    QuadraticCosine { amplitude: T },
}

impl<T: Scalar> DimensionFamily<T> {
    pub fn build(&self, d: usize) -> Result<BuiltinPotential<T>> {
        BuiltinPotential::new(match self {
            DimensionFamily::IsotropicGaussian => Family::IsotropicQuadratic { dim: d },
            DimensionFamily::Huber { scale } => Family::Huber { dim: d, scale: *scale },
            DimensionFamily::QuadraticCosine { amplitude } => Family::QuadraticCosine { dim: d, amplitude: *amplitude },
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow<T> {
    pub d: usize,
    pub gamma: T,
    pub p: u64,
    pub horizon: T,
    pub certified_bound: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport<T> {
    pub route: RouteKind,
    pub epsilon: T,
    pub rows: Vec<ScalingRow<T>>,
    /// Least-squares slope of `ln γ` against `ln d`.
    pub slope_gamma: f64,
    pub slope_p: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Runs the precision planner for each dimension (from `x⋆`, with the family's
/// shipped certificate for the route) and fits power laws to `γ` and `p`.
pub fn scaling_study<T: Scalar>(
    route: &Route<T>,
    family: &DimensionFamily<T>,
    d_list: &[usize],
    epsilon: T,
) -> Result<ScalingReport<T>> {
    let mut ds = d_list.to_vec();
    ds.sort_unstable();
    ds.dedup();
    if ds.len() < 3 {
        return Err(Error::precondition("certifier", "a scaling fit needs at least 3 distinct dimensions"));
    }
    let rows = ds
        .par_iter()
        .map(|&d| {
            let u = family.build(d)?;
            let cert = u
                .shipped_certificates()
                .into_iter()
                .find(|c| route.kind().accepts(c.kind()) && !(route.kind() == RouteKind::UserSupplied && c.kind() == ClassKind::PerturbedStronglyConvex))
                .ok_or_else(|| Error::config("certifier", format!("{} ships no certificate usable by {:?}", u.label(), route.kind())))?;
            let x = u.minimizer().to_vec();
            let plan = plan_precision(route, &u, &cert, &x, epsilon, None)?;
            Ok(ScalingRow { d, gamma: plan.gamma, p: plan.p, horizon: plan.horizon, certified_bound: plan.certified.raw_total })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.d as f64).collect();
    let slope_gamma = fit_slope(&xs, &rows.iter().map(|r| r.gamma.as_f64()).collect::<Vec<_>>());
    let slope_p = fit_slope(&xs, &rows.iter().map(|r| r.p as f64).collect::<Vec<_>>());
    Ok(ScalingReport { route: route.kind(), epsilon, rows, slope_gamma, slope_p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cap_limits() {
        // Ā → 0 gives ε²/(2dL²T)
        assert_relative_eq!(gamma_cap(0.3, 2.0, 5.0, 3.0, 0.0), 0.09 / (2.0 * 3.0 * 4.0 * 5.0), epsilon = 1e-16);
        // matches the textbook root [−d + √(d² + (2/3)Āε²/(L²T))]/(2Ā/3)
        let (eps, l, t, d, a): (f64, f64, f64, f64, f64) = (0.25, 1.5, 7.0, 4.0, 30.0);
        let direct = (-d + (d * d + (2.0 / 3.0) * a * eps * eps / (l * l * t)).sqrt()) / (2.0 * a / 3.0);
        assert_relative_eq!(gamma_cap(eps, l, t, d, a), direct, max_relative = 1e-9);
    }

    #[test]
    fn horizon_cancels_when_logs_do() {
        // C̄ = e·ε/2 and κ = e^{−1} give T = 1
        let eps: f64 = 0.5;
        let t = ((std::f64::consts::E * eps / 2.0).ln() - (eps / 2.0).ln()) / 1.0;
        assert_relative_eq!(t, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn strong_plan_certifies() {
        let u = BuiltinPotential::isotropic_quadratic(1).unwrap();
        let cert = ClassCertificate::StronglyConvexOutsideBall { m: 1.0, m_s: 0.0 };
        let plan = plan_precision(&Route::StrongConvex, &u, &cert, &[0.0], 0.25, Some(0.5)).unwrap();
        assert!(plan.certified_ok, "{plan:?}");
        assert!(plan.p as f64 > plan.horizon / plan.gamma);
        assert!(plan.gamma <= 0.5);
    }

    #[test]
    fn fixed_budget_gamma() {
        let u = BuiltinPotential::isotropic_quadratic(1).unwrap();
        let cert = ClassCertificate::StronglyConvexOutsideBall { m: 1.0, m_s: 0.0 };
        let fb = plan_fixed_budget(&Route::StrongConvex, &u, &cert, &[0.0], 100_000, 0, Some(0.5)).unwrap();
        let lk = fb.log_kappa;
        assert_relative_eq!(fb.gamma, 100_000f64.ln() / (100_000.0 * -lk), max_relative = 1e-14);
        let err = plan_fixed_budget(&Route::StrongConvex, &u, &cert, &[0.0], 10, 0, Some(0.01)).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }), "{err}");
    }

    #[test]
    fn poincare_is_not_plannable() {
        let u = BuiltinPotential::isotropic_quadratic(1).unwrap();
        let cert = ClassCertificate::Superexponential { rho: 1.0, alpha: 2.0, m_rho: 0.0 };
        assert!(matches!(plan_precision(&Route::Poincare, &u, &cert, &[0.0], 0.5, None), Err(Error::Config { .. })));
    }

    #[test]
    fn slope_fit_recovers_power() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.7)).collect();
        assert_relative_eq!(fit_slope(&xs, &ys), -1.7, epsilon = 1e-12);
    }
}
