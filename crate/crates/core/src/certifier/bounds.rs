use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::drift::{euler_drift, DriftConstants};
use super::functions::{log_f, log_g};
use super::rate::{ergodicity_rate, ErgodicityRate, RateAux};
use super::{Route, RouteKind};
use crate::error::{Error, Result};
use crate::potentials::{a_alpha, checked_gradient, checked_value, ClassCertificate, ClassKind, Potential};
use crate::scalar::{dist_sq, log_add_exp, norm_sq, Scalar};
use crate::schedule::{SplitRule, StepSchedule, StepTable};
use crate::special::ln_gamma;

const LN_2: f64 = std::f64::consts::LN_2;

/// Above this `p`, `Optimize` searches a candidate set instead of every `n < p`.
const EXHAUSTIVE_LIMIT: u64 = 200_000;

/// Upper bound on `sup_k E‖∇U(X_k)‖²` for chains started at `x`, with steps at most `gamma`.
pub(crate) fn a_bound_at<T: Scalar>(
    drift: Option<&DriftConstants<T>>,
    model: &dyn Potential<T>,
    cert: &ClassCertificate<T>,
    gamma: f64,
    x: &[T],
) -> Result<f64> {
    let l = model.lipschitz().as_f64();
    let d = model.dim() as f64;
    let need = || Error::config("certifier", "A bound for this class needs its drift constants");
    match cert {
        ClassCertificate::PerturbedStronglyConvex { m, l1, xstar1, sup_grad_u2, .. } => {
            let (m, l1, g2) = (m.as_f64(), l1.as_f64(), sup_grad_u2.as_f64());
            let varpi = 2.0 * m * l1 / (m + l1);
            let shift = dist_sq(xstar1, model.minimizer()).as_f64();
            let inner = shift + 2.0 / varpi * (2.0 * d + (gamma + 2.0 / varpi) * g2 * g2);
            Ok(2.0 * l1 * l1 * inner + 2.0 * g2 * g2)
        }
        _ => {
            let dc = drift.ok_or_else(need)?;
            if dc.class != cert.kind() {
                return Err(need());
            }
            let lw = dc.lyapunov.log_value(model, x)?;
            let lg = log_g(dc.log_lambda.as_f64(), dc.log_c.as_f64(), gamma, lw);
            match cert {
                ClassCertificate::Superexponential { rho, alpha, m_rho } => {
                    let (rho, alpha, m_rho) = (rho.as_f64(), alpha.as_f64(), m_rho.as_f64());
                    let aa = a_alpha(rho, alpha, m_rho, l);
                    let inner = (alpha + 1.0) / rho * (aa + 4.0 * (2.0 - alpha) * (alpha + 1.0) / (alpha * rho) + 2.0 * lg);
                    Ok(l * l * inner.powf(2.0 / alpha))
                }
                ClassCertificate::LogConcave { eta, .. } => {
                    let v = 4.0 / eta.as_f64() * (1.0 + lg);
                    Ok(l * l * v * v)
                }
                ClassCertificate::StronglyConvexOutsideBall { .. } => Ok(l * l * lg.exp()),
                ClassCertificate::PerturbedStronglyConvex { .. } => unreachable!(),
            }
        }
    }
}

/// Certified `A(γ, x)` for a route, at the schedule's first step.
pub fn a_bound<T: Scalar>(
    route: &Route<T>,
    drift: Option<&DriftConstants<T>>,
    model: &dyn Potential<T>,
    cert: &ClassCertificate<T>,
    schedule: &StepSchedule<T>,
    x: &[T],
) -> Result<T> {
    if !route.kind().accepts(cert.kind()) {
        return Err(Error::config(
            "certifier",
            format!("route {:?} does not match a {:?} certificate", route.kind(), cert.kind()),
        ));
    }
    let g1 = schedule.gamma1();
    if let Some(dc) = drift {
        if g1 > dc.gamma_bar {
            return Err(Error::precondition(
                "certifier",
                format!("gamma_1 = {g1} exceeds the drift's gamma_bar = {}", dc.gamma_bar),
            ));
        }
    }
    Ok(T::lit(a_bound_at(drift, model, cert, g1.as_f64(), x)?))
}

/// How the burn-in index `n` is chosen for each `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitChoice {
    KappaGamma,
    LogGamma,
    /// Minimise the bound over `n < p`.
    Optimize,
}

/// One point of a bound curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundPoint<T> {
    pub p: u64,
    pub n: u64,
    pub split_degenerate: bool,
    pub discretization: T,
    pub ergodicity: T,
    /// `ln C(δ_x Q^n)`; for the reflection route `ln Λ(n)`.
    pub log_c: T,
    pub raw_total: T,
    /// `min(2, raw_total)`.
    pub total: T,
    pub clamped: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TvBoundCurve<T> {
    pub route: RouteKind,
    pub schedule: StepSchedule<T>,
    pub split: SplitChoice,
    pub points: Vec<BoundPoint<T>>,
}

/// Prefix sums for `ln D_n = −(d/2)[ln 4π + 2Σ ln(1−Lγ_k) + ln Σ γ_k/(1−Lγ_k)]`.
#[derive(Clone, Debug)]
struct DnTable {
    half_d: f64,
    constant: Option<(f64, f64)>,
    log_sum: Vec<f64>,
    ratio_sum: Vec<f64>,
}

impl DnTable {
    fn new<T: Scalar>(table: &StepTable<T>, l: f64, d: f64, horizon: u64) -> Result<Self> {
        let g1 = table.gamma(1);
        if !(l * g1 < 1.0) {
            return Err(Error::domain(
                "certifier",
                "variance factor D_n",
                format!("needs L*gamma_1 < 1 (got {})", l * g1),
            ));
        }
        let mut dt = DnTable { half_d: d / 2.0, constant: None, log_sum: Vec::new(), ratio_sum: Vec::new() };
        if table.schedule().as_constant().is_some() {
            dt.constant = Some(((-l * g1).ln_1p(), g1 / (1.0 - l * g1)));
        } else {
            let (mut a, mut b) = (0.0, 0.0);
            dt.log_sum.push(0.0);
            dt.ratio_sum.push(0.0);
            for k in 1..=horizon {
                let g = table.gamma(k);
                a += (-l * g).ln_1p();
                b += g / (1.0 - l * g);
                dt.log_sum.push(a);
                dt.ratio_sum.push(b);
            }
        }
        Ok(dt)
    }

    fn log_dn(&self, n: u64) -> f64 {
        let (s1, s2) = match self.constant {
            Some((lg, r)) => (n as f64 * lg, n as f64 * r),
            None => (self.log_sum[n as usize], self.ratio_sum[n as usize]),
        };
        -self.half_d * ((4.0 * std::f64::consts::PI).ln() + 2.0 * s1 + s2.ln())
    }
}

/// Everything needed to evaluate the master bound for one (model, certificate, route, schedule, start).
pub struct TvCertifier<'m, T: Scalar> {
    model: &'m dyn Potential<T>,
    cert: ClassCertificate<T>,
    route: Route<T>,
    table: StepTable<T>,
    x: Vec<T>,
    drift: Option<DriftConstants<T>>,
    rate: ErgodicityRate<T>,
    a: f64,
    log_w: f64,
    u_x: f64,
    dn: Option<DnTable>,
    log_prefactor: f64,
    d: f64,
    l: f64,
    log_kappa: f64,
}

impl<'m, T: Scalar> TvCertifier<'m, T> {
    /// `gamma_bar` defaults to `γ₁`; `horizon` is the largest `p` that will be queried
    /// (ignored for constant schedules).
    pub fn new(
        model: &'m dyn Potential<T>,
        cert: &ClassCertificate<T>,
        route: &Route<T>,
        schedule: &StepSchedule<T>,
        x: &[T],
        gamma_bar: Option<T>,
        horizon: u64,
    ) -> Result<Self> {
        let dim = model.dim();
        if x.len() != dim {
            return Err(Error::precondition("certifier", format!("start has dimension {} but the model has {dim}", x.len())));
        }
        if route.kind() == RouteKind::GenericSde {
            return Err(Error::config("certifier", "the generic diffusion route has no chain constant C; use it for rates only"));
        }
        schedule.validate()?;
        let rate = ergodicity_rate(route, model, cert)?;
        let g1 = schedule.gamma1();
        let gb = gamma_bar.unwrap_or(g1);
        if g1 > gb {
            return Err(Error::precondition("certifier", format!("gamma_1 = {g1} exceeds gamma_bar = {gb}")));
        }
        let drift = match cert.kind() {
            ClassKind::PerturbedStronglyConvex => None,
            _ => Some(euler_drift(model, cert, gb)?),
        };
        let a = a_bound_at(drift.as_ref(), model, cert, g1.as_f64(), x)?;
        let table = StepTable::new(schedule, horizon)?;
        let d = dim as f64;
        let l = model.lipschitz().as_f64();
        let log_w = match &drift {
            Some(dc) => dc.lyapunov.log_value(model, x)?,
            None => f64::NEG_INFINITY,
        };
        let u_x = checked_value(model, x)?.as_f64();
        let pi = std::f64::consts::PI;
        let (dn, log_prefactor) = match (&rate.aux, cert) {
            (RateAux::Poincare { .. }, ClassCertificate::Superexponential { rho, alpha, m_rho }) => {
                let (rho, alpha, m_rho) = (rho.as_f64(), alpha.as_f64(), m_rho.as_f64());
                let pre = d * (alpha + 1.0).ln() + 0.5 * (d + 1.0) * (2.0 * pi).ln() + ln_gamma(d)
                    - d * rho.ln()
                    - ln_gamma(0.5 * (d + 1.0))
                    + a_alpha(rho, alpha, m_rho, l);
                (Some(DnTable::new(&table, l, d, horizon)?), pre)
            }
            (RateAux::Bobkov { .. }, ClassCertificate::LogConcave { eta, m_eta }) => {
                let (eta, m) = (eta.as_f64(), m_eta.as_f64());
                let first = 0.5 * (d + 1.0) * (2.0 * pi).ln() + ln_gamma(d) - d * eta.ln() - ln_gamma(0.5 * (d + 1.0));
                let second = if m > 0.0 { 0.5 * d * pi.ln() + d * m.ln() - ln_gamma(0.5 * d + 1.0) } else { f64::NEG_INFINITY };
                (Some(DnTable::new(&table, l, d, horizon)?), log_add_exp(first, second))
            }
            (RateAux::LogSobolev { m, l1, .. }, _) => {
                let cap = 2.0 / (m.as_f64() + l1.as_f64());
                if g1.as_f64() > cap {
                    return Err(Error::precondition(
                        "certifier",
                        format!("log-Sobolev route needs gamma_1 <= 2/(m+L1) = {cap}"),
                    ));
                }
                (None, 0.0)
            }
            _ => (None, 0.0),
        };
        let log_kappa = rate.log_kappa.as_f64();
        Ok(TvCertifier {
            model,
            cert: cert.clone(),
            route: route.clone(),
            table,
            x: x.to_vec(),
            drift,
            rate,
            a,
            log_w,
            u_x,
            dn,
            log_prefactor,
            d,
            l,
            log_kappa,
        })
    }

    pub fn drift(&self) -> Option<&DriftConstants<T>> {
        self.drift.as_ref()
    }

    pub fn rate(&self) -> &ErgodicityRate<T> {
        &self.rate
    }

    pub fn a_bound(&self) -> T {
        T::lit(self.a)
    }

    pub fn route(&self) -> &Route<T> {
        &self.route
    }

    pub fn schedule(&self) -> &StepSchedule<T> {
        self.table.schedule()
    }

    pub fn start(&self) -> &[T] {
        &self.x
    }

    pub fn model(&self) -> &dyn Potential<T> {
        self.model
    }

    pub fn certificate(&self) -> &ClassCertificate<T> {
        &self.cert
    }

    fn check_p(&self, p: u64) -> Result<()> {
        if p == 0 {
            return Err(Error::precondition("certifier", "bounds need p >= 1"));
        }
        if self.table.schedule().as_constant().is_none() && p > self.table.len() {
            return Err(Error::precondition(
                "certifier",
                format!("p = {p} is beyond the horizon {} the certifier was built for", self.table.len()),
            ));
        }
        Ok(())
    }

    fn min_n(&self) -> u64 {
        match self.rate.route {
            RouteKind::Poincare | RouteKind::Bobkov | RouteKind::LogSobolev => 1,
            _ => 0,
        }
    }

    /// `ln C(δ_x Q^n)`; for the reflection route `ln Λ(n)`.
    pub fn log_c_bound(&self, n: u64) -> Result<f64> {
        if n < self.min_n() {
            return Err(Error::precondition("certifier", format!("route {:?} needs n >= 1", self.rate.route)));
        }
        let g1 = self.table.gamma(1);
        let big_gamma = self.table.gamma_sum(1, n);
        let dc = self.drift.as_ref();
        let lf = |lw: f64| {
            let dc = dc.expect("route with a drift");
            log_f(dc.log_lambda.as_f64(), big_gamma, dc.log_c.as_f64(), g1, lw)
        };
        Ok(match (&self.rate.aux, &self.cert) {
            (RateAux::UserSupplied { c_half, .. }, _) => c_half.as_f64().ln() + lf(self.log_w),
            (RateAux::Poincare { .. }, _) | (RateAux::Bobkov { .. }, _) => {
                self.log_prefactor + self.dn.as_ref().expect("D_n table").log_dn(n) + self.u_x
            }
            (RateAux::ReflectionConvex { theta, log_beta, omega_term, .. }, _) => {
                let lbt = log_beta.as_f64() - theta.as_f64().ln();
                let half = -LN_2 + log_add_exp(lf(self.log_w), lbt);
                log_add_exp(half, LN_2 + lbt + omega_term.as_f64())
            }
            (RateAux::StrongConvex { m, m_s, .. }, _) => {
                let (m, ms) = (m.as_f64(), m_s.as_f64());
                let sq = dist_sq(&self.x, self.model.minimizer()).as_f64().ln();
                (6.0 + 2.0 * (self.d / m + ms * ms).sqrt() + 2.0 * (0.5 * lf(sq)).exp()).ln()
            }
            (RateAux::LogSobolev { m, l1, varpi, osc_u2, .. }, ClassCertificate::PerturbedStronglyConvex { xstar1, sup_grad_u2, .. }) => {
                let (m, l1, w, osc, g2) = (m.as_f64(), l1.as_f64(), varpi.as_f64(), osc_u2.as_f64(), sup_grad_u2.as_f64());
                let gn = self.table.gamma(n);
                let r2 = dist_sq(&self.x, xstar1).as_f64();
                let d = self.d;
                let c2 = l1 * (-w * big_gamma / 2.0).exp() * r2
                    + l1 * gn * (gn + 2.0 / w) * g2 * g2
                    + 2.0 * osc
                    + 2.0 * l1 / w * (1.0 - w * gn) * (2.0 * d + (g1 + 2.0 / w) * g2 * g2)
                    - d * (1.0 + (2.0 * gn * m).ln() - 2.0 * l1 * gn);
                0.5 * c2.max(0.0).ln()
            }
            _ => unreachable!("route and certificate were matched at construction"),
        })
    }

    pub fn c_bound(&self, n: u64) -> Result<T> {
        Ok(T::lit(self.log_c_bound(n)?.exp()))
    }

    fn discretization(&self, n: u64, p: u64) -> f64 {
        let s3 = self.table.cube_sum(n + 1, p);
        let s2 = self.table.sq_sum(n + 1, p);
        std::f64::consts::FRAC_1_SQRT_2 * self.l * (self.a / 3.0 * s3 + self.d * s2).sqrt()
    }

    fn ergodicity(&self, log_c: f64, n: u64, p: u64) -> f64 {
        let g = self.table.gamma_sum(n + 1, p);
        match &self.rate.aux {
            RateAux::ReflectionConvex { theta, log_varpi, .. } => {
                (LN_2 + log_c - theta.as_f64() * g / 4.0).exp() + 4.0 * (log_varpi.as_f64() * g).exp()
            }
            _ => (log_c + self.log_kappa * g).exp(),
        }
    }

    fn raw(&self, n: u64, p: u64) -> f64 {
        match self.log_c_bound(n) {
            Ok(lc) => self.discretization(n, p) + self.ergodicity(lc, n, p),
            Err(_) => f64::INFINITY,
        }
    }

    /// The master bound at `p` with burn-in `n`.
    pub fn bound_at(&self, p: u64, n: u64) -> Result<BoundPoint<T>> {
        self.check_p(p)?;
        if n >= p {
            return Err(Error::precondition("certifier", format!("burn-in n = {n} must be below p = {p}")));
        }
        let lc = self.log_c_bound(n)?;
        let disc = self.discretization(n, p);
        let erg = self.ergodicity(lc, n, p);
        let raw = disc + erg;
        Ok(BoundPoint {
            p,
            n,
            split_degenerate: false,
            discretization: T::lit(disc),
            ergodicity: T::lit(erg),
            log_c: T::lit(lc),
            raw_total: T::lit(raw),
            total: T::lit(raw.min(2.0)),
            clamped: raw > 2.0,
        })
    }

    pub fn bound(&self, p: u64, split: SplitChoice) -> Result<BoundPoint<T>> {
        self.check_p(p)?;
        let rule = match split {
            SplitChoice::Optimize => return self.bound_at(p, self.optimal_n(p)?),
            SplitChoice::KappaGamma => SplitRule::KappaGamma,
            SplitChoice::LogGamma => SplitRule::LogGamma,
        };
        let s = self.table.burnin_split(p, T::lit(self.log_kappa), rule)?;
        let n = s.n.max(self.min_n());
        if n >= p {
            return Err(Error::precondition("certifier", format!("route {:?} needs p >= 2", self.rate.route)));
        }
        let mut pt = self.bound_at(p, n)?;
        pt.split_degenerate = s.degenerate;
        Ok(pt)
    }

    /// The `n < p` minimising the bound (exhaustive up to a size limit, then a candidate search).
    pub fn optimal_n(&self, p: u64) -> Result<u64> {
        self.check_p(p)?;
        let lo = self.min_n();
        if lo >= p {
            return Err(Error::precondition("certifier", format!("route {:?} needs p >= 2", self.rate.route)));
        }
        let mut best = (f64::INFINITY, lo);
        let consider = |n: u64, best: &mut (f64, u64)| {
            let v = self.raw(n, p);
            if v < best.0 || (v == best.0 && n < best.1) {
                *best = (v, n);
            }
        };
        if p <= EXHAUSTIVE_LIMIT {
            for n in lo..p {
                consider(n, &mut best);
            }
            return Ok(best.1);
        }
        // candidate set over the window length m = p − n
        let mut ms: Vec<u64> = vec![1, p - lo];
        for rule in [SplitRule::KappaGamma, SplitRule::LogGamma] {
            if let Ok(s) = self.table.burnin_split(p, T::lit(self.log_kappa), rule) {
                ms.push(p - s.n.max(lo));
            }
        }
        let top = ((p - lo) as f64).ln();
        for i in 0..=2000 {
            let m = (top * i as f64 / 2000.0).exp().round() as u64;
            ms.push(m.clamp(1, p - lo));
        }
        ms.sort_unstable();
        ms.dedup();
        let vals: Vec<f64> = ms.iter().map(|&m| self.raw(p - m, p)).collect();
        let i = (0..ms.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        best = (vals[i], p - ms[i]);
        let (mut a, mut b) = (ms[i.saturating_sub(1)], ms[(i + 1).min(ms.len() - 1)]);
        while b - a > 2 {
            let m1 = a + (b - a) / 3;
            let m2 = b - (b - a) / 3;
            let (f1, f2) = (self.raw(p - m1, p), self.raw(p - m2, p));
            if f1 <= f2 {
                b = m2;
            } else {
                a = m1;
            }
        }
        for m in a..=b {
            consider(p - m, &mut best);
        }
        Ok(best.1)
    }

    pub fn curve(&self, ps: &[u64], split: SplitChoice) -> Result<TvBoundCurve<T>> {
        let points = ps.iter().map(|&p| self.bound(p, split)).collect::<Result<Vec<_>>>()?;
        Ok(TvBoundCurve { route: self.rate.route, schedule: self.table.schedule().clone(), split, points })
    }
}

/// Raw inputs of the bias bound between `π` and the stationary law of the constant-step chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasInputs<T> {
    pub lipschitz: T,
    pub c_quarter: T,
    pub kappa: T,
    pub lambda: T,
    pub c: T,
    pub gamma: T,
    pub v: T,
    pub beta_half: T,
    pub theta_half: T,
    pub dim: usize,
    /// `sup ‖∇U‖ / V^{1/2}`.
    pub grad_norm_v: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasBound<T> {
    pub b: T,
    pub b_sq: T,
    /// `B(γ,v)/γ^{1/2}`, bounded as `γ → 0`.
    pub coefficient: T,
    pub g: T,
}

pub fn bias_bound_b_raw<T: Scalar>(inp: &BiasInputs<T>) -> Result<BiasBound<T>> {
    let f = |v: T| v.as_f64();
    let (l, cq, k, lam, c, g, v) = (f(inp.lipschitz), f(inp.c_quarter), f(inp.kappa), f(inp.lambda), f(inp.c), f(inp.gamma), f(inp.v));
    let (b, th, gn, d) = (f(inp.beta_half), f(inp.theta_half), f(inp.grad_norm_v), inp.dim as f64);
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::domain("certifier", "bias bound", format!("kappa = {k} not in (0,1)")));
    }
    if !(g > 0.0 && th > 0.0 && b >= 0.0 && v >= 0.0 && cq > 0.0) {
        return Err(Error::domain("certifier", "bias bound", "need gamma, theta, C_1/4 > 0 and beta, v >= 0"));
    }
    if !gn.is_finite() {
        return Err(Error::infeasible("certifier", "bias bound", "gradient norm weighted by V^1/2 is not finite"));
    }
    let gg: f64 = super::functions::eval_g(lam, c, g, v)?;
    let b2 = l * l * cq.max(1.0).powi(2) * (1.0 + g) / (1.0 - k).powi(2) * (2.0 * gg + b / th) * (g * d + g * g / 3.0 * gn * gn * gg);
    Ok(BiasBound { b: T::lit(b2.sqrt()), b_sq: T::lit(b2), coefficient: T::lit((b2 / g).sqrt()), g: T::lit(gg) })
}

/// `sup ‖∇U(x)‖ e^{−U(x)/4}` estimated on random rays out to `10·max(1, radius)`.
///
/// Fails when the maximum sits in the outer shell, i.e. the supremum does not look finite.
fn grad_norm_weighted<T: Scalar>(model: &dyn Potential<T>, radius: f64, seed: u64) -> Result<f64> {
    let d = model.dim();
    let r_max = 10.0 * radius.max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = vec![T::zero(); d];
    let (mut inner, mut outer) = (0f64, 0f64);
    let n_dirs = 64 + 2 * d;
    for j in 0..n_dirs {
        let mut dir: Vec<f64> = if j < 2 * d {
            let mut e = vec![0.0; d];
            e[j / 2] = if j % 2 == 0 { 1.0 } else { -1.0 };
            e
        } else {
            (0..d).map(|_| f64::sample_standard_normal(&mut rng)).collect()
        };
        let nrm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|v| *v /= nrm);
        for i in 0..=400 {
            let r = r_max * i as f64 / 400.0;
            let x: Vec<T> = model.minimizer().iter().zip(&dir).map(|(&c, &u)| c + T::lit(u * r)).collect();
            let u = checked_value(model, &x)?.as_f64();
            checked_gradient(model, &x, &mut g)?;
            let w = norm_sq(&g).as_f64().sqrt() * (-u / 4.0).exp();
            if i > 320 {
                outer = outer.max(w);
            } else {
                inner = inner.max(w);
            }
        }
    }
    if !(outer < 0.5 * inner) {
        return Err(Error::infeasible(
            "certifier",
            "bias bound",
            format!("sup |grad U| e^(-U/4) not certifiably finite (outer shell {outer:e} vs interior {inner:e})"),
        ));
    }
    Ok(inner)
}

/// Bias bound for a superexponential potential with drift `V = e^{U/2}`.
///
/// `C_{1/4}` is not explicit and must be supplied; `θ_{1/2}, β_{1/2}` are the continuous
/// drift constants of `V_{1/2}`.
pub fn bias_bound_b<T: Scalar>(
    model: &dyn Potential<T>,
    cert: &ClassCertificate<T>,
    drift: &DriftConstants<T>,
    rate: &ErgodicityRate<T>,
    c_quarter: T,
    gamma: T,
    v: T,
) -> Result<BiasBound<T>> {
    let ClassCertificate::Superexponential { rho, alpha, m_rho } = cert else {
        return Err(Error::config("certifier", "the bias bound needs a superexponential certificate"));
    };
    if gamma > drift.gamma_bar {
        return Err(Error::precondition("certifier", format!("gamma = {gamma} exceeds gamma_bar = {}", drift.gamma_bar)));
    }
    let d = model.dim() as f64;
    let l = model.lipschitz().as_f64();
    let k = (4.0 * d * l / rho.as_f64()).powf(1.0 / (2.0 * (alpha.as_f64() - 1.0))).max(m_rho.as_f64());
    let theta = d * l / 2.0;
    let beta = theta * (l * k * k / 4.0).exp();
    let gn = grad_norm_weighted(model, drift.radius.as_f64().max(k), 0x5eed)?;
    bias_bound_b_raw(&BiasInputs {
        lipschitz: model.lipschitz(),
        c_quarter,
        kappa: rate.kappa,
        lambda: drift.lambda,
        c: drift.c,
        gamma,
        v,
        beta_half: T::lit(beta),
        theta_half: T::lit(theta),
        dim: model.dim(),
        grad_norm_v: T::lit(gn),
    })
}
