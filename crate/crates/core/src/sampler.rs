//! ULA chains, parallel ensembles and Monte-Carlo moment estimates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::certifier::{DriftConstants, Lyapunov};
use crate::error::{Error, Result};
use crate::potentials::{checked_gradient, Potential};
use crate::scalar::{dist_sq, log_add_exp, log_sub_exp, norm_sq, Scalar};
use crate::schedule::StepSchedule;

/// States with a coordinate beyond this magnitude count as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e100;

/// Chains are simulated in blocks of this many and merged in block order.
pub const BLOCK: usize = 1024;

/// Generator for chain `id`: ChaCha8 keyed by `seed`, on stream `id`.
pub fn chain_rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn finite_state<T: Scalar>(x: &[T]) -> bool {
    x.iter().all(|v| v.is_finite() && v.as_f64().abs() <= DIVERGENCE_THRESHOLD)
}

fn diverged<T: Scalar>(chain: usize, step: usize, x: &[T]) -> Error {
    Error::Divergence { chain, step, state: x.iter().map(|v| v.as_f64()).collect() }
}

// x ← x − γ∇U(x) + √(2γ)z, with the gradient written to `grad`
fn step_in_place<T: Scalar>(model: &dyn Potential<T>, x: &mut [T], gamma: T, z: &[T], grad: &mut [T]) -> Result<()> {
    checked_gradient(model, x, grad)?;
    let s = (T::lit(2.0) * gamma).sqrt();
    for ((xi, gi), zi) in x.iter_mut().zip(grad.iter()).zip(z) {
        *xi = *xi - gamma * *gi + s * *zi;
    }
    Ok(())
}

/// One ULA transition `x − γ∇U(x) + √(2γ)z`.
pub fn ula_step<T: Scalar>(model: &dyn Potential<T>, x: &[T], gamma: T, z: &[T]) -> Result<Vec<T>> {
    if !(gamma > T::zero()) {
        return Err(Error::domain("sampler", "ULA step", format!("gamma = {gamma} must be positive")));
    }
    if z.len() != model.dim() || x.len() != model.dim() {
        return Err(Error::domain("sampler", "ULA step", "state and noise must have the model's dimension"));
    }
    let mut out = x.to_vec();
    let mut grad = vec![T::zero(); x.len()];
    step_in_place(model, &mut out, gamma, z, &mut grad)?;
    if !finite_state(&out) {
        return Err(diverged(0, 1, &out));
    }
    Ok(out)
}

/// Running moments of the three chain functionals at one recorded step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentAccumulator {
    pub step: u64,
    pub count: u64,
    mean_sq_dist: f64,
    m2_sq_dist: f64,
    mean_grad_sq: f64,
    m2_grad_sq: f64,
    /// `ln Σ V` and `ln Σ V²`.
    log_sum_v: f64,
    log_sum_v2: f64,
}

/// Mean and standard error of one functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl MomentAccumulator {
    pub fn new(step: u64) -> Self {
        MomentAccumulator {
            step,
            count: 0,
            mean_sq_dist: 0.0,
            m2_sq_dist: 0.0,
            mean_grad_sq: 0.0,
            m2_grad_sq: 0.0,
            log_sum_v: f64::NEG_INFINITY,
            log_sum_v2: f64::NEG_INFINITY,
        }
    }

    pub fn push(&mut self, sq_dist: f64, grad_sq: f64, log_v: f64) {
        self.count += 1;
        let n = self.count as f64;
        let d1 = sq_dist - self.mean_sq_dist;
        self.mean_sq_dist += d1 / n;
        self.m2_sq_dist += d1 * (sq_dist - self.mean_sq_dist);
        let d2 = grad_sq - self.mean_grad_sq;
        self.mean_grad_sq += d2 / n;
        self.m2_grad_sq += d2 * (grad_sq - self.mean_grad_sq);
        self.log_sum_v = log_add_exp(self.log_sum_v, log_v);
        self.log_sum_v2 = log_add_exp(self.log_sum_v2, 2.0 * log_v);
    }

    /// Chan's pairwise merge.
    pub fn merge(&mut self, other: &MomentAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            let step = self.step;
            *self = other.clone();
            self.step = step;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let combine = |ma: f64, m2a: f64, mb: f64, m2b: f64| {
            let delta = mb - ma;
            (ma + delta * nb / n, m2a + m2b + delta * delta * na * nb / n)
        };
        (self.mean_sq_dist, self.m2_sq_dist) = combine(self.mean_sq_dist, self.m2_sq_dist, other.mean_sq_dist, other.m2_sq_dist);
        (self.mean_grad_sq, self.m2_grad_sq) = combine(self.mean_grad_sq, self.m2_grad_sq, other.mean_grad_sq, other.m2_grad_sq);
        self.log_sum_v = log_add_exp(self.log_sum_v, other.log_sum_v);
        self.log_sum_v2 = log_add_exp(self.log_sum_v2, other.log_sum_v2);
        self.count += other.count;
    }

    fn estimate(&self, mean: f64, m2: f64) -> Estimate {
        let n = self.count as f64;
        let var = if self.count > 1 { (m2 / (n - 1.0)).max(0.0) } else { 0.0 };
        Estimate { mean, se: (var / n).sqrt() }
    }

    /// `E‖X − x⋆‖²`.
    pub fn sq_dist(&self) -> Estimate {
        self.estimate(self.mean_sq_dist, self.m2_sq_dist)
    }

    /// `E‖∇U(X)‖²`.
    pub fn grad_sq(&self) -> Estimate {
        self.estimate(self.mean_grad_sq, self.m2_grad_sq)
    }

    /// `ln E[V(X)]` and the log of its standard error.
    pub fn log_v(&self) -> (f64, f64) {
        let ln_n = (self.count as f64).ln();
        let log_mean = self.log_sum_v - ln_n;
        let log_second = self.log_sum_v2 - ln_n;
        if self.count < 2 || log_mean == f64::NEG_INFINITY {
            return (log_mean, f64::NEG_INFINITY);
        }
        // Var = n/(n−1)·(E[V²] − E[V]²)
        let log_var = log_sub_exp(log_second, 2.0 * log_mean) + ln_n - ((self.count - 1) as f64).ln();
        (log_mean, 0.5 * (log_var - ln_n))
    }

    /// `E[V(X)]` with its standard error, in linear scale (may overflow to `inf`).
    pub fn v(&self) -> Estimate {
        let (m, s) = self.log_v();
        Estimate { mean: m.exp(), se: s.exp() }
    }

    /// One CSV row: `step, n, mean_sq_dist, se, mean_grad_sq, se, mean_V_log, se`.
    ///
    /// The last standard error is that of `ln E[V]` by the delta method. `mean_V_log` is `−inf`
    /// when no Lyapunov function was tracked.
    pub fn csv_row(&self) -> [f64; 8] {
        let (sd, gs) = (self.sq_dist(), self.grad_sq());
        let (lm, ls) = self.log_v();
        let se_log = if ls == f64::NEG_INFINITY { 0.0 } else { (ls - lm).exp() };
        [self.step as f64, self.count as f64, sd.mean, sd.se, gs.mean, gs.se, lm, se_log]
    }

    pub const CSV_HEADER: [&'static str; 8] =
        ["step", "n", "mean_sq_dist", "se_sq_dist", "mean_grad_sq", "se_grad_sq", "mean_V_log", "se_V_log"];
}

/// A set of independent ULA chains sharing a start point and schedule.
pub struct ChainEnsemble<'m, T: Scalar> {
    pub model: &'m dyn Potential<T>,
    pub schedule: StepSchedule<T>,
    pub n_chains: usize,
    pub start: Vec<T>,
    pub seed: u64,
    /// Schedule offset: the first simulated step uses `γ_{step_index+1}`.
    pub step_index: u64,
}

/// Result of [`run_chains`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunOutput<T> {
    /// One accumulator per entry of `record_at`, in the same order.
    pub moments: Vec<MomentAccumulator>,
    /// Final states, chain-major.
    pub states: Vec<Vec<T>>,
}

impl<'m, T: Scalar> ChainEnsemble<'m, T> {
    pub fn new(model: &'m dyn Potential<T>, schedule: StepSchedule<T>, n_chains: usize, start: Vec<T>, seed: u64) -> Result<Self> {
        schedule.validate()?;
        if n_chains == 0 {
            return Err(Error::precondition("sampler", "n_chains must be at least 1"));
        }
        if start.len() != model.dim() {
            return Err(Error::domain(
                "sampler",
                "ensemble",
                format!("start has dimension {}, model has {}", start.len(), model.dim()),
            ));
        }
        Ok(ChainEnsemble { model, schedule, n_chains, start, seed, step_index: 0 })
    }
}

fn functionals<T: Scalar>(
    model: &dyn Potential<T>,
    x: &[T],
    grad: &mut [T],
    lyapunov: Option<&Lyapunov<T>>,
) -> Result<(f64, f64, f64)> {
    checked_gradient(model, x, grad)?;
    let sq = dist_sq(x, model.minimizer()).as_f64();
    let gs = norm_sq(grad).as_f64();
    let lv = match lyapunov {
        Some(l) => l.log_value(model, x)?,
        None => f64::NEG_INFINITY,
    };
    Ok((sq, gs, lv))
}

/// Advances every chain `p` steps, recording moments at the steps in `record_at`.
///
/// Chain `i` draws its noise from [`chain_rng`]`(seed, i)`, so the output depends only on
/// `(seed, n_chains, schedule, p)` and not on the number of worker threads.
pub fn run_chains<T: Scalar>(
    ens: &ChainEnsemble<'_, T>,
    p: u64,
    record_at: &[u64],
    lyapunov: Option<&Lyapunov<T>>,
) -> Result<RunOutput<T>> {
    if let Some(&bad) = record_at.iter().find(|&&k| k > p) {
        return Err(Error::precondition("sampler", format!("record step {bad} beyond p = {p}")));
    }
    let d = ens.model.dim();
    let n_blocks = ens.n_chains.div_ceil(BLOCK);
    let gammas: Vec<T> = (1..=p).map(|k| ens.schedule.gamma(ens.step_index + k)).collect();
    // record slot for each step, if any
    let mut slots: Vec<Vec<usize>> = vec![Vec::new(); p as usize + 1];
    for (i, &k) in record_at.iter().enumerate() {
        slots[k as usize].push(i);
    }

    let blocks: Vec<Result<(Vec<MomentAccumulator>, Vec<Vec<T>>)>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc: Vec<MomentAccumulator> = record_at.iter().map(|&k| MomentAccumulator::new(k)).collect();
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(ens.n_chains);
            let mut finals = Vec::with_capacity(hi - lo);
            let mut grad = vec![T::zero(); d];
            let mut z = vec![T::zero(); d];
            for chain in lo..hi {
                let mut rng = chain_rng(ens.seed, chain as u64);
                let mut x = ens.start.clone();
                let record = |acc: &mut Vec<MomentAccumulator>, k: usize, x: &[T], grad: &mut [T]| -> Result<()> {
                    if !slots[k].is_empty() {
                        let (sq, gs, lv) = functionals(ens.model, x, grad, lyapunov)?;
                        for &s in &slots[k] {
                            acc[s].push(sq, gs, lv);
                        }
                    }
                    Ok(())
                };
                record(&mut acc, 0, &x, &mut grad)?;
                for (k, &g) in gammas.iter().enumerate() {
                    for zi in z.iter_mut() {
                        *zi = T::sample_standard_normal(&mut rng);
                    }
                    step_in_place(ens.model, &mut x, g, &z, &mut grad).map_err(|e| match e {
                        Error::Evaluation { .. } => diverged(chain, k + 1, &x),
                        other => other,
                    })?;
                    if !finite_state(&x) {
                        return Err(diverged(chain, k + 1, &x));
                    }
                    record(&mut acc, k + 1, &x, &mut grad)?;
                }
                finals.push(x);
            }
            Ok((acc, finals))
        })
        .collect();

    let mut moments: Vec<MomentAccumulator> = record_at.iter().map(|&k| MomentAccumulator::new(k)).collect();
    let mut states = Vec::with_capacity(ens.n_chains);
    for block in blocks {
        let (acc, finals) = block?;
        for (m, a) in moments.iter_mut().zip(&acc) {
            m.merge(a);
        }
        states.extend(finals);
    }
    Ok(RunOutput { moments, states })
}

/// One point of a drift check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftCheckRow {
    pub point: Vec<f64>,
    pub log_v: f64,
    /// Monte-Carlo `R_γV(x)`.
    pub estimate: f64,
    pub se: f64,
    /// `λ^γ V(x) + γc`.
    pub bound: f64,
    /// `estimate − bound`.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftCheck {
    pub gamma: f64,
    pub n_mc: usize,
    pub rows: Vec<DriftCheckRow>,
    /// Every row has `margin ≤ 3·se`.
    pub pass: bool,
}

/// Monte-Carlo check of `R_γV ≤ λ^γV + γc` at each point.
pub fn estimate_drift_violation<T: Scalar>(
    model: &dyn Potential<T>,
    drift: &DriftConstants<T>,
    points: &[Vec<T>],
    gamma: T,
    n_mc: usize,
    seed: u64,
) -> Result<DriftCheck> {
    if n_mc == 0 {
        return Err(Error::precondition("sampler", "n_mc must be at least 1"));
    }
    let g = gamma.as_f64();
    if !(g > 0.0 && g <= drift.gamma_bar.as_f64()) {
        return Err(Error::precondition(
            "sampler",
            format!("gamma = {g} must lie in (0, gamma_bar = {}]", drift.gamma_bar),
        ));
    }
    let d = model.dim();
    let (ll, lc) = (drift.log_lambda.as_f64(), drift.log_c.as_f64());
    let rows: Vec<Result<DriftCheckRow>> = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            if x.len() != d {
                return Err(Error::domain("sampler", "drift check", "point dimension differs from the model's"));
            }
            let log_v = drift.lyapunov.log_value(model, x)?;
            let mut rng = chain_rng(seed, i as u64);
            let mut acc = MomentAccumulator::new(1);
            let mut grad = vec![T::zero(); d];
            let mut z = vec![T::zero(); d];
            for _ in 0..n_mc {
                for zi in z.iter_mut() {
                    *zi = T::sample_standard_normal(&mut rng);
                }
                let mut y = x.clone();
                step_in_place(model, &mut y, gamma, &z, &mut grad)?;
                if !finite_state(&y) {
                    return Err(diverged(i, 1, &y));
                }
                acc.push(0.0, 0.0, drift.lyapunov.log_value(model, &y)?);
            }
            let (lm, ls) = acc.log_v();
            let log_bound = log_add_exp(g * ll + log_v, g.ln() + lc);
            let (estimate, se, bound) = (lm.exp(), ls.exp(), log_bound.exp());
            let margin = estimate - bound;
            if !(margin.is_finite() && se.is_finite()) {
                return Err(Error::NumericRange {
                    module: "sampler",
                    message: format!("V at point {i} overflows (ln E[V] = {lm:.3e}, ln bound = {log_bound:.3e})"),
                });
            }
            Ok(DriftCheckRow {
                point: x.iter().map(|v| v.as_f64()).collect(),
                log_v,
                estimate,
                se,
                bound,
                margin,
                pass: margin <= 3.0 * se,
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(DriftCheck { gamma: g, n_mc, rows, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certifier::euler_drift;
    use crate::potentials::{BuiltinPotential, ClassCertificate};
    use approx::assert_relative_eq;

    #[test]
    fn deterministic_step() {
        let u = BuiltinPotential::isotropic_quadratic(2).unwrap();
        let x = ula_step(&u, &[1.0, 0.0], 0.1, &[0.0, 0.0]).unwrap();
        assert_relative_eq!(x[0], 0.9, epsilon = 1e-15);
        assert_eq!(x[1], 0.0);
        assert!(ula_step(&u, &[1.0, 0.0], 0.0, &[0.0, 0.0]).is_err());
        assert!(matches!(ula_step(&u, &[1e101, 0.0], 0.1, &[0.0, 0.0]), Err(Error::Divergence { .. })));
    }

    #[test]
    fn zero_steps_records_start() {
        let u = BuiltinPotential::isotropic_quadratic(1).unwrap();
        let ens = ChainEnsemble::new(&u, StepSchedule::constant(0.1).unwrap(), 1, vec![3.0], 7).unwrap();
        let out = run_chains(&ens, 0, &[0], Some(&Lyapunov::SqDist)).unwrap();
        assert_eq!(out.states, vec![vec![3.0]]);
        assert_eq!(out.moments[0].sq_dist().mean, 9.0);
        assert_relative_eq!(out.moments[0].v().mean, 9.0, epsilon = 1e-12);
        assert!(run_chains(&ens, 2, &[3], None).is_err());
    }

    #[test]
    fn merge_matches_sequential() {
        let mut all = MomentAccumulator::new(0);
        let mut a = MomentAccumulator::new(0);
        let mut b = MomentAccumulator::new(0);
        for i in 0..1000 {
            let x = (i as f64 * 0.37).sin() * 3.0 + 1.0;
            let (s, g, l) = (x * x, x.abs(), x);
            all.push(s, g, l);
            if i < 313 { a.push(s, g, l) } else { b.push(s, g, l) }
        }
        a.merge(&b);
        assert_relative_eq!(a.sq_dist().mean, all.sq_dist().mean, max_relative = 1e-10);
        assert_relative_eq!(a.sq_dist().se, all.sq_dist().se, max_relative = 1e-10);
        assert_relative_eq!(a.grad_sq().se, all.grad_sq().se, max_relative = 1e-10);
        assert_relative_eq!(a.log_v().0, all.log_v().0, max_relative = 1e-10);
        assert_relative_eq!(a.log_v().1, all.log_v().1, max_relative = 1e-10);
    }

    #[test]
    fn one_step_law_matches() {
        let u = BuiltinPotential::isotropic_quadratic(1).unwrap();
        let g = 0.2;
        let ens = ChainEnsemble::new(&u, StepSchedule::constant(g).unwrap(), 100_000, vec![1.5], 11).unwrap();
        let out = run_chains(&ens, 1, &[1], None).unwrap();
        let n = out.states.len() as f64;
        let mean = out.states.iter().map(|s| s[0]).sum::<f64>() / n;
        let var = out.states.iter().map(|s| (s[0] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se_mean = (2.0 * g / n).sqrt();
        assert!((mean - (1.0 - g) * 1.5).abs() < 5.0 * se_mean);
        let se_var = 2.0 * g * (2.0 / (n - 1.0)).sqrt();
        assert!((var - 2.0 * g).abs() < 5.0 * se_var);
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let u = BuiltinPotential::huber(2, 1.0).unwrap();
        let ens = ChainEnsemble::new(&u, StepSchedule::polynomial(0.3, 0.5).unwrap(), 2500, vec![1.0, -2.0], 3).unwrap();
        let a = run_chains(&ens, 40, &[0, 10, 40], None).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_chains(&ens, 40, &[0, 10, 40], None).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn strong_drift_holds_at_two() {
        let u = BuiltinPotential::isotropic_quadratic(1).unwrap();
        let cert = ClassCertificate::StronglyConvexOutsideBall { m: 1.0, m_s: 0.0 };
        let dc = euler_drift(&u, &cert, 0.5).unwrap();
        let rep = estimate_drift_violation(&u, &dc, &[vec![2.0], vec![0.0]], 0.1, 20_000, 5).unwrap();
        // exact one-step moment at x = 2: 1.8² + 0.2
        assert!((rep.rows[0].estimate - 3.44).abs() < 5.0 * rep.rows[0].se);
        assert!(rep.rows[0].margin < 0.0);
        assert!(rep.pass);
        assert!(estimate_drift_violation(&u, &dc, &[vec![2.0]], 0.1, 0, 5).is_err());
        assert!(estimate_drift_violation(&u, &dc, &[vec![2.0]], 0.6, 10, 5).is_err());
    }
}
