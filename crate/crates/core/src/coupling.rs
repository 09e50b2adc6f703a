//! Reflection coupling of two diffusions `dX = b(X)dt + dB` under Euler discretisation.
//!
//! Langevin targets use the rescaled drift `b = −∇U/2`; times are then on the rescaled
//! clock `s`, which corresponds to `t = s/2` for `dY = −∇U(Y)dt + √2 dB`.

use rayon::prelude::*;
use serde::Serialize;

use crate::certifier::CouplingCurve;
use crate::error::{Error, Result};
use crate::potentials::{checked_gradient, ClassCertificate, Potential};
use crate::sampler::{chain_rng, DIVERGENCE_THRESHOLD};
use crate::scalar::{dist_sq, dot, Scalar};
use crate::special::norm_sf;

/// A vector field `b : ℝ^d → ℝ^d`.
pub trait DriftField<T: Scalar>: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[T], out: &mut [T]) -> Result<()>;
}

/// `b = −∇U/2`.
pub struct LangevinDrift<'m, T: Scalar> {
    pub model: &'m dyn Potential<T>,
}

impl<T: Scalar> DriftField<T> for LangevinDrift<'_, T> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn eval(&self, x: &[T], out: &mut [T]) -> Result<()> {
        checked_gradient(self.model, x, out)?;
        let h = T::lit(-0.5);
        out.iter_mut().for_each(|v| *v = *v * h);
        Ok(())
    }
}

/// `b(v) = −a·v`.
pub struct LinearDrift<T> {
    pub dim: usize,
    pub rate: T,
}

impl<T: Scalar> DriftField<T> for LinearDrift<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[T], out: &mut [T]) -> Result<()> {
        for (o, v) in out.iter_mut().zip(x) {
            *o = -self.rate * *v;
        }
        Ok(())
    }
}

/// The pair `(X_t, Y_t)`; once coupled the two stay equal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupledState<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub coupled: bool,
    pub tau_c: Option<T>,
    /// Current time.
    pub t: T,
}

impl<T: Scalar> CoupledState<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Self {
        let coupled = x == y;
        let tau_c = if coupled { Some(T::zero()) } else { None };
        CoupledState { x, y, coupled, tau_c, t: T::zero() }
    }
}

/// Default merge radius `0.1·√dt`.
pub fn default_merge_radius<T: Scalar>(dt: T) -> T {
    T::lit(0.1) * dt.sqrt()
}

/// Converts a time on the rescaled clock (`b = −∇U/2`) to the clock of `dY = −∇U dt + √2 dB`.
pub fn rescaled_to_langevin_time<T: Scalar>(s: T) -> T {
    s / T::lit(2.0)
}

struct Scratch<T> {
    bx: Vec<T>,
    by: Vec<T>,
    e: Vec<T>,
    zr: Vec<T>,
    dp: Vec<T>,
}

impl<T: Scalar> Scratch<T> {
    fn new(d: usize) -> Self {
        Scratch { bx: vec![T::zero(); d], by: vec![T::zero(); d], e: vec![T::zero(); d], zr: vec![T::zero(); d], dp: vec![T::zero(); d] }
    }
}

// one coupled Euler step in place; returns whether the pair merged during it
fn step_pair<T: Scalar>(
    x: &mut [T],
    y: &mut [T],
    coupled: bool,
    b: &dyn DriftField<T>,
    dt: T,
    z: &[T],
    r: T,
    s: &mut Scratch<T>,
) -> Result<bool> {
    let sq = dt.sqrt();
    b.eval(x, &mut s.bx)?;
    if coupled {
        for ((xi, bi), zi) in x.iter_mut().zip(&s.bx).zip(z) {
            *xi = *xi + *bi * dt + sq * *zi;
        }
        y.copy_from_slice(x);
        return Ok(false);
    }
    b.eval(y, &mut s.by)?;
    // e = (X−Y)/‖X−Y‖, with e(0) = 0
    let mut norm = T::zero();
    for ((ei, xi), yi) in s.e.iter_mut().zip(x.iter()).zip(y.iter()) {
        *ei = *xi - *yi;
        norm = norm + *ei * *ei;
    }
    let norm = norm.sqrt();
    s.dp.copy_from_slice(&s.e);
    let d_prev = &s.dp;
    if norm > T::zero() {
        s.e.iter_mut().for_each(|v| *v = *v / norm);
    } else {
        s.e.iter_mut().for_each(|v| *v = T::zero());
    }
    let ez = dot(&s.e, z);
    for ((zr, zi), ei) in s.zr.iter_mut().zip(z).zip(&s.e) {
        *zr = *zi - T::lit(2.0) * ez * *ei;
    }
    #[cfg(debug_assertions)]
    {
        let tol = T::lit(1e3) * T::epsilon() * (T::one() + crate::scalar::norm_sq(z));
        debug_assert!((crate::scalar::norm_sq(&s.zr) - crate::scalar::norm_sq(z)).abs() <= tol, "reflection must preserve norm");
        let ezr = dot(&s.e, &s.zr);
        for ((zr, zi), ei) in s.zr.iter().zip(z).zip(&s.e) {
            let back = *zr - T::lit(2.0) * ezr * *ei;
            debug_assert!((back - *zi).abs() <= tol.sqrt() * T::lit(10.0), "reflection must be an involution");
        }
    }
    for i in 0..x.len() {
        x[i] = x[i] + s.bx[i] * dt + sq * z[i];
        y[i] = y[i] + s.by[i] * dt + sq * s.zr[i];
    }
    // merge test on the difference process D = X − Y
    let mut dd = T::zero();
    let mut dn2 = T::zero();
    for i in 0..x.len() {
        let dn = x[i] - y[i];
        dd = dd + dn * d_prev[i];
        dn2 = dn2 + dn * dn;
    }
    let r2 = r * r;
    if dn2 <= r2 {
        return Ok(true);
    }
    if dd < T::zero() {
        // distance from the origin to the segment [D, D']
        let dp2 = norm * norm;
        let seg2 = dp2 + dn2 - T::lit(2.0) * dd;
        let u = (dp2 - dd) / seg2;
        let u = u.max(T::zero()).min(T::one());
        let mut m2 = T::zero();
        for i in 0..x.len() {
            let m = d_prev[i] + u * ((x[i] - y[i]) - d_prev[i]);
            m2 = m2 + m * m;
        }
        if m2 <= r2 {
            return Ok(true);
        }
    }
    Ok(false)
}

fn check_finite<T: Scalar>(v: &[T]) -> bool {
    v.iter().all(|a| a.is_finite() && a.as_f64().abs() <= DIVERGENCE_THRESHOLD)
}

/// One Euler step of the reflection coupling.
///
/// `X' = X + b(X)dt + √dt·z`, `Y' = Y + b(Y)dt + √dt·(z − 2⟨e,z⟩e)` with `e = (X−Y)/‖X−Y‖`.
/// The pair merges (`Y' = X'`) when `‖X'−Y'‖ ≤ merge_radius` or when the segment between
/// consecutive differences passes within `merge_radius` of the origin.
pub fn reflection_step<T: Scalar>(
    state: &CoupledState<T>,
    b: &dyn DriftField<T>,
    dt: T,
    z: &[T],
    merge_radius: T,
) -> Result<CoupledState<T>> {
    if !(dt > T::zero()) {
        return Err(Error::domain("coupling", "reflection step", format!("dt = {dt} must be positive")));
    }
    let d = b.dim();
    if state.x.len() != d || state.y.len() != d || z.len() != d {
        return Err(Error::domain("coupling", "reflection step", "state, noise and drift dimensions differ"));
    }
    let mut next = state.clone();
    let mut scratch = Scratch::new(d);
    let merged = step_pair(&mut next.x, &mut next.y, state.coupled, b, dt, z, merge_radius, &mut scratch)?;
    next.t = state.t + dt;
    if merged {
        next.y = next.x.clone();
        next.coupled = true;
        next.tau_c = Some(next.t);
    }
    if !(check_finite(&next.x) && check_finite(&next.y)) {
        return Err(Error::Divergence { chain: 0, step: 0, state: next.x.iter().map(|v| v.as_f64()).collect() });
    }
    Ok(next)
}

fn lex_less<T: Scalar>(a: &[T], b: &[T]) -> bool {
    for (u, v) in a.iter().zip(b) {
        if u < v {
            return true;
        }
        if u > v {
            return false;
        }
    }
    false
}

/// Simulation settings for coupling experiments.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingParams<T> {
    pub dt: T,
    pub n_runs: usize,
    /// Defaults to [`default_merge_radius`].
    pub merge_radius: Option<T>,
    pub seed: u64,
    /// Repeat at `dt/2` and compare.
    pub halving_guard: bool,
}

/// Coupling step of each run (`None` when it never coupled before the horizon).
fn simulate<T: Scalar>(
    b: &dyn DriftField<T>,
    x: &[T],
    y: &[T],
    dt: T,
    n_steps: u64,
    n_runs: usize,
    r: T,
    seed: u64,
) -> Result<Vec<Option<u64>>> {
    let d = b.dim();
    let runs: Vec<Result<Option<u64>>> = (0..n_runs)
        .into_par_iter()
        .map(|run| {
            if x == y {
                return Ok(Some(0));
            }
            let mut rng = chain_rng(seed, run as u64);
            let (mut a, mut c) = (x.to_vec(), y.to_vec());
            let mut z = vec![T::zero(); d];
            let mut scratch = Scratch::new(d);
            for k in 1..=n_steps {
                for zi in z.iter_mut() {
                    *zi = T::sample_standard_normal(&mut rng);
                }
                // the lexicographically smaller state takes the raw increment
                let merged = if lex_less(&c, &a) {
                    step_pair(&mut c, &mut a, false, b, dt, &z, r, &mut scratch)?
                } else {
                    step_pair(&mut a, &mut c, false, b, dt, &z, r, &mut scratch)?
                };
                if !(check_finite(&a) && check_finite(&c)) {
                    return Err(Error::Divergence { chain: run, step: k as usize, state: a.iter().map(|v| v.as_f64()).collect() });
                }
                if merged {
                    return Ok(Some(k));
                }
            }
            Ok(None)
        })
        .collect();
    runs.into_iter().collect()
}

/// `P(τ_c > t) ≤ 2Φ(‖x−y‖/(2√t)) − 1` for the driftless pair, valid for contracting drifts.
pub fn coupling_tail_bound(distance: f64, t: f64) -> f64 {
    if distance == 0.0 {
        0.0
    } else if t <= 0.0 {
        1.0
    } else {
        1.0 - 2.0 * norm_sf(distance / (2.0 * t.sqrt()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub t: f64,
    pub empirical_tail: f64,
    pub se: f64,
    pub analytic_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub dt: f64,
    pub n_runs: usize,
    pub merge_radius: f64,
    pub rows: Vec<TailRow>,
    /// Same experiment at `dt/2`, when the guard ran.
    pub halved: Option<Vec<TailRow>>,
    /// Largest `|P_dt − P_{dt/2}| / √(se² + se'²)` over the grid.
    pub max_shift_se: Option<f64>,
    /// Set when the shift exceeds 2 standard errors anywhere.
    pub dt_sensitive: bool,
}

fn tail_rows(taus: &[Option<u64>], dt: f64, t_grid: &[f64], distance: f64) -> Vec<TailRow> {
    let n = taus.len() as f64;
    t_grid
        .iter()
        .map(|&t| {
            // coupled by time t ⇔ k·dt ≤ t
            let last = (t / dt + 1e-9).floor() as u64;
            let alive = taus.iter().filter(|k| k.map(|k| k > last).unwrap_or(true)).count() as f64;
            let p = alive / n;
            TailRow { t, empirical_tail: p, se: (p * (1.0 - p) / n).sqrt(), analytic_bound: coupling_tail_bound(distance, t) }
        })
        .collect()
}

fn check_grid(t_grid: &[f64], dt: f64) -> Result<()> {
    if t_grid.is_empty() || t_grid[0] < 0.0 || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::precondition("coupling", "t_grid must be nonempty, nonnegative and strictly increasing"));
    }
    let mut spacing = t_grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if t_grid[0] > 0.0 {
        spacing = spacing.min(t_grid[0]);
    }
    if !(dt > 0.0 && dt <= spacing / 10.0 * (1.0 + 1e-12)) {
        return Err(Error::precondition("coupling", format!("dt = {dt} must be positive and at most a tenth of the grid spacing {spacing}")));
    }
    Ok(())
}

/// Empirical survival function of the coupling time on `t_grid`, with the analytic tail bound.
pub fn coupling_tail<T: Scalar>(
    b: &dyn DriftField<T>,
    x: &[T],
    y: &[T],
    t_grid: &[f64],
    params: &CouplingParams<T>,
) -> Result<TailReport> {
    let dt = params.dt.as_f64();
    check_grid(t_grid, dt)?;
    if params.n_runs == 0 {
        return Err(Error::precondition("coupling", "n_runs must be at least 1"));
    }
    if x.len() != b.dim() || y.len() != b.dim() {
        return Err(Error::domain("coupling", "coupling tail", "start points must match the drift dimension"));
    }
    let distance = dist_sq(x, y).as_f64().sqrt();
    let t_max = *t_grid.last().unwrap();
    let run = |dt: T| -> Result<(Vec<TailRow>, f64)> {
        let r = params.merge_radius.unwrap_or_else(|| default_merge_radius(dt));
        let n_steps = (t_max / dt.as_f64() - 1e-9).ceil().max(0.0) as u64;
        let taus = simulate(b, x, y, dt, n_steps, params.n_runs, r, params.seed)?;
        Ok((tail_rows(&taus, dt.as_f64(), t_grid, distance), r.as_f64()))
    };
    let (rows, merge_radius) = run(params.dt)?;
    let (halved, max_shift_se, dt_sensitive) = if params.halving_guard {
        let (h, _) = run(params.dt / T::lit(2.0))?;
        let shift = rows
            .iter()
            .zip(&h)
            .map(|(a, b)| {
                let diff = (a.empirical_tail - b.empirical_tail).abs();
                let se = (a.se * a.se + b.se * b.se).sqrt();
                if diff == 0.0 {
                    0.0
                } else if se == 0.0 {
                    f64::INFINITY
                } else {
                    diff / se
                }
            })
            .fold(0.0, f64::max);
        (Some(h), Some(shift), shift > 2.0)
    } else {
        (None, None, false)
    };
    Ok(TailReport { dt, n_runs: params.n_runs, merge_radius, rows, halved, max_shift_se, dt_sensitive })
}

/// Discretisation allowance added to the empirical coupling probability in comparisons.
pub const DISCRETIZATION_ALLOWANCE: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingTvRow {
    /// Rescaled time `s`.
    pub t: f64,
    /// The same instant on the unscaled Langevin clock.
    pub t_langevin: f64,
    pub empirical_tail: f64,
    pub se: f64,
    pub analytic_bound: f64,
    /// Bound on `‖P_s(x,·) − P_s(y,·)‖` (L¹ convention), unclamped.
    pub theorem_curve: f64,
    /// `min(theorem_curve, 2)`.
    pub theorem_curve_clamped: f64,
    /// `2·P(τ_c > s) ≤ curve + 2(3·se + allowance)`.
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingTvReport {
    pub curve: CouplingCurve,
    pub rows: Vec<CouplingTvRow>,
    pub tail: TailReport,
    pub pass: bool,
}

/// Coupling-inequality TV estimate for the rescaled Langevin diffusion, against the
/// diffusion theorem's curve for the certificate's class.
pub fn tv_from_coupling<T: Scalar>(
    model: &dyn Potential<T>,
    cert: &ClassCertificate<T>,
    x: &[T],
    y: &[T],
    t_grid: &[f64],
    params: &CouplingParams<T>,
) -> Result<CouplingTvReport> {
    let curve = CouplingCurve::new(model, cert, x, y)?;
    let drift = LangevinDrift { model };
    let tail = coupling_tail(&drift, x, y, t_grid, params)?;
    let rows: Vec<CouplingTvRow> = tail
        .rows
        .iter()
        .map(|r| {
            let c = curve.value(r.t);
            CouplingTvRow {
                t: r.t,
                t_langevin: rescaled_to_langevin_time(r.t),
                empirical_tail: r.empirical_tail,
                se: r.se,
                analytic_bound: r.analytic_bound,
                theorem_curve: c,
                theorem_curve_clamped: c.min(2.0),
                pass: 2.0 * r.empirical_tail <= c + 2.0 * (3.0 * r.se + DISCRETIZATION_ALLOWANCE),
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(CouplingTvReport { curve, rows, tail, pass })
}

/// Independent Euler paths of `dX = b(X)dt + dB` (no coupling), for marginal comparisons.
pub fn euler_paths<T: Scalar>(b: &dyn DriftField<T>, x: &[T], dt: T, n_steps: u64, n_runs: usize, seed: u64) -> Result<Vec<Vec<T>>> {
    let d = b.dim();
    (0..n_runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = chain_rng(seed, run as u64);
            let mut a = x.to_vec();
            let mut g = vec![T::zero(); d];
            let sq = dt.sqrt();
            for _ in 0..n_steps {
                b.eval(&a, &mut g)?;
                for (ai, gi) in a.iter_mut().zip(&g) {
                    let z = T::sample_standard_normal(&mut rng);
                    *ai = *ai + *gi * dt + sq * z;
                }
            }
            Ok(a)
        })
        .collect()
}

/// Final states `(X, Y)` of coupled runs after `n_steps`, with the same seed policy as
/// [`coupling_tail`].
pub fn coupled_paths<T: Scalar>(
    b: &dyn DriftField<T>,
    x: &[T],
    y: &[T],
    dt: T,
    n_steps: u64,
    n_runs: usize,
    seed: u64,
) -> Result<Vec<(Vec<T>, Vec<T>)>> {
    let d = b.dim();
    let r = default_merge_radius(dt);
    (0..n_runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = chain_rng(seed, run as u64);
            let (mut a, mut c) = (x.to_vec(), y.to_vec());
            let mut coupled = a == c;
            let mut z = vec![T::zero(); d];
            let mut scratch = Scratch::new(d);
            for _ in 0..n_steps {
                for zi in z.iter_mut() {
                    *zi = T::sample_standard_normal(&mut rng);
                }
                // the X component always takes the raw increment here, so its law is Euler's
                let merged = step_pair(&mut a, &mut c, coupled, b, dt, &z, r, &mut scratch)?;
                if merged {
                    c.copy_from_slice(&a);
                    coupled = true;
                }
            }
            Ok((a, c))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::BuiltinPotential;
    use approx::assert_relative_eq;

    #[test]
    fn hand_step_moves_along_e() {
        let b = LinearDrift { dim: 2, rate: 0.0 };
        let s = CoupledState::new(vec![1.0, 0.0], vec![-1.0, 0.0]);
        let n = reflection_step(&s, &b, 0.01, &[1.0, 0.0], 0.0).unwrap();
        assert_relative_eq!(n.x[0] - n.y[0], 2.2, epsilon = 1e-14);
        assert_eq!(n.x[1] - n.y[1], 0.0);
        assert!(!n.coupled);
        // orthogonal noise is shared
        let n = reflection_step(&s, &b, 0.01, &[0.0, 1.0], 0.0).unwrap();
        assert_relative_eq!(n.x[1], n.y[1], epsilon = 1e-15);
    }

    #[test]
    fn coupled_pair_moves_together() {
        let b = LinearDrift { dim: 1, rate: 0.5 };
        let s = CoupledState::new(vec![0.3], vec![0.3]);
        assert!(s.coupled);
        let n = reflection_step(&s, &b, 0.01, &[0.7], 0.001).unwrap();
        assert_eq!(n.x, n.y);
    }

    #[test]
    fn crossing_couples_in_one_dimension() {
        let b = LinearDrift { dim: 1, rate: 0.0 };
        let s = CoupledState::new(vec![0.05], vec![-0.05]);
        // D = 0.1 → 0.1 − 2·0.1·1 = −0.1: sign change
        let n = reflection_step(&s, &b, 0.01, &[-1.0], 0.001).unwrap();
        assert!(n.coupled);
        assert_eq!(n.tau_c, Some(0.01));
        assert_eq!(n.x, n.y);
    }

    #[test]
    fn tail_bound_values() {
        assert_eq!(coupling_tail_bound(0.0, 1.0), 0.0);
        assert_relative_eq!(coupling_tail_bound(2.0, 1.0), 0.682_689_492_137_085_9, epsilon = 1e-15);
    }

    #[test]
    fn identical_starts_never_survive() {
        let b = LinearDrift { dim: 1, rate: 0.5 };
        let p = CouplingParams { dt: 0.01, n_runs: 10, merge_radius: None, seed: 1, halving_guard: false };
        let rep = coupling_tail(&b, &[1.0], &[1.0], &[0.5, 1.0], &p).unwrap();
        assert!(rep.rows.iter().all(|r| r.empirical_tail == 0.0 && r.analytic_bound == 0.0));
    }

    #[test]
    fn swap_symmetry_and_monotone_tail() {
        let b = LinearDrift { dim: 2, rate: 0.5 };
        let (x, y) = ([1.0, 0.5], [-0.5, -0.2]);
        let a = simulate(&b, &x, &y, 0.01, 400, 200, 0.01, 9).unwrap();
        let c = simulate(&b, &y, &x, 0.01, 400, 200, 0.01, 9).unwrap();
        assert_eq!(a, c);
        let rows = tail_rows(&a, 0.01, &[0.5, 1.0, 2.0, 4.0], 1.0);
        assert!(rows.windows(2).all(|w| w[1].empirical_tail <= w[0].empirical_tail));
    }

    #[test]
    fn x_marginal_is_euler() {
        let b = LinearDrift { dim: 2, rate: 0.5 };
        let (x, y) = ([2.0, 0.0], [0.0, 0.0]);
        let n = 20_000;
        let coupled = coupled_paths(&b, &x, &y, 0.01, 100, n, 4).unwrap();
        let free = euler_paths(&b, &x, 0.01, 100, n, 99).unwrap();
        for i in 0..2 {
            let m1 = coupled.iter().map(|(a, _)| a[i]).sum::<f64>() / n as f64;
            let m2 = free.iter().map(|a| a[i]).sum::<f64>() / n as f64;
            let v1 = coupled.iter().map(|(a, _)| (a[i] - m1).powi(2)).sum::<f64>() / n as f64;
            let v2 = free.iter().map(|a| (a[i] - m2).powi(2)).sum::<f64>() / n as f64;
            let se_m = ((v1 + v2) / n as f64).sqrt();
            assert!((m1 - m2).abs() < 5.0 * se_m);
            let se_v = ((2.0 * v1 * v1 + 2.0 * v2 * v2) / n as f64).sqrt();
            assert!((v1 - v2).abs() < 5.0 * se_v);
        }
    }

    #[test]
    fn strong_curve_decays_at_route_rate() {
        use crate::certifier::{ergodicity_rate, Route};
        let u = BuiltinPotential::isotropic_quadratic(3).unwrap();
        let cert = ClassCertificate::StronglyConvexOutsideBall { m: 1.0, m_s: 0.0 };
        let c = CouplingCurve::new(&u, &cert, &[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]).unwrap();
        let rate = ergodicity_rate(&Route::StrongConvex, &u, &cert).unwrap();
        let (s1, s2) = (10.0, 30.0);
        let slope = (c.value(s2).ln() - c.value(s1).ln()) / (rescaled_to_langevin_time(s2) - rescaled_to_langevin_time(s1));
        assert_relative_eq!(slope, rate.log_kappa, epsilon = 1e-9);
        assert!(c.value(0.0) >= 2.0);
    }
}
