//! Ground truth for validation: exact ULA marginals on the standard Gaussian, closed-form
//! TV/KL between isotropic Gaussians, and a 1-D grid propagator for arbitrary potentials.
//!
//! TV values returned here are half the L¹ distance.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potentials::{checked_gradient, Potential};
use crate::scalar::Scalar;
use crate::schedule::StepSchedule;
use crate::special::{chi2_cdf, norm_cdf, norm_sf};

/// Isotropic Gaussian `N(mean, variance·I)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianDist<T> {
    pub mean: Vec<T>,
    pub variance: T,
}

impl<T: Scalar> GaussianDist<T> {
    pub fn new(mean: Vec<T>, variance: T) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::domain("oracle", "gaussian", "dimension must be positive"));
        }
        if !(variance > T::zero() && variance.is_finite()) {
            return Err(Error::domain("oracle", "gaussian", format!("variance {variance} must be positive")));
        }
        Ok(GaussianDist { mean, variance })
    }

    pub fn standard(dim: usize) -> Result<Self> {
        Self::new(vec![T::zero(); dim], T::one())
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Density of a 1-D distribution.
    pub fn pdf_1d(&self, x: f64) -> f64 {
        let s = self.variance.as_f64().sqrt();
        crate::special::norm_pdf((x - self.mean[0].as_f64()) / s) / s
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("oracle", "gaussian ULA marginal", format!("gamma = {gamma} not in (0,1)")))
    }
}

/// `1 − (1−γ)^{2p}` without cancellation for small `γ`.
fn one_minus_pow(gamma: f64, two_p: f64) -> f64 {
    -(two_p * (-gamma).ln_1p()).exp_m1()
}

/// Law of `X_p` for ULA on `U(x) = ‖x‖²/2` with constant step `γ`, started at `x`.
///
/// Mean `(1−γ)^p x`, variance `(1−(1−γ)^{2p})/(1−γ/2)`.
pub fn gaussian_ula_marginal<T: Scalar>(x: &[T], gamma: T, p: u64) -> Result<GaussianDist<T>> {
    let g = gamma.as_f64();
    check_gamma(g)?;
    if p == 0 {
        return Err(Error::domain("oracle", "gaussian ULA marginal", "p = 0 is a point mass; use p >= 1"));
    }
    let shrink = (p as f64 * (-g).ln_1p()).exp();
    let var = one_minus_pow(g, 2.0 * p as f64) / (1.0 - 0.5 * g);
    GaussianDist::new(x.iter().map(|&v| T::lit(v.as_f64() * shrink)).collect(), T::lit(var))
}

/// The variance expression `(1−(1−γ)^{2(p+1)})/(1−γ/2)` as printed in the reference display,
/// which is the exact variance after `p+1` steps.
pub fn paper_sigma(gamma: f64, p: u64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(one_minus_pow(gamma, 2.0 * (p as f64 + 1.0)) / (1.0 - 0.5 * gamma))
}

/// `KL(a ‖ b)`.
pub fn gaussian_kl<T: Scalar>(a: &GaussianDist<T>, b: &GaussianDist<T>) -> Result<T> {
    same_dim(a, b)?;
    let d = a.dim() as f64;
    let (va, vb) = (a.variance.as_f64(), b.variance.as_f64());
    let r = va / vb;
    let shift: f64 = a.mean.iter().zip(&b.mean).map(|(x, y)| (x.as_f64() - y.as_f64()).powi(2)).sum();
    // r − 1 − ln r, accurate near r = 1
    let core = (r - 1.0) - (r - 1.0).ln_1p();
    Ok(T::lit(0.5 * d * core + 0.5 * shift / vb))
}

fn same_dim<T: Scalar>(a: &GaussianDist<T>, b: &GaussianDist<T>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::domain("oracle", "gaussian TV", format!("dimensions {} and {} differ", a.dim(), b.dim())));
    }
    Ok(())
}

/// Exact TV between two Gaussians with the Pinsker bound `√(2·KL(a‖b))` alongside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianTv<T> {
    pub tv: T,
    pub kl: T,
    pub pinsker: T,
}

/// Half-L¹ distance between isotropic Gaussians.
///
/// Closed forms exist in 1-D, for equal variances in any dimension, and for equal means in
/// any dimension (radial reduction to χ²). Other configurations return
/// [`Error::NoClosedForm`].
pub fn gaussian_tv<T: Scalar>(a: &GaussianDist<T>, b: &GaussianDist<T>) -> Result<GaussianTv<T>> {
    same_dim(a, b)?;
    let (va, vb) = (a.variance.as_f64(), b.variance.as_f64());
    let shift: f64 = a.mean.iter().zip(&b.mean).map(|(x, y)| (x.as_f64() - y.as_f64()).powi(2)).sum::<f64>().sqrt();
    let tv = if va == vb {
        1.0 - 2.0 * norm_sf(shift / (2.0 * va.sqrt()))
    } else if a.dim() == 1 {
        tv_1d(a.mean[0].as_f64(), va, b.mean[0].as_f64(), vb)
    } else if shift == 0.0 {
        // the densities cross on the sphere ‖x−μ‖² = r²
        let d = a.dim();
        let r2 = d as f64 * (vb / va).ln() * va * vb / (vb - va);
        (chi2_cdf(d, r2 / va) - chi2_cdf(d, r2 / vb)).abs()
    } else {
        return Err(Error::NoClosedForm(format!(
            "isotropic Gaussians in dimension {} with distinct means and variances",
            a.dim()
        )));
    };
    let kl = gaussian_kl(a, b)?.as_f64();
    Ok(GaussianTv { tv: T::lit(tv.clamp(0.0, 1.0)), kl: T::lit(kl), pinsker: T::lit((2.0 * kl).sqrt()) })
}

// P(lo < N(m, v) < hi) computed on the accurate side of the distribution
fn interval_prob(m: f64, s: f64, lo: f64, hi: f64) -> f64 {
    let (a, b) = ((lo - m) / s, (hi - m) / s);
    if a >= 0.0 {
        norm_sf(a) - norm_sf(b)
    } else if b <= 0.0 {
        norm_cdf(b) - norm_cdf(a)
    } else {
        1.0 - norm_cdf(a) - norm_sf(b)
    }
}

fn tv_1d(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    // f1 > f2 ⇔ qa x² + qb x + qc > 0
    let qa = 0.5 / v2 - 0.5 / v1;
    let qb = m1 / v1 - m2 / v2;
    let qc = 0.5 * m2 * m2 / v2 - 0.5 * m1 * m1 / v1 + 0.5 * (v2 / v1).ln();
    let disc = qb * qb - 4.0 * qa * qc;
    let mut cuts = vec![f64::NEG_INFINITY];
    if disc > 0.0 {
        let sq = disc.sqrt();
        // stable quadratic roots
        let q = -0.5 * (qb + qb.signum() * sq);
        let (mut r1, mut r2) = (q / qa, if q != 0.0 { qc / q } else { -qb / (2.0 * qa) });
        if r1 > r2 {
            std::mem::swap(&mut r1, &mut r2);
        }
        cuts.push(r1);
        cuts.push(r2);
    }
    cuts.push(f64::INFINITY);
    let (s1, s2) = (v1.sqrt(), v2.sqrt());
    let sign = |x: f64| qa * x * x + qb * x + qc;
    let mut tv = 0.0;
    for w in cuts.windows(2) {
        let probe = match (w[0].is_finite(), w[1].is_finite()) {
            (true, true) => 0.5 * (w[0] + w[1]),
            (false, true) => w[1] - 1.0,
            (true, false) => w[0] + 1.0,
            (false, false) => 0.0,
        };
        if sign(probe) > 0.0 {
            tv += interval_prob(m1, s1, w[0], w[1]) - interval_prob(m2, s2, w[0], w[1]);
        }
    }
    tv
}

/// The Pinsker-chain quantities for `δ_x R_γ^p` against `N(0, I_d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PinskerCheck {
    /// `d[log σ − 1 + σ⁻¹{1 + (1−γ)^{2p}‖x‖²/d}]` with `σ` the exact `p`-step variance.
    pub rhs: f64,
    /// `2·KL(π ‖ δ_x R^p)`; equals `rhs` analytically.
    pub two_kl_reverse: f64,
    /// `2·KL(δ_x R^p ‖ π)`.
    pub two_kl_forward: f64,
    /// L¹ distance (twice the half-L¹ TV) when a closed form exists.
    pub tv_l1: Option<f64>,
}

/// Pinsker bound on the squared L¹ distance between the `p`-step ULA marginal and `N(0, I_d)`.
///
/// `x_norm` is `‖x‖`; the start is taken along the first axis.
pub fn pinsker_rhs(x_norm: f64, gamma: f64, p: u64, d: usize) -> Result<PinskerCheck> {
    if d == 0 {
        return Err(Error::domain("oracle", "pinsker bound", "dimension must be positive"));
    }
    let mut x = vec![0.0; d];
    x[0] = x_norm;
    let marg = gaussian_ula_marginal(&x, gamma, p)?;
    let sigma = marg.variance;
    let df = d as f64;
    let m2 = (2.0 * p as f64 * (-gamma).ln_1p()).exp() * x_norm * x_norm;
    let rhs = df * (sigma.ln() - 1.0 + (1.0 + m2 / df) / sigma);
    let pi = GaussianDist::standard(d)?;
    let tv_l1 = match gaussian_tv(&marg, &pi) {
        Ok(t) => Some(2.0 * t.tv),
        Err(Error::NoClosedForm(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(PinskerCheck {
        rhs,
        two_kl_reverse: 2.0 * gaussian_kl(&pi, &marg)?,
        two_kl_forward: 2.0 * gaussian_kl(&marg, &pi)?,
        tv_l1,
    })
}

/// A density tabulated on a uniform 1-D grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridDensity {
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
    /// Mass pushed outside `[lo, hi]` over the propagation, computed exactly from the kernels.
    pub leaked: f64,
}

impl GridDensity {
    pub fn from_fn(lo: f64, hi: f64, n_points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(lo, hi, n_points)?;
        let h = (hi - lo) / (n_points - 1) as f64;
        let values = (0..n_points).map(|i| f(lo + i as f64 * h).max(0.0)).collect();
        Ok(GridDensity { lo, hi, values, leaked: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.values.len() - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.spacing()
    }

    /// Trapezoid integral.
    pub fn mass(&self) -> f64 {
        let v = &self.values;
        let inner: f64 = v.iter().sum();
        self.spacing() * (inner - 0.5 * (v[0] + v[v.len() - 1]))
    }

    /// `(grid point, density)` pairs.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| (self.point(i), v))
    }

    fn same_grid(&self, other: &GridDensity) -> bool {
        self.values.len() == other.values.len() && self.lo == other.lo && self.hi == other.hi
    }
}

fn check_grid(lo: f64, hi: f64, n: usize) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::domain("oracle", "grid", format!("bounds [{lo}, {hi}] must be finite and increasing")));
    }
    if n < 5 {
        return Err(Error::domain("oracle", "grid", format!("need at least 5 points, got {n}")));
    }
    Ok(())
}

/// Grid size and truncation for [`grid_propagate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridParams {
    pub n_points: usize,
    /// Explicit bounds; the default is `x⋆ ± max(10, |x−x⋆| + 10√(2Γ_p))`.
    pub bounds: Option<(f64, f64)>,
    /// Hard cap on the mass allowed to leak off the grid.
    pub mass_budget: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { n_points: 4096, bounds: None, mass_budget: 1e-6 }
    }
}

// kernel tails beyond this many standard deviations are dropped (mass < 1e-23)
const KERNEL_CUT: f64 = 10.0;

/// One ULA transition `r_γ` tabulated on a grid, stored row-wise (by target point).
struct Kernel {
    row_start: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    /// Fraction of each source point's kernel mass outside the grid.
    leak: Vec<f64>,
}

impl Kernel {
    fn build<T: Scalar>(model: &dyn Potential<T>, lo: f64, hi: f64, n: usize, gamma: f64) -> Result<Kernel> {
        let h = (hi - lo) / (n - 1) as f64;
        let s = (2.0 * gamma).sqrt();
        if h > s / 4.0 {
            return Err(Error::domain(
                "oracle",
                "grid propagation",
                format!("grid spacing {h:.3e} too coarse for kernel width {s:.3e}; need at most width/4"),
            ));
        }
        let mut g = [T::zero()];
        let mut means = Vec::with_capacity(n);
        for j in 0..n {
            let z = lo + j as f64 * h;
            checked_gradient(model, &[T::lit(z)], &mut g)?;
            means.push(z - gamma * g[0].as_f64());
        }
        let leak: Vec<f64> = means.iter().map(|&mu| norm_sf((hi - mu) / s) + norm_cdf((lo - mu) / s)).collect();
        // column ranges per source, then transpose by counting
        let span = |mu: f64| {
            let a = (((mu - KERNEL_CUT * s) - lo) / h).ceil().max(0.0);
            let b = (((mu + KERNEL_CUT * s) - lo) / h).floor().min((n - 1) as f64);
            (a as i64, b as i64)
        };
        let mut counts = vec![0usize; n + 1];
        for &mu in &means {
            let (a, b) = span(mu);
            for i in a.max(0)..=b {
                counts[i as usize + 1] += 1;
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let nnz = counts[n];
        let mut cols = vec![0u32; nnz];
        let mut vals = vec![0.0; nnz];
        let mut fill = counts.clone();
        let norm = 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt());
        for (j, &mu) in means.iter().enumerate() {
            let w = if j == 0 || j == n - 1 { 0.5 * h } else { h };
            let (a, b) = span(mu);
            for i in a.max(0)..=b {
                let y = lo + i as f64 * h;
                let u = (y - mu) / s;
                let slot = fill[i as usize];
                cols[slot] = j as u32;
                vals[slot] = w * norm * (-0.5 * u * u).exp();
                fill[i as usize] += 1;
            }
        }
        Ok(Kernel { row_start: counts, cols, vals, leak })
    }

    fn apply(&self, q: &[f64], h: f64) -> (Vec<f64>, f64) {
        let out: Vec<f64> = (0..q.len())
            .into_par_iter()
            .map(|i| {
                let (a, b) = (self.row_start[i], self.row_start[i + 1]);
                self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&j, &v)| v * q[j as usize]).sum()
            })
            .collect();
        let n = q.len();
        let leaked = (0..n)
            .map(|j| {
                let w = if j == 0 || j == n - 1 { 0.5 * h } else { h };
                w * q[j] * self.leak[j]
            })
            .sum();
        (out, leaked)
    }
}

fn check_one_dim<T: Scalar>(model: &dyn Potential<T>) -> Result<()> {
    if model.dim() != 1 {
        return Err(Error::domain("oracle", "grid propagation", format!("model has dimension {}, need 1", model.dim())));
    }
    Ok(())
}

fn gate(density: &GridDensity, budget: f64, center: f64) -> Result<()> {
    if density.leaked > budget {
        let half = (density.hi - density.lo).max(2.0 * (density.hi - center).abs()).max(2.0 * (center - density.lo).abs());
        return Err(Error::GridTooSmall {
            deficit: density.leaked,
            budget,
            suggested_lo: center - half,
            suggested_hi: center + half,
        });
    }
    Ok(())
}

/// Densities of `δ_x Q_γ^p` for each `p` in `record` (sorted ascending, all ≥ 1).
pub fn grid_propagate_path<T: Scalar>(
    model: &dyn Potential<T>,
    schedule: &StepSchedule<T>,
    x: T,
    record: &[u64],
    params: &GridParams,
) -> Result<Vec<GridDensity>> {
    check_one_dim(model)?;
    schedule.validate()?;
    if record.is_empty() {
        return Err(Error::precondition("oracle", "no propagation lengths requested"));
    }
    if record.contains(&0) {
        return Err(Error::domain("oracle", "grid propagation", "p = 0 is a point mass; use p >= 1"));
    }
    if record.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::precondition("oracle", "propagation lengths must be strictly increasing"));
    }
    let p_max = *record.last().unwrap();
    let xs = model.minimizer()[0].as_f64();
    let x0 = x.as_f64();
    let (lo, hi) = match params.bounds {
        Some(b) => b,
        None => {
            let big_gamma: f64 = (1..=p_max).map(|k| schedule.gamma(k).as_f64()).sum();
            let r = 10f64.max((x0 - xs).abs() + 10.0 * (2.0 * big_gamma).sqrt());
            (xs - r, xs + r)
        }
    };
    let n = params.n_points;
    check_grid(lo, hi, n)?;
    if !(lo..=hi).contains(&x0) {
        return Err(Error::domain("oracle", "grid propagation", format!("start {x0} outside grid [{lo}, {hi}]")));
    }

    // first step from the point mass is an exact Gaussian
    let g1 = schedule.gamma(1).as_f64();
    let mut g = [T::zero()];
    checked_gradient(model, &[x], &mut g)?;
    let mu = x0 - g1 * g[0].as_f64();
    let s1 = (2.0 * g1).sqrt();
    let mut cur = GridDensity::from_fn(lo, hi, n, |y| crate::special::norm_pdf((y - mu) / s1) / s1)?;
    cur.leaked = norm_sf((hi - mu) / s1) + norm_cdf((lo - mu) / s1);

    let mut out = Vec::with_capacity(record.len());
    let mut next_rec = 0;
    if record[0] == 1 {
        gate(&cur, params.mass_budget, xs)?;
        out.push(cur.clone());
        next_rec = 1;
    }
    let mut kernel: Option<(f64, Kernel)> = None;
    for k in 2..=p_max {
        let gk = schedule.gamma(k).as_f64();
        if kernel.as_ref().map(|(g, _)| *g != gk).unwrap_or(true) {
            kernel = Some((gk, Kernel::build(model, lo, hi, n, gk)?));
        }
        let (_, kern) = kernel.as_ref().unwrap();
        let (vals, leak) = kern.apply(&cur.values, cur.spacing());
        cur.values = vals;
        cur.leaked += leak;
        if next_rec < record.len() && record[next_rec] == k {
            gate(&cur, params.mass_budget, xs)?;
            out.push(cur.clone());
            next_rec += 1;
        }
    }
    Ok(out)
}

/// Density of `δ_x Q_γ^p` by `p` iterated quadrature convolutions with the ULA kernel.
pub fn grid_propagate<T: Scalar>(
    model: &dyn Potential<T>,
    schedule: &StepSchedule<T>,
    x: T,
    p: u64,
    params: &GridParams,
) -> Result<GridDensity> {
    Ok(grid_propagate_path(model, schedule, x, &[p], params)?.pop().unwrap())
}

/// Applies the steps `γ_{k+1}, …, γ_{k+steps}` to an existing density on its own grid.
pub fn grid_advance<T: Scalar>(
    density: &GridDensity,
    model: &dyn Potential<T>,
    schedule: &StepSchedule<T>,
    k: u64,
    steps: u64,
    mass_budget: f64,
) -> Result<GridDensity> {
    check_one_dim(model)?;
    let mut cur = density.clone();
    let mut kernel: Option<(f64, Kernel)> = None;
    for j in k + 1..=k + steps {
        let gj = schedule.gamma(j).as_f64();
        if kernel.as_ref().map(|(g, _)| *g != gj).unwrap_or(true) {
            kernel = Some((gj, Kernel::build(model, cur.lo, cur.hi, cur.len(), gj)?));
        }
        let (vals, leak) = kernel.as_ref().unwrap().1.apply(&cur.values, cur.spacing());
        cur.values = vals;
        cur.leaked += leak;
    }
    gate(&cur, mass_budget, model.minimizer()[0].as_f64())?;
    Ok(cur)
}

/// Right-hand side of [`grid_tv`].
pub enum TvTarget<'a, T> {
    Grid(&'a GridDensity),
    Gaussian(&'a GaussianDist<T>),
}

/// Half-L¹ distance with a Richardson estimate of the quadrature error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridTv {
    pub tv: f64,
    /// `|TV(h) − TV(2h)| / 15`.
    pub error_estimate: f64,
    /// `TV` on the coarse grid (every other point).
    pub tv_coarse: f64,
}

/// `½∫|f − g|` over the grid of `a`, plus the mass of an analytic `g` outside the grid.
///
/// Each cell is integrated with the cubic Hermite interpolant of `f − g`, split at its
/// sign changes.
pub fn grid_tv<T: Scalar>(a: &GridDensity, b: TvTarget<'_, T>) -> Result<GridTv> {
    let (diff, outside) = match b {
        TvTarget::Grid(g) => {
            if !a.same_grid(g) {
                return Err(Error::domain("oracle", "grid TV", "densities live on different grids"));
            }
            let d: Vec<f64> = a.values.iter().zip(&g.values).map(|(x, y)| x - y).collect();
            (d, 0.0)
        }
        TvTarget::Gaussian(gd) => {
            if gd.dim() != 1 {
                return Err(Error::domain("oracle", "grid TV", "analytic target must be one-dimensional"));
            }
            let m = gd.mean[0].as_f64();
            let s = gd.variance.as_f64().sqrt();
            let d: Vec<f64> = a.rows().map(|(x, v)| v - gd.pdf_1d(x)).collect();
            (d, norm_cdf((a.lo - m) / s) + norm_sf((a.hi - m) / s))
        }
    };
    let h = a.spacing();
    let fine = abs_integral(&diff, h);
    let coarse_vals: Vec<f64> = diff.iter().step_by(2).copied().collect();
    let coarse_h = h * 2.0;
    // the coarse grid must end at hi; otherwise the estimate is skipped
    let (coarse, est) = if diff.len() % 2 == 1 && coarse_vals.len() >= 5 {
        let c = abs_integral(&coarse_vals, coarse_h);
        (c, (fine - c).abs() / 15.0)
    } else {
        (f64::NAN, f64::NAN)
    };
    let half = |v: f64| 0.5 * (v + outside);
    Ok(GridTv { tv: half(fine).clamp(0.0, 1.0), error_estimate: 0.5 * est, tv_coarse: half(coarse) })
}

fn slopes(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

fn abs_integral(f: &[f64], h: f64) -> f64 {
    let df = slopes(f, h);
    (0..f.len() - 1).map(|i| hermite_abs(f[i], f[i + 1], h * df[i], h * df[i + 1]) * h).sum()
}

// ∫₀¹ |H(t)| dt for the cubic Hermite interpolant with values f0, f1 and scaled slopes m0, m1
fn hermite_abs(f0: f64, f1: f64, m0: f64, m1: f64) -> f64 {
    // H(t) = c0 + c1 t + c2 t² + c3 t³
    let c = [f0, m0, -3.0 * f0 - 2.0 * m0 + 3.0 * f1 - m1, 2.0 * f0 + m0 - 2.0 * f1 + m1];
    let eval = |t: f64| c[0] + t * (c[1] + t * (c[2] + t * c[3]));
    let prim = |t: f64| t * (c[0] + t * (c[1] / 2.0 + t * (c[2] / 3.0 + t * c[3] / 4.0)));
    // the cubic has at most two extrema, so 8 probes plus bisection catch every root
    const PROBES: usize = 8;
    let mut cuts = vec![0.0];
    let mut prev = eval(0.0);
    for k in 1..=PROBES {
        let t = k as f64 / PROBES as f64;
        let cur = eval(t);
        if prev * cur < 0.0 {
            let (mut a, mut b, mut fa) = ((k - 1) as f64 / PROBES as f64, t, prev);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                let fm = eval(mid);
                if fa * fm <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            cuts.push(0.5 * (a + b));
        }
        prev = cur;
    }
    cuts.push(1.0);
    cuts.windows(2).map(|w| (prim(w[1]) - prim(w[0])).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::BuiltinPotential;
    use approx::assert_relative_eq;

    #[test]
    fn one_step_law() {
        let m = gaussian_ula_marginal(&[2.0], 0.1, 1).unwrap();
        assert_relative_eq!(m.variance, 0.2, epsilon = 1e-15);
        assert_relative_eq!(m.mean[0], 1.8, epsilon = 1e-15);
        assert_relative_eq!(paper_sigma(0.1, 0).unwrap(), 0.2, epsilon = 1e-15);
        assert!(gaussian_ula_marginal(&[2.0], 0.1, 0).is_err());
        assert!(gaussian_ula_marginal(&[2.0], 1.0, 3).is_err());
    }

    #[test]
    fn stationary_limit_and_ou() {
        let m = gaussian_ula_marginal(&[5.0f64], 0.1, 100_000).unwrap();
        assert_relative_eq!(m.variance, 1.0 / 0.95, epsilon = 1e-12);
        assert!(m.mean[0].abs() < 1e-300);
        for &g in &[1e-2, 1e-3] {
            let p = (1.0 / g) as u64;
            let v = gaussian_ula_marginal(&[0.0], g, p).unwrap().variance;
            let ou = 1.0 - (-2.0f64).exp();
            assert!((v - ou).abs() < 2.0 * g, "gamma {g}: {v} vs {ou}");
        }
    }

    #[test]
    fn mean_shift_tv() {
        let a = GaussianDist::new(vec![2.0], 1.0).unwrap();
        let b = GaussianDist::standard(1).unwrap();
        assert_relative_eq!(gaussian_tv(&a, &b).unwrap().tv, 0.682_689_492_137_085_9, epsilon = 1e-15);
        let z = gaussian_tv(&b, &b).unwrap();
        assert_eq!((z.tv, z.kl), (0.0, 0.0));
    }

    #[test]
    fn unequal_variance_tv_matches_quadrature() {
        let a = GaussianDist::new(vec![0.7], 0.3).unwrap();
        let b = GaussianDist::new(vec![-0.2], 1.9).unwrap();
        let tv = gaussian_tv(&a, &b).unwrap().tv;
        let n = 400_001;
        let (lo, hi) = (-20.0, 20.0);
        let h = (hi - lo) / (n - 1) as f64;
        let brute: f64 = (0..n).map(|i| lo + i as f64 * h).map(|x| (a.pdf_1d(x) - b.pdf_1d(x)).abs()).sum::<f64>() * h * 0.5;
        assert_relative_eq!(tv, brute, epsilon = 1e-8);
        let tv_sym = gaussian_tv(&b, &a).unwrap().tv;
        assert_relative_eq!(tv, tv_sym, epsilon = 1e-14);
    }

    #[test]
    fn radial_reduction_reduces_to_1d() {
        let a = GaussianDist::new(vec![0.0], 0.5).unwrap();
        let b = GaussianDist::new(vec![0.0], 2.0).unwrap();
        let r1 = gaussian_tv(&a, &b).unwrap().tv;
        let a1 = GaussianDist::new(vec![0.0, 0.0, 0.0], 0.5).unwrap();
        let b1 = GaussianDist::new(vec![0.0, 0.0, 0.0], 2.0).unwrap();
        let r3 = gaussian_tv(&a1, &b1).unwrap().tv;
        assert!(r3 > r1);
        let c = GaussianDist::new(vec![1.0, 0.0, 0.0], 0.5).unwrap();
        assert!(matches!(gaussian_tv(&c, &b1), Err(Error::NoClosedForm(_))));
        // χ² with 1 dof matches the 1-D crossing formula
        let r2 = 4f64.ln() / 1.5;
        assert_relative_eq!(r1, chi2_cdf(1, r2 / 0.5) - chi2_cdf(1, r2 / 2.0), epsilon = 1e-13);
    }

    #[test]
    fn pinsker_chain_is_tight_in_reverse_direction() {
        let c = pinsker_rhs(3.0, 0.1, 100, 1).unwrap();
        assert_relative_eq!(c.rhs, c.two_kl_reverse, max_relative = 1e-12);
        let tv = c.tv_l1.unwrap();
        assert!(tv * tv <= c.two_kl_reverse);
        let stat = pinsker_rhs(0.0, 1e-6, 50_000_000, 3).unwrap();
        assert!(stat.rhs.abs() < 1e-9);
        let mut prev = f64::INFINITY;
        for p in 1..=500 {
            let r = pinsker_rhs(3.0, 0.1, p, 1).unwrap().rhs;
            assert!(r <= prev * (1.0 + 1e-12));
            prev = r;
        }
    }

    #[test]
    fn grid_tv_of_shifted_gaussians() {
        let a = GridDensity::from_fn(-10.0, 10.0, 4097, |x| crate::special::norm_pdf(x)).unwrap();
        let b = GaussianDist::new(vec![2.0], 1.0).unwrap();
        let r = grid_tv(&a, TvTarget::Gaussian(&b)).unwrap();
        assert_relative_eq!(r.tv, 0.682_689_492_137_085_9, epsilon = 1e-9);
        assert!(r.error_estimate < 1e-7);
        let same = grid_tv::<f64>(&a, TvTarget::Grid(&a)).unwrap();
        assert_eq!(same.tv, 0.0);
    }

    #[test]
    fn one_grid_step_is_exact_gaussian() {
        let u = BuiltinPotential::isotropic_quadratic(1).unwrap();
        let s = StepSchedule::constant(0.1).unwrap();
        let params = GridParams { bounds: Some((-10.0, 10.0)), ..GridParams::default() };
        let d = grid_propagate(&u, &s, 1.5, 1, &params).unwrap();
        let exact = GaussianDist::new(vec![1.35], 0.2).unwrap();
        let sup = d.rows().map(|(x, v)| (v - exact.pdf_1d(x)).abs()).fold(0.0, f64::max);
        assert!(sup < 1e-6);
        assert!(grid_propagate(&u, &s, 1.5, 0, &params).is_err());
    }

    #[test]
    fn grid_matches_closed_form_after_fifty_steps() {
        let u = BuiltinPotential::isotropic_quadratic(1).unwrap();
        let s = StepSchedule::constant(0.1).unwrap();
        let params = GridParams { bounds: Some((-10.0, 10.0)), ..GridParams::default() };
        let d = grid_propagate(&u, &s, 3.0, 50, &params).unwrap();
        let pi = GaussianDist::standard(1).unwrap();
        let grid = grid_tv(&d, TvTarget::Gaussian(&pi)).unwrap().tv;
        let exact = gaussian_tv(&gaussian_ula_marginal(&[3.0], 0.1, 50).unwrap(), &pi).unwrap().tv;
        assert!((grid - exact).abs() < 1e-5, "{grid} vs {exact}");
        assert!(d.mass() > 1.0 - 1e-6 && d.mass() < 1.0 + 1e-9);
    }

    #[test]
    fn chapman_kolmogorov() {
        let u = BuiltinPotential::huber(1, 1.0).unwrap();
        let s = StepSchedule::constant(0.2).unwrap();
        let params = GridParams { n_points: 2049, bounds: Some((-15.0, 15.0)), ..GridParams::default() };
        let whole = grid_propagate(&u, &s, 2.0, 30, &params).unwrap();
        let part = grid_propagate(&u, &s, 2.0, 12, &params).unwrap();
        let rest = grid_advance(&part, &u, &s, 12, 18, 1e-6).unwrap();
        assert!(grid_tv::<f64>(&whole, TvTarget::Grid(&rest)).unwrap().tv < 1e-6);
    }

    #[test]
    fn small_grid_is_rejected() {
        let u = BuiltinPotential::isotropic_quadratic(1).unwrap();
        let s = StepSchedule::constant(0.1).unwrap();
        let params = GridParams { n_points: 1025, bounds: Some((-2.0, 2.0)), ..GridParams::default() };
        assert!(matches!(grid_propagate(&u, &s, 0.0, 20, &params), Err(Error::GridTooSmall { .. })));
    }
}
