//! Target potentials, the class certificates they carry, and sampling-based checks of those
//! certificates.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dist_sq, dot, norm_sq, Scalar};

/// A differentiable potential `U` with `L`-Lipschitz gradient, normalised so `U(x⋆) = 0`.
///
/// Implementations must be immutable after construction: the sampler calls them
/// from many threads at once.
pub trait Potential<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[T]) -> T;

    fn gradient(&self, x: &[T], grad: &mut [T]);

    fn minimizer(&self) -> &[T];

    /// Gradient Lipschitz constant `L`.
    fn lipschitz(&self) -> T;

    fn label(&self) -> String {
        "custom".to_string()
    }

    /// The bounded component `U₂` of a decomposition `U = U₁ + U₂`, when the potential has one.
    fn perturbation(&self) -> Option<&dyn Perturbation<T>> {
        None
    }
}

pub trait Perturbation<T: Scalar>: Send + Sync {
    fn value(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T], grad: &mut [T]);
}

/// Assumption constants for one of the four potential classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassCertificate<T> {
    /// `⟨∇U(x), x−x⋆⟩ ≥ ρ‖x−x⋆‖^α` for `‖x−x⋆‖ ≥ M_ρ`.
    Superexponential { rho: T, alpha: T, m_rho: T },
    /// `U` convex and `U(x) ≥ η‖x−x⋆‖` for `‖x−x⋆‖ ≥ M_η`.
    LogConcave { eta: T, m_eta: T },
    /// `U` convex and `⟨∇U(x)−∇U(y), x−y⟩ ≥ m‖x−y‖²` for `‖x−y‖ ≥ M_s`.
    StronglyConvexOutsideBall { m: T, m_s: T },
    /// `U = U₁ + U₂` with `U₁` `m`-strongly convex, `∇U₁` `L₁`-Lipschitz, `U₂` bounded.
    PerturbedStronglyConvex {
        m: T,
        l1: T,
        xstar1: Vec<T>,
        sup_u2: T,
        sup_grad_u2: T,
        osc_u2: T,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    Superexponential,
    LogConcave,
    StronglyConvexOutsideBall,
    PerturbedStronglyConvex,
}

impl<T: Scalar> ClassCertificate<T> {
    pub fn kind(&self) -> ClassKind {
        match self {
            ClassCertificate::Superexponential { .. } => ClassKind::Superexponential,
            ClassCertificate::LogConcave { .. } => ClassKind::LogConcave,
            ClassCertificate::StronglyConvexOutsideBall { .. } => ClassKind::StronglyConvexOutsideBall,
            ClassCertificate::PerturbedStronglyConvex { .. } => ClassKind::PerturbedStronglyConvex,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::domain("potentials", "class certificate", m));
        let pos = |v: T| v > T::zero() && v.is_finite();
        let nonneg = |v: T| v >= T::zero() && v.is_finite();
        match self {
            ClassCertificate::Superexponential { rho, alpha, m_rho } => {
                if !pos(*rho) {
                    return bad(format!("rho = {rho} must be positive"));
                }
                if !(*alpha > T::one() && *alpha <= T::lit(2.0)) {
                    return bad(format!("alpha = {alpha} not in (1,2]"));
                }
                if !nonneg(*m_rho) {
                    return bad(format!("M_rho = {m_rho} must be nonnegative"));
                }
            }
            ClassCertificate::LogConcave { eta, m_eta } => {
                if !pos(*eta) {
                    return bad(format!("eta = {eta} must be positive"));
                }
                if !nonneg(*m_eta) {
                    return bad(format!("M_eta = {m_eta} must be nonnegative"));
                }
            }
            ClassCertificate::StronglyConvexOutsideBall { m, m_s } => {
                if !pos(*m) {
                    return bad(format!("m = {m} must be positive"));
                }
                if !nonneg(*m_s) {
                    return bad(format!("M_s = {m_s} must be nonnegative"));
                }
            }
            ClassCertificate::PerturbedStronglyConvex { m, l1, xstar1, sup_u2, sup_grad_u2, osc_u2 } => {
                if !pos(*m) || !pos(*l1) {
                    return bad(format!("m = {m} and L1 = {l1} must be positive"));
                }
                if m > l1 {
                    return bad(format!("m = {m} exceeds L1 = {l1}"));
                }
                if !nonneg(*sup_u2) || !nonneg(*sup_grad_u2) || !nonneg(*osc_u2) {
                    return bad("perturbation bounds must be nonnegative".into());
                }
                if *osc_u2 > T::lit(2.0) * *sup_u2 {
                    return bad(format!("osc U2 = {osc_u2} exceeds 2 sup|U2| = {}", T::lit(2.0) * *sup_u2));
                }
                if xstar1.len() != dim {
                    return bad(format!("xstar1 has dimension {} but the potential has {dim}", xstar1.len()));
                }
            }
        }
        Ok(())
    }
}

/// `a_α = ρM_ρ^α/(α+1) + M_ρ²L/2`, the constant in `U(x) ≥ ρ‖x−x⋆‖^α/(α+1) − a_α`.
pub fn a_alpha<T: Scalar>(rho: T, alpha: T, m_rho: T, lipschitz: T) -> T {
    rho * m_rho.powf(alpha) / (alpha + T::one()) + m_rho * m_rho * lipschitz / T::lit(2.0)
}

/// Closed-form families available by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family<T> {
    /// `‖x‖²/2`.
    IsotropicQuadratic { dim: usize },
    /// `xᵀAx/2` for a symmetric positive-definite `A` (rows listed).
    AnisotropicQuadratic { matrix: Vec<Vec<T>> },
    /// `√(s² + ‖x‖²) − s`, gradient Lipschitz with `L = 1/s`.
    Huber { dim: usize, scale: T },
    /// `‖x‖²/2 + a·cos(x₁) − a` with `0 ≤ a < 1`.
    QuadraticCosine { dim: usize, amplitude: T },
}

/// One of the built-in families, ready to evaluate.
#[derive(Clone, Debug)]
pub struct BuiltinPotential<T> {
    family: Family<T>,
    dim: usize,
    xstar: Vec<T>,
    lipschitz: T,
    /// Smallest Hessian eigenvalue for the quadratic families.
    curvature: T,
    matrix: Vec<T>,
    offset: T,
    cosine: Option<CosineBump<T>>,
}

/// `U₂(x) = a·cos(x₁)`.
#[derive(Clone, Copy, Debug)]
pub struct CosineBump<T> {
    pub amplitude: T,
}

impl<T: Scalar> Perturbation<T> for CosineBump<T> {
    fn value(&self, x: &[T]) -> T {
        self.amplitude * x[0].cos()
    }

    fn gradient(&self, x: &[T], grad: &mut [T]) {
        grad.iter_mut().for_each(|g| *g = T::zero());
        grad[0] = -self.amplitude * x[0].sin();
    }
}

impl<T: Scalar> BuiltinPotential<T> {
    pub fn new(family: Family<T>) -> Result<Self> {
        let bad = |m: String| Err(Error::domain("potentials", "family parameters", m));
        let (dim, lipschitz, curvature, matrix, cosine) = match &family {
            Family::IsotropicQuadratic { dim } => (*dim, T::one(), T::one(), Vec::new(), None),
            Family::AnisotropicQuadratic { matrix } => {
                let d = matrix.len();
                if d == 0 || matrix.iter().any(|r| r.len() != d) {
                    return bad("quadratic form must be a nonempty square matrix".into());
                }
                let flat: Vec<f64> = matrix.iter().flatten().map(|v| v.as_f64()).collect();
                let a = DMatrix::from_row_slice(d, d, &flat);
                let asym = (&a - a.transpose()).abs().max();
                if asym > 1e-12 * a.abs().max().max(1.0) {
                    return bad(format!("quadratic form is not symmetric (asymmetry {asym:e})"));
                }
                let eig = SymmetricEigen::new(a).eigenvalues;
                let lo = eig.min();
                let hi = eig.max();
                if !(lo > 0.0) {
                    return bad(format!("quadratic form is not positive definite (smallest eigenvalue {lo})"));
                }
                let flat_t = flat.iter().map(|&v| T::lit(v)).collect();
                (d, T::lit(hi), T::lit(lo), flat_t, None)
            }
            Family::Huber { dim, scale } => {
                if !(*scale > T::zero() && scale.is_finite()) {
                    return bad(format!("Huber scale {scale} must be positive"));
                }
                (*dim, T::one() / *scale, T::zero(), Vec::new(), None)
            }
            Family::QuadraticCosine { dim, amplitude } => {
                if !(*amplitude >= T::zero() && *amplitude < T::one()) {
                    return bad(format!("cosine amplitude {amplitude} must lie in [0,1)"));
                }
                (*dim, T::one() + *amplitude, T::one() - *amplitude, Vec::new(), Some(CosineBump { amplitude: *amplitude }))
            }
        };
        if dim == 0 {
            return bad("dimension must be at least 1".into());
        }
        let mut pot = BuiltinPotential {
            family,
            dim,
            xstar: vec![T::zero(); dim],
            lipschitz,
            curvature,
            matrix,
            offset: T::zero(),
            cosine,
        };
        pot.offset = pot.raw_value(&pot.xstar.clone());
        Ok(pot)
    }

    pub fn isotropic_quadratic(dim: usize) -> Result<Self> {
        Self::new(Family::IsotropicQuadratic { dim })
    }

    pub fn huber(dim: usize, scale: T) -> Result<Self> {
        Self::new(Family::Huber { dim, scale })
    }

    pub fn quadratic_cosine(dim: usize, amplitude: T) -> Result<Self> {
        Self::new(Family::QuadraticCosine { dim, amplitude })
    }

    pub fn anisotropic_quadratic(matrix: Vec<Vec<T>>) -> Result<Self> {
        Self::new(Family::AnisotropicQuadratic { matrix })
    }

    pub fn family(&self) -> &Family<T> {
        &self.family
    }

    fn raw_value(&self, x: &[T]) -> T {
        let half = T::lit(0.5);
        match &self.family {
            Family::IsotropicQuadratic { .. } => half * norm_sq(x),
            Family::AnisotropicQuadratic { .. } => {
                let d = self.dim;
                let mut acc = T::zero();
                for i in 0..d {
                    let row = &self.matrix[i * d..(i + 1) * d];
                    acc = acc + x[i] * dot(row, x);
                }
                half * acc
            }
            Family::Huber { scale, .. } => (*scale * *scale + norm_sq(x)).sqrt(),
            Family::QuadraticCosine { amplitude, .. } => half * norm_sq(x) + *amplitude * x[0].cos(),
        }
    }

    /// Certificates that hold for this potential and are shipped with it.
    pub fn shipped_certificates(&self) -> Vec<ClassCertificate<T>> {
        let zero = T::zero();
        let two = T::lit(2.0);
        match &self.family {
            Family::IsotropicQuadratic { dim } => vec![
                ClassCertificate::StronglyConvexOutsideBall { m: T::one(), m_s: zero },
                ClassCertificate::Superexponential { rho: T::one(), alpha: two, m_rho: zero },
                ClassCertificate::LogConcave { eta: T::one(), m_eta: two },
                ClassCertificate::PerturbedStronglyConvex {
                    m: T::one(),
                    l1: T::one(),
                    xstar1: vec![zero; *dim],
                    sup_u2: zero,
                    sup_grad_u2: zero,
                    osc_u2: zero,
                },
            ],
            Family::AnisotropicQuadratic { .. } => {
                let m = self.curvature;
                vec![
                    ClassCertificate::StronglyConvexOutsideBall { m, m_s: zero },
                    ClassCertificate::Superexponential { rho: m, alpha: two, m_rho: zero },
                    // m r²/2 ≥ m r once r ≥ 2
                    ClassCertificate::LogConcave { eta: m, m_eta: two },
                ]
            }
            // (√(s²+r²) − s)/r is increasing and equals s(√5−1)/(2s) ≈ 0.618 at r = 2s
            Family::Huber { scale, .. } => vec![ClassCertificate::LogConcave { eta: T::lit(0.6), m_eta: two * *scale }],
            Family::QuadraticCosine { dim, amplitude } => {
                let a = *amplitude;
                let m = T::one() - a;
                vec![
                    ClassCertificate::PerturbedStronglyConvex {
                        m: T::one(),
                        l1: T::one(),
                        xstar1: vec![zero; *dim],
                        sup_u2: a,
                        sup_grad_u2: a,
                        osc_u2: two * a,
                    },
                    ClassCertificate::StronglyConvexOutsideBall { m, m_s: zero },
                    // x sin x ≤ x² gives ⟨∇U(x), x⟩ ≥ (1−a)‖x‖²
                    ClassCertificate::Superexponential { rho: m, alpha: two, m_rho: zero },
                    ClassCertificate::LogConcave { eta: m, m_eta: two },
                ]
            }
        }
    }

    pub fn shipped_certificate(&self, kind: ClassKind) -> Option<ClassCertificate<T>> {
        self.shipped_certificates().into_iter().find(|c| c.kind() == kind)
    }
}

impl<T: Scalar> Potential<T> for BuiltinPotential<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[T]) -> T {
        self.raw_value(x) - self.offset
    }

    fn gradient(&self, x: &[T], grad: &mut [T]) {
        match &self.family {
            Family::IsotropicQuadratic { .. } => grad.copy_from_slice(x),
            Family::AnisotropicQuadratic { .. } => {
                let d = self.dim;
                for (i, g) in grad.iter_mut().enumerate() {
                    *g = dot(&self.matrix[i * d..(i + 1) * d], x);
                }
            }
            Family::Huber { scale, .. } => {
                let inv = (*scale * *scale + norm_sq(x)).sqrt().recip();
                for (g, &xi) in grad.iter_mut().zip(x) {
                    *g = xi * inv;
                }
            }
            Family::QuadraticCosine { amplitude, .. } => {
                grad.copy_from_slice(x);
                grad[0] = grad[0] - *amplitude * x[0].sin();
            }
        }
    }

    fn minimizer(&self) -> &[T] {
        &self.xstar
    }

    fn lipschitz(&self) -> T {
        self.lipschitz
    }

    fn label(&self) -> String {
        match &self.family {
            Family::IsotropicQuadratic { dim } => format!("isotropic_quadratic(d={dim})"),
            Family::AnisotropicQuadratic { .. } => format!("anisotropic_quadratic(d={})", self.dim),
            Family::Huber { dim, scale } => format!("huber(d={dim}, s={scale})"),
            Family::QuadraticCosine { dim, amplitude } => format!("quadratic_cosine(d={dim}, a={amplitude})"),
        }
    }

    fn perturbation(&self) -> Option<&dyn Perturbation<T>> {
        self.cosine.as_ref().map(|c| c as &dyn Perturbation<T>)
    }
}

fn to_f64_vec<T: Scalar>(x: &[T]) -> Vec<f64> {
    x.iter().map(|v| v.as_f64()).collect()
}

pub(crate) fn checked_value<T: Scalar>(model: &dyn Potential<T>, x: &[T]) -> Result<T> {
    let v = model.value(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { point: to_f64_vec(x), message: format!("U = {v}") })
    }
}

pub(crate) fn checked_gradient<T: Scalar>(model: &dyn Potential<T>, x: &[T], grad: &mut [T]) -> Result<()> {
    model.gradient(x, grad);
    if grad.iter().all(|g| g.is_finite()) {
        Ok(())
    } else {
        Err(Error::Evaluation { point: to_f64_vec(x), message: format!("gradient {:?}", to_f64_vec(grad)) })
    }
}

/// Max over points and coordinates of |central difference − gradient| / max(1, ‖gradient‖).
pub fn eval_gradient_check<T: Scalar>(model: &dyn Potential<T>, points: &[Vec<T>], h: T) -> Result<T> {
    if !(h > T::zero()) {
        return Err(Error::precondition("potentials", "finite-difference step must be positive"));
    }
    if points.is_empty() {
        return Err(Error::precondition("potentials", "gradient check needs at least one point"));
    }
    let d = model.dim();
    let mut grad = vec![T::zero(); d];
    let mut probe = vec![T::zero(); d];
    let mut worst = T::zero();
    for x in points {
        checked_value(model, x)?;
        checked_gradient(model, x, &mut grad)?;
        let scale = norm_sq(&grad).sqrt().max(T::one());
        for i in 0..d {
            probe.copy_from_slice(x);
            probe[i] = x[i] + h;
            let up = checked_value(model, &probe)?;
            probe[i] = x[i] - h;
            let down = checked_value(model, &probe)?;
            let fd = (up - down) / (h + h);
            worst = worst.max((fd - grad[i]).abs() / scale);
        }
    }
    Ok(worst)
}

/// A single failed inequality found by [`verify_certificate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub check: &'static str,
    pub point: Vec<f64>,
    pub other: Option<Vec<f64>>,
    /// The inequality that should hold is `lhs ≥ rhs`.
    pub lhs: f64,
    pub rhs: f64,
}

fn uniform_in_ball<R: Rng>(rng: &mut R, centre: &[f64], radius: f64) -> Vec<f64> {
    let d = centre.len();
    let mut dir: Vec<f64> = (0..d).map(|_| f64::sample_standard_normal(rng)).collect();
    let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    for (v, c) in dir.iter_mut().zip(centre) {
        *v = c + *v / n * r;
    }
    dir
}

/// Sampling-based check of the class inequality a certificate claims.
///
/// Points (and pairs) are drawn uniformly from the ball of the given radius around
/// `x⋆`. An empty report is evidence, not proof.
pub fn verify_certificate<T: Scalar>(
    model: &dyn Potential<T>,
    cert: &ClassCertificate<T>,
    n_samples: usize,
    radius: T,
    seed: u64,
) -> Result<Vec<Violation>> {
    if n_samples == 0 || !(radius > T::zero()) {
        return Err(Error::precondition("potentials", "verify_certificate needs n_samples >= 1 and radius > 0"));
    }
    let d = model.dim();
    cert.validate(d)?;
    let tol = T::epsilon().as_f64() * 1e3;
    let fails = |lhs: f64, rhs: f64| lhs < rhs - tol * lhs.abs().max(rhs.abs()).max(1.0);
    let centre = to_f64_vec(model.minimizer());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut gx = vec![T::zero(); d];
    let mut gy = vec![T::zero(); d];
    let cast = |v: Vec<f64>| v.into_iter().map(T::lit).collect::<Vec<T>>();
    let xs = model.minimizer().to_vec();
    let r = radius.as_f64();

    let mut u2_range = (f64::INFINITY, f64::NEG_INFINITY, Vec::new(), Vec::new());

    for _ in 0..n_samples {
        let x = cast(uniform_in_ball(&mut rng, &centre, r));
        let y = cast(uniform_in_ball(&mut rng, &centre, r));
        let ux = checked_value(model, &x)?;
        let uy = checked_value(model, &y)?;
        checked_gradient(model, &x, &mut gx)?;
        checked_gradient(model, &y, &mut gy)?;
        let rx = dist_sq(&x, &xs).sqrt();
        let dxy: Vec<T> = x.iter().zip(&y).map(|(&a, &b)| a - b).collect();
        let gap = norm_sq(&dxy);
        let midpoint_check = |out: &mut Vec<Violation>| -> Result<()> {
            let mid: Vec<T> = x.iter().zip(&y).map(|(&a, &b)| (a + b) * T::lit(0.5)).collect();
            let um = checked_value(model, &mid)?.as_f64();
            let avg = 0.5 * (ux.as_f64() + uy.as_f64());
            if fails(avg, um) {
                out.push(Violation {
                    check: "midpoint convexity",
                    point: to_f64_vec(&x),
                    other: Some(to_f64_vec(&y)),
                    lhs: avg,
                    rhs: um,
                });
            }
            Ok(())
        };
        match cert {
            ClassCertificate::Superexponential { rho, alpha, m_rho } => {
                if rx >= *m_rho {
                    let diff: Vec<T> = x.iter().zip(&xs).map(|(&a, &b)| a - b).collect();
                    let lhs = dot(&gx, &diff).as_f64();
                    let rhs = (*rho * rx.powf(*alpha)).as_f64();
                    if fails(lhs, rhs) {
                        out.push(Violation { check: "superexponential drift", point: to_f64_vec(&x), other: None, lhs, rhs });
                    }
                }
            }
            ClassCertificate::LogConcave { eta, m_eta } => {
                if rx >= *m_eta {
                    let lhs = ux.as_f64();
                    let rhs = (*eta * rx).as_f64();
                    if fails(lhs, rhs) {
                        out.push(Violation { check: "linear growth", point: to_f64_vec(&x), other: None, lhs, rhs });
                    }
                }
                midpoint_check(&mut out)?;
            }
            ClassCertificate::StronglyConvexOutsideBall { m, m_s } => {
                if gap.sqrt() >= *m_s {
                    let dg: Vec<T> = gx.iter().zip(&gy).map(|(&a, &b)| a - b).collect();
                    let lhs = dot(&dg, &dxy).as_f64();
                    let rhs = (*m * gap).as_f64();
                    if fails(lhs, rhs) {
                        out.push(Violation {
                            check: "strong convexity",
                            point: to_f64_vec(&x),
                            other: Some(to_f64_vec(&y)),
                            lhs,
                            rhs,
                        });
                    }
                }
                midpoint_check(&mut out)?;
            }
            ClassCertificate::PerturbedStronglyConvex { m, l1, sup_u2, sup_grad_u2, .. } => {
                let u2 = model.perturbation().ok_or_else(|| {
                    Error::config("potentials", format!("{} exposes no bounded component U2", model.label()))
                })?;
                let mut g2x = vec![T::zero(); d];
                let mut g2y = vec![T::zero(); d];
                u2.gradient(&x, &mut g2x);
                u2.gradient(&y, &mut g2y);
                let g1x: Vec<T> = gx.iter().zip(&g2x).map(|(&a, &b)| a - b).collect();
                let g1y: Vec<T> = gy.iter().zip(&g2y).map(|(&a, &b)| a - b).collect();
                let dg: Vec<T> = g1x.iter().zip(&g1y).map(|(&a, &b)| a - b).collect();
                let lhs = dot(&dg, &dxy).as_f64();
                let rhs = (*m * gap).as_f64();
                if fails(lhs, rhs) {
                    out.push(Violation { check: "U1 strong convexity", point: to_f64_vec(&x), other: Some(to_f64_vec(&y)), lhs, rhs });
                }
                let lip_l = (*l1 * gap.sqrt()).as_f64();
                let lip_r = norm_sq(&dg).sqrt().as_f64();
                if fails(lip_l, lip_r) {
                    out.push(Violation { check: "U1 gradient Lipschitz", point: to_f64_vec(&x), other: Some(to_f64_vec(&y)), lhs: lip_l, rhs: lip_r });
                }
                let v2 = u2.value(&x).as_f64();
                if fails(sup_u2.as_f64(), v2.abs()) {
                    out.push(Violation { check: "sup |U2|", point: to_f64_vec(&x), other: None, lhs: sup_u2.as_f64(), rhs: v2.abs() });
                }
                let gn = norm_sq(&g2x).sqrt().as_f64();
                if fails(sup_grad_u2.as_f64(), gn) {
                    out.push(Violation { check: "sup |grad U2|", point: to_f64_vec(&x), other: None, lhs: sup_grad_u2.as_f64(), rhs: gn });
                }
                if v2 < u2_range.0 {
                    u2_range.0 = v2;
                    u2_range.2 = to_f64_vec(&x);
                }
                if v2 > u2_range.1 {
                    u2_range.1 = v2;
                    u2_range.3 = to_f64_vec(&x);
                }
            }
        }
    }

    if let ClassCertificate::PerturbedStronglyConvex { osc_u2, xstar1, .. } = cert {
        let spread = u2_range.1 - u2_range.0;
        if fails(osc_u2.as_f64(), spread) {
            out.push(Violation {
                check: "osc U2",
                point: u2_range.3.clone(),
                other: Some(u2_range.2.clone()),
                lhs: osc_u2.as_f64(),
                rhs: spread,
            });
        }
        let u2 = model.perturbation().expect("checked above");
        checked_gradient(model, xstar1, &mut gx)?;
        u2.gradient(xstar1, &mut gy);
        let g1 = gx.iter().zip(&gy).map(|(&a, &b)| (a - b).as_f64().powi(2)).sum::<f64>().sqrt();
        let scale = (T::epsilon().sqrt() * model.lipschitz().max(T::one())).as_f64();
        if g1 > scale {
            out.push(Violation { check: "U1 stationary at xstar1", point: to_f64_vec(xstar1), other: None, lhs: scale, rhs: g1 });
        }
    }
    Ok(out)
}

/// Result of [`check_model`]: the interface invariants every potential must satisfy.
#[derive(Clone, Debug, Serialize)]
pub struct ModelCheck {
    pub grad_norm_at_minimizer: f64,
    pub value_at_minimizer: f64,
    /// Largest observed `‖∇U(x)−∇U(y)‖ / (L‖x−y‖)`; at most 1 when `L` is valid.
    pub worst_lipschitz_ratio: f64,
    pub passed: bool,
}

pub fn check_model<T: Scalar>(model: &dyn Potential<T>, n_pairs: usize, radius: T, seed: u64) -> Result<ModelCheck> {
    let d = model.dim();
    let xs = model.minimizer().to_vec();
    let mut g = vec![T::zero(); d];
    checked_gradient(model, &xs, &mut g)?;
    let gnorm = norm_sq(&g).sqrt().as_f64();
    let u0 = checked_value(model, &xs)?.as_f64();
    let l = model.lipschitz();
    let centre = to_f64_vec(&xs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gy = vec![T::zero(); d];
    let mut worst = 0.0f64;
    for _ in 0..n_pairs {
        let x: Vec<T> = uniform_in_ball(&mut rng, &centre, radius.as_f64()).into_iter().map(T::lit).collect();
        let y: Vec<T> = uniform_in_ball(&mut rng, &centre, radius.as_f64()).into_iter().map(T::lit).collect();
        checked_gradient(model, &x, &mut g)?;
        checked_gradient(model, &y, &mut gy)?;
        let num = dist_sq(&g, &gy).sqrt();
        let den = l * dist_sq(&x, &y).sqrt();
        if den > T::zero() {
            worst = worst.max((num / den).as_f64());
        }
    }
    let tol_scale = T::epsilon().as_f64() * 1e3;
    let passed = gnorm <= 1e-8 * l.as_f64().max(1.0) && u0.abs() <= 1e-12_f64.max(tol_scale) && worst <= 1.0 + tol_scale;
    Ok(ModelCheck { grad_norm_at_minimizer: gnorm, value_at_minimizer: u0, worst_lipschitz_ratio: worst, passed })
}
