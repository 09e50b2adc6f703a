//! Step-size sequences, their window sums, and the burn-in split rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{u64_to, Kahan, Scalar};

/// A nonincreasing sequence of positive step sizes `(γ_k)_{k ≥ 1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule<T> {
    Constant { gamma: T },
    /// `γ_k = γ₁ k^{-β}`.
    PolynomialDecay { gamma1: T, exponent: T },
    /// Listed values, then the last value repeated forever.
    Explicit { values: Vec<T> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    /// `n(p) = min{k < p : κ^{Γ_{k+1,p}} > γ_{k+1}}`.
    KappaGamma,
    /// `n(p) = max(0, ⌊log Γ_p⌋)`.
    LogGamma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub n: u64,
    /// Set when the rule's preconditions fail and `n = 0` was returned instead.
    pub degenerate: bool,
}

impl<T: Scalar> StepSchedule<T> {
    pub fn constant(gamma: T) -> Result<Self> {
        let s = StepSchedule::Constant { gamma };
        s.validate()?;
        Ok(s)
    }

    pub fn polynomial(gamma1: T, exponent: T) -> Result<Self> {
        let s = StepSchedule::PolynomialDecay { gamma1, exponent };
        s.validate()?;
        Ok(s)
    }

    pub fn explicit(values: Vec<T>) -> Result<Self> {
        let s = StepSchedule::Explicit { values };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::domain("schedule", "step sequence", m));
        match self {
            StepSchedule::Constant { gamma } => {
                if !(*gamma > T::zero() && gamma.is_finite()) {
                    return bad(format!("constant step {gamma} must be positive"));
                }
            }
            StepSchedule::PolynomialDecay { gamma1, exponent } => {
                if !(*gamma1 > T::zero() && gamma1.is_finite()) {
                    return bad(format!("gamma1 = {gamma1} must be positive"));
                }
                if !(*exponent > T::zero() && *exponent <= T::one()) {
                    return bad(format!("decay exponent {exponent} not in (0,1]"));
                }
            }
            StepSchedule::Explicit { values } => {
                if values.is_empty() {
                    return bad("explicit schedule needs at least one value".into());
                }
                if values.iter().any(|v| !(*v > T::zero() && v.is_finite())) {
                    return bad("explicit steps must be positive and finite".into());
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return bad("explicit steps must be nonincreasing".into());
                }
            }
        }
        Ok(())
    }

    /// `γ_k`, for `k ≥ 1`.
    pub fn gamma(&self, k: u64) -> T {
        assert!(k >= 1, "step indices start at 1");
        match self {
            StepSchedule::Constant { gamma } => *gamma,
            StepSchedule::PolynomialDecay { gamma1, exponent } => *gamma1 * u64_to::<T>(k).powf(-*exponent),
            StepSchedule::Explicit { values } => {
                let i = ((k - 1) as usize).min(values.len() - 1);
                values[i]
            }
        }
    }

    pub fn gamma1(&self) -> T {
        self.gamma(1)
    }

    pub fn as_constant(&self) -> Option<T> {
        match self {
            StepSchedule::Constant { gamma } => Some(*gamma),
            StepSchedule::Explicit { values } if values.iter().all(|v| *v == values[0]) => Some(values[0]),
            _ => None,
        }
    }

    /// `Γ_{n,p} = Σ_{k=n}^p γ_k`, zero when `p < n`.
    pub fn partial_sum(&self, n: u64, p: u64) -> T {
        self.power_sum(n, p, 1)
    }

    /// `Σ_{k=n}^p γ_k^ℓ`, zero when `p < n`.
    pub fn power_sum(&self, n: u64, p: u64, ell: u32) -> T {
        let n = n.max(1);
        if p < n {
            return T::zero();
        }
        if let Some(g) = self.as_constant() {
            return u64_to::<T>(p - n + 1) * g.powi(ell as i32);
        }
        let mut acc = Kahan::default();
        for k in n..=p {
            acc.add(self.gamma(k).as_f64().powi(ell as i32));
        }
        T::lit(acc.value())
    }

    pub fn burnin_split(&self, p: u64, kappa: T, rule: SplitRule) -> Result<Split> {
        let table = StepTable::new(self, p)?;
        table.burnin_split(p, kappa.ln(), rule)
    }
}

/// Prefix sums of `γ`, `γ²`, `γ³` for O(1) window queries.
///
/// Constant schedules use closed forms and need no storage, so `p` may be
/// astronomically large there.
#[derive(Clone, Debug)]
pub struct StepTable<T> {
    schedule: StepSchedule<T>,
    constant: Option<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
    s3: Vec<f64>,
    len: u64,
}

impl<T: Scalar> StepTable<T> {
    pub fn new(schedule: &StepSchedule<T>, len: u64) -> Result<Self> {
        schedule.validate()?;
        let constant = schedule.as_constant().map(|g| g.as_f64());
        let (mut s1, mut s2, mut s3) = (Vec::new(), Vec::new(), Vec::new());
        if constant.is_none() {
            if len > 50_000_000 {
                return Err(Error::precondition(
                    "schedule",
                    format!("prefix table of length {len} too large for a non-constant schedule"),
                ));
            }
            let cap = len as usize + 1;
            s1.reserve(cap);
            s2.reserve(cap);
            s3.reserve(cap);
            let (mut a1, mut a2, mut a3) = (Kahan::default(), Kahan::default(), Kahan::default());
            s1.push(0.0);
            s2.push(0.0);
            s3.push(0.0);
            for k in 1..=len {
                let g = schedule.gamma(k).as_f64();
                a1.add(g);
                a2.add(g * g);
                a3.add(g * g * g);
                s1.push(a1.value());
                s2.push(a2.value());
                s3.push(a3.value());
            }
        }
        Ok(StepTable { schedule: schedule.clone(), constant, s1, s2, s3, len })
    }

    pub fn schedule(&self) -> &StepSchedule<T> {
        &self.schedule
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn gamma(&self, k: u64) -> f64 {
        match self.constant {
            Some(g) => g,
            None => self.schedule.gamma(k).as_f64(),
        }
    }

    fn window(&self, n: u64, p: u64, ell: u32) -> f64 {
        let n = n.max(1);
        if p < n {
            return 0.0;
        }
        if let Some(g) = self.constant {
            return (p - n + 1) as f64 * g.powi(ell as i32);
        }
        assert!(p <= self.len, "window end {p} beyond table length {}", self.len);
        let s = match ell {
            1 => &self.s1,
            2 => &self.s2,
            3 => &self.s3,
            _ => unreachable!("only powers 1..=3 are tabulated"),
        };
        (s[p as usize] - s[n as usize - 1]).max(0.0)
    }

    /// `Γ_{n,p}`.
    pub fn gamma_sum(&self, n: u64, p: u64) -> f64 {
        self.window(n, p, 1)
    }

    pub fn sq_sum(&self, n: u64, p: u64) -> f64 {
        self.window(n, p, 2)
    }

    pub fn cube_sum(&self, n: u64, p: u64) -> f64 {
        self.window(n, p, 3)
    }

    /// Burn-in split with `log κ` supplied directly (κ-powers stay in log space).
    pub fn burnin_split(&self, p: u64, log_kappa: T, rule: SplitRule) -> Result<Split> {
        let lk = log_kappa.as_f64();
        if p == 0 {
            return Err(Error::precondition("schedule", "burn-in split needs p >= 1"));
        }
        if !(lk < 0.0 && lk.is_finite()) {
            return Err(Error::domain("schedule", "burn-in split", format!("log kappa = {lk} must be negative")));
        }
        match rule {
            SplitRule::KappaGamma => {
                let gp = self.gamma(p);
                let pre_tail = lk * gp > gp.ln();
                let pre_head = lk * self.gamma_sum(1, p) <= self.gamma(1).ln();
                if !(pre_tail && pre_head) {
                    return Ok(Split { n: 0, degenerate: true });
                }
                // predicate is monotone in k: false at k = 0, true at k = p-1
                let holds = |k: u64| lk * self.gamma_sum(k + 1, p) > self.gamma(k + 1).ln();
                let (mut lo, mut hi) = (0u64, p - 1);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if holds(mid) {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                Ok(Split { n: lo, degenerate: false })
            }
            SplitRule::LogGamma => {
                let g = self.gamma_sum(1, p);
                let raw = if g > 1.0 { g.ln().floor() as u64 } else { 0 };
                Ok(Split { n: raw.min(p - 1), degenerate: raw > p - 1 })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_by_kind() {
        assert_eq!(StepSchedule::constant(0.1).unwrap().gamma(7), 0.1);
        assert_eq!(StepSchedule::polynomial(0.5, 1.0).unwrap().gamma(4), 0.125);
        assert_eq!(StepSchedule::explicit(vec![0.3, 0.2, 0.1]).unwrap().gamma(5), 0.1);
    }

    #[test]
    fn sums() {
        let c = StepSchedule::constant(0.1).unwrap();
        assert_relative_eq!(c.partial_sum(1, 10), 1.0, epsilon = 1e-15);
        assert_eq!(c.partial_sum(5, 3), 0.0);
        assert_relative_eq!(c.power_sum(1, 10, 2), 0.1, epsilon = 1e-15);
        let h = StepSchedule::polynomial(1.0, 1.0).unwrap();
        assert_relative_eq!(h.partial_sum(1, 4), 25.0 / 12.0, epsilon = 1e-15);
        assert_relative_eq!(h.power_sum(1, 3, 3), 1.0 + 1.0 / 8.0 + 1.0 / 27.0, epsilon = 1e-15);
        assert_eq!(h.power_sum(9, 2, 3), 0.0);
    }

    #[test]
    fn invalid_schedules_rejected() {
        assert!(StepSchedule::constant(0.0).is_err());
        assert!(StepSchedule::polynomial(1.0, 1.5).is_err());
        assert!(StepSchedule::explicit(vec![0.1, 0.2]).is_err());
        assert!(StepSchedule::<f64>::explicit(vec![]).is_err());
    }

    #[test]
    fn kappa_gamma_split_example() {
        let s = StepSchedule::constant(0.1).unwrap();
        let split = s.burnin_split(100, 0.5, SplitRule::KappaGamma).unwrap();
        assert_eq!(split, Split { n: 67, degenerate: false });
        // scan every k to confirm the minimum
        let first = (0..100u64)
            .find(|&k| 0.5f64.powf(s.partial_sum(k + 1, 100)) > s.gamma(k + 1))
            .unwrap();
        assert_eq!(first, 67);
    }

    #[test]
    fn log_gamma_split_and_trivial_p() {
        let s = StepSchedule::constant(0.1).unwrap();
        assert_eq!(s.burnin_split(100, 0.5, SplitRule::LogGamma).unwrap().n, 2);
        assert_eq!(s.burnin_split(1, 0.5, SplitRule::KappaGamma).unwrap().n, 0);
        assert_eq!(s.burnin_split(1, 0.5, SplitRule::LogGamma).unwrap().n, 0);
    }

    #[test]
    fn table_matches_direct_sums() {
        let s = StepSchedule::polynomial(0.3, 0.5).unwrap();
        let t = StepTable::new(&s, 500).unwrap();
        for &(n, p) in &[(1u64, 500u64), (17, 230), (40, 39), (499, 500)] {
            assert_relative_eq!(t.gamma_sum(n, p), s.partial_sum(n, p), max_relative = 1e-12, epsilon = 1e-15);
            assert_relative_eq!(t.sq_sum(n, p), s.power_sum(n, p, 2), max_relative = 1e-12, epsilon = 1e-15);
            assert_relative_eq!(t.cube_sum(n, p), s.power_sum(n, p, 3), max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn f32_schedule() {
        let s = StepSchedule::<f32>::polynomial(0.5, 1.0).unwrap();
        assert_eq!(s.gamma(4), 0.125f32);
        assert!((s.partial_sum(1, 4) - 1.041_666_7f32).abs() < 1e-6);
    }
}
