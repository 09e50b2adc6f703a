use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use ulatv::certifier::{DimensionFamily, Lyapunov, Route, SplitChoice};
use ulatv::potentials::{ClassCertificate, Family};
use ulatv::schedule::StepSchedule;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Plan,
    Certify,
    Sample,
    Couple,
    Validate,
    Scaling,
    Explain,
}

impl Operation {
    pub fn name(self) -> &'static str {
        match self {
            Operation::Plan => "plan",
            Operation::Certify => "certify",
            Operation::Sample => "sample",
            Operation::Couple => "couple",
            Operation::Validate => "validate",
            Operation::Scaling => "scaling",
            Operation::Explain => "explain",
        }
    }
}

/// The complete record of one experiment.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// When present it must match the subcommand.
    pub operation: Option<Operation>,
    #[serde(default)]
    pub seed: u64,
    pub potential: Option<Family<f64>>,
    /// Defaults to the family's shipped certificate for the route.
    pub certificate: Option<ClassCertificate<f64>>,
    pub route: Option<Route<f64>>,
    pub schedule: Option<StepSchedule<f64>>,
    /// Starting point `x`; defaults to the minimiser.
    pub start: Option<Vec<f64>>,
    pub gamma_bar: Option<f64>,
    pub plan: Option<PlanSection>,
    pub certify: Option<CertifySection>,
    pub sample: Option<SampleSection>,
    pub couple: Option<CoupleSection>,
    pub validate: Option<ValidateSection>,
    pub scaling: Option<ScalingSection>,
    pub output: Option<OutputSection>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    /// Target precision; exclusive with `budget`.
    pub epsilon: Option<f64>,
    /// Fixed iteration budget `p`.
    pub budget: Option<u64>,
    #[serde(default)]
    pub burn_in: u64,
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
}

fn default_curve_points() -> usize {
    50
}

/// Either an explicit list `p` or `points` log-spaced values in `[p_min, p_max]`.
#[derive(Clone, Debug, Default)]
pub struct PGrid {
    pub p: Option<Vec<u64>>,
    pub p_min: Option<u64>,
    pub p_max: Option<u64>,
    pub points: Option<usize>,
}

impl PGrid {
    pub fn resolve(&self, what: &str) -> Result<Vec<u64>, CliError> {
        let mut ps = match (&self.p, self.p_max) {
            (Some(list), None) => list.clone(),
            (None, Some(hi)) => {
                let lo = self.p_min.unwrap_or(1);
                let k = self.points.unwrap_or(20);
                if lo == 0 || hi < lo || k < 2 {
                    return Err(CliError::config(format!("{what}: need 1 <= p_min <= p_max and points >= 2")));
                }
                log_grid(lo, hi, k)
            }
            (Some(_), Some(_)) => return Err(CliError::config(format!("{what}: give either p or p_max, not both"))),
            (None, None) => return Err(CliError::config(format!("{what}: one of p or p_max is required"))),
        };
        ps.sort_unstable();
        ps.dedup();
        if ps.is_empty() || ps[0] == 0 {
            return Err(CliError::config(format!("{what}: iteration counts must be positive")));
        }
        Ok(ps)
    }
}

pub fn log_grid(lo: u64, hi: u64, k: usize) -> Vec<u64> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut v: Vec<u64> =
        (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp().round().clamp(lo as f64, hi as f64) as u64).collect();
    v.dedup();
    v
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    pub p: Option<Vec<u64>>,
    pub p_min: Option<u64>,
    pub p_max: Option<u64>,
    pub points: Option<usize>,
    #[serde(default = "default_split")]
    pub split: SplitChoice,
    /// User-supplied `C_{1/4}`; enables the bias bound for superexponential certificates.
    pub c_quarter: Option<f64>,
}

impl CertifySection {
    pub fn grid(&self) -> PGrid {
        PGrid { p: self.p.clone(), p_min: self.p_min, p_max: self.p_max, points: self.points }
    }
}

fn default_split() -> SplitChoice {
    SplitChoice::Optimize
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    pub n_chains: usize,
    pub steps: u64,
    /// Defaults to the last step only.
    pub record_at: Option<Vec<u64>>,
    pub lyapunov: Option<Lyapunov<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoupleDrift {
    /// `−∇U/2` of the configured potential.
    Langevin,
    /// `−rate·v`.
    Linear { rate: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupleSection {
    pub drift: CoupleDrift,
    pub y: Vec<f64>,
    pub dt: f64,
    pub n_runs: usize,
    pub t: Vec<f64>,
    pub merge_radius: Option<f64>,
    #[serde(default = "default_true")]
    pub halving_guard: bool,
    /// Compare against the diffusion theorem's curve (Langevin drift only).
    #[serde(default = "default_true")]
    pub theorem: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub p: Option<Vec<u64>>,
    pub p_min: Option<u64>,
    pub p_max: Option<u64>,
    pub points: Option<usize>,
    #[serde(default = "default_split")]
    pub split: SplitChoice,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    pub bounds: Option<[f64; 2]>,
    #[serde(default = "default_mass_budget")]
    pub mass_budget: f64,
}

impl ValidateSection {
    pub fn grid(&self) -> PGrid {
        PGrid { p: self.p.clone(), p_min: self.p_min, p_max: self.p_max, points: self.points }
    }
}

fn default_grid_points() -> usize {
    2049
}

fn default_mass_budget() -> f64 {
    1e-6
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    pub family: DimensionFamily<f64>,
    pub d_list: Vec<usize>,
    pub epsilon: f64,
    /// Accepted band for the slope of `ln p` against `ln d`; outside it is a validation failure.
    pub slope_p: Option<[f64; 2]>,
    pub slope_gamma: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("cannot parse config: {e}")))
    }

    /// Schema checks that need no computation.
    pub fn check(&self, op: Operation) -> Result<(), CliError> {
        // explain describes any config
        if let Some(declared) = self.operation.filter(|_| op != Operation::Explain) {
            if declared != op {
                return Err(CliError::config(format!(
                    "config declares operation '{}' but the '{}' subcommand was run",
                    declared.name(),
                    op.name()
                )));
            }
        }
        let need = |present: bool, what: &str| {
            if present {
                Ok(())
            } else {
                Err(CliError::config(format!("'{}' needs a [{what}] section", op.name())))
            }
        };
        match op {
            Operation::Plan => {
                need(self.potential.is_some(), "potential")?;
                need(self.route.is_some(), "route")?;
                need(self.plan.is_some(), "plan")?;
                let p = self.plan.as_ref().unwrap();
                if p.epsilon.is_some() == p.budget.is_some() {
                    return Err(CliError::config("[plan] needs exactly one of epsilon or budget"));
                }
                if p.curve_points < 2 {
                    return Err(CliError::config("[plan] curve_points must be at least 2"));
                }
            }
            Operation::Certify => {
                need(self.potential.is_some(), "potential")?;
                need(self.route.is_some(), "route")?;
                need(self.schedule.is_some(), "schedule")?;
                need(self.certify.is_some(), "certify")?;
            }
            Operation::Sample => {
                need(self.potential.is_some(), "potential")?;
                need(self.schedule.is_some(), "schedule")?;
                need(self.sample.is_some(), "sample")?;
                let s = self.sample.as_ref().unwrap();
                if s.n_chains == 0 || s.steps == 0 {
                    return Err(CliError::config("[sample] n_chains and steps must be positive"));
                }
                if let Some(r) = &s.record_at {
                    if r.iter().any(|&k| k == 0 || k > s.steps) {
                        return Err(CliError::config("[sample] record_at entries must lie in 1..=steps"));
                    }
                }
            }
            Operation::Couple => {
                need(self.couple.is_some(), "couple")?;
                let c = self.couple.as_ref().unwrap();
                if matches!(c.drift, CoupleDrift::Langevin) {
                    need(self.potential.is_some(), "potential")?;
                }
                if self.start.is_none() {
                    return Err(CliError::config("'couple' needs the starting point 'start' for X"));
                }
                if self.start.as_ref().unwrap().len() != c.y.len() {
                    return Err(CliError::config("[couple] y and start have different dimensions"));
                }
                if !(c.dt > 0.0) || c.n_runs == 0 || c.t.is_empty() {
                    return Err(CliError::config("[couple] needs dt > 0, n_runs >= 1 and a nonempty t list"));
                }
            }
            Operation::Validate => {
                need(self.potential.is_some(), "potential")?;
                need(self.route.is_some(), "route")?;
                need(self.schedule.is_some(), "schedule")?;
                need(self.validate.is_some(), "validate")?;
            }
            Operation::Scaling => {
                need(self.route.is_some(), "route")?;
                need(self.scaling.is_some(), "scaling")?;
            }
            Operation::Explain => {
                need(self.potential.is_some(), "potential")?;
                need(self.route.is_some(), "route")?;
            }
        }
        Ok(())
    }
}
