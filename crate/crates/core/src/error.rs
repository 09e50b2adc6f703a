use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a formula.
    #[error("{module}: {formula}: {message}")]
    Domain {
        module: &'static str,
        formula: &'static str,
        message: String,
    },

    /// Inputs are missing or inconsistent (route/class mismatch, absent user constants).
    #[error("{module}: configuration: {message}")]
    Config { module: &'static str, message: String },

    /// The formulas evaluate but certify nothing useful (kappa >= 1, gamma above its cap).
    #[error("{module}: {formula}: infeasible: {message}")]
    Infeasible {
        module: &'static str,
        formula: &'static str,
        message: String,
    },

    #[error("{module}: precondition violated: {message}")]
    Precondition { module: &'static str, message: String },

    #[error("potentials: evaluation failed at {point:?}: {message}")]
    Evaluation { point: Vec<f64>, message: String },

    #[error("sampler: chain {chain} diverged at step {step}: state {state:?}")]
    Divergence { chain: usize, step: usize, state: Vec<f64> },

    #[error("{module}: numeric range exceeded: {message}")]
    NumericRange { module: &'static str, message: String },

    #[error("oracle: grid too small, mass deficit {deficit:e} exceeds budget {budget:e}; try bounds [{suggested_lo}, {suggested_hi}]")]
    GridTooSmall {
        deficit: f64,
        budget: f64,
        suggested_lo: f64,
        suggested_hi: f64,
    },

    #[error("oracle: no closed form for {0}; use the grid oracle")]
    NoClosedForm(String),
}

impl Error {
    pub(crate) fn domain(module: &'static str, formula: &'static str, message: impl Into<String>) -> Self {
        Error::Domain { module, formula, message: message.into() }
    }

    pub(crate) fn config(module: &'static str, message: impl Into<String>) -> Self {
        Error::Config { module, message: message.into() }
    }

    pub(crate) fn infeasible(module: &'static str, formula: &'static str, message: impl Into<String>) -> Self {
        Error::Infeasible { module, formula, message: message.into() }
    }

    pub(crate) fn precondition(module: &'static str, message: impl Into<String>) -> Self {
        Error::Precondition { module, message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
