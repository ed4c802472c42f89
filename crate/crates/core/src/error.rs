use std::fmt;

use thiserror::Error;

/// A single failed check found while validating a scenario config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Dotted path of the offending field, e.g. `schedule[1].b1`.
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("radius must be positive, got r = {r}")]
    NonPositiveRadius { r: f64 },

    #[error("polar angle is undefined at the origin")]
    OriginUndefined,

    #[error("degenerate manifold geometry: r + b1 sin(theta) = {value} <= 0")]
    DegenerateManifold { value: f64 },

    #[error("control denominator {denominator:e} is singular at theta = {theta}")]
    SingularDenominator { theta: f64, denominator: f64 },

    #[error("non-finite derivative at r = {r}, theta = {theta}")]
    NonFiniteDerivative { r: f64, theta: f64 },

    #[error("trajectory fell below the guard radius at t = {t} (r = {r})")]
    GuardRadiusHit { t: f64, r: f64 },

    #[error("insufficient excitation: {usable} usable samples, need at least {required}")]
    InsufficientExcitation { usable: usize, required: usize },

    #[error("no gain scale satisfies the bounds: base control spans [{u_lo}, {u_hi}]")]
    Infeasible { u_lo: f64, u_hi: f64 },

    #[error("adjusted gain a = ({a1}, {a2}) leaves the admissible set")]
    AdmissibleSetViolation { a1: f64, a2: f64 },

    #[error("chi function violates its contract: {0}")]
    ChiContract(String),

    #[error("invalid configuration:\n{}", format_violations(.0))]
    Config(Vec<Violation>),

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  - {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config(vec![Violation::new(path, message)])
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
