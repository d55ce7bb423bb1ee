use std::fmt;

use serde::{Deserialize, Serialize};

/// Parameter constraint that failed validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// `mu = 2 nu + alpha + 1 > 0`
    MuPositive,
    /// `beta > -1`
    BetaGtMinus1,
    /// `a != 0`
    ANonzero,
    /// every parameter must be a finite number
    Finite,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Constraint::MuPositive => "mu_positive",
            Constraint::BetaGtMinus1 => "beta_gt_minus1",
            Constraint::ANonzero => "a_nonzero",
            Constraint::Finite => "finite",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("constraint violated: {which}")]
    ConstraintViolation { which: Constraint },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("beta = {beta} is not a nonnegative integer")]
    NotInteger { beta: f64 },

    #[error("root finding failed: {0}")]
    RootFindingFailure(String),

    #[error("coefficient table exhausted: need index {needed}, table holds {available}")]
    TableExhausted { needed: usize, available: usize },

    #[error("tridiagonal eigensolver did not converge after {sweeps} sweeps")]
    EigenFailure { sweeps: usize },

    #[error("zero scan exhausted after {found} of {requested} zeros (reached x = {reached})")]
    ScanExhausted {
        found: usize,
        requested: usize,
        reached: f64,
    },

    #[error("derivative vanishes at zero #{index} (x = {at}); possible double zero")]
    DerivativeVanishes { index: usize, at: f64 },

    #[error("degenerate window: coefficient {index} is zero")]
    DegenerateWindow { index: usize },

    #[error("need {needed} zeros, only {available} available")]
    InsufficientZeros { needed: usize, available: usize },

    #[error("s = {s} is within {margin} of the pole at {pole}")]
    PoleProximity { s: f64, pole: f64, margin: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ConstraintViolation { .. } => "ConstraintViolation",
            Error::Domain(_) => "DomainError",
            Error::Numeric(_) => "NumericFailure",
            Error::NotInteger { .. } => "NotInteger",
            Error::RootFindingFailure(_) => "RootFindingFailure",
            Error::TableExhausted { .. } => "TableExhausted",
            Error::EigenFailure { .. } => "EigenFailure",
            Error::ScanExhausted { .. } => "ScanExhausted",
            Error::DerivativeVanishes { .. } => "DerivativeVanishes",
            Error::DegenerateWindow { .. } => "DegenerateWindow",
            Error::InsufficientZeros { .. } => "InsufficientZeros",
            Error::PoleProximity { .. } => "PoleProximity",
            Error::Config(_) => "ConfigError",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
