use thiserror::Error;

/// Errors produced by the subordination toolkit.
///
/// The variants are grouped so that front ends can map them onto a small
/// set of exit codes: domain problems, exhausted budgets and solver failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("recurrent regime: alpha = {alpha} >= d = {d}, the Green function diverges")]
    Recurrent { alpha: f64, d: usize },

    #[error("not a valid Bernstein subordination: coefficient c[{index}] = {value:e} is negative")]
    NotBernstein { index: usize, value: f64 },

    #[error("budget exceeded: {what}; {hint}")]
    Budget { what: String, hint: String },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn budget(what: impl Into<String>, hint: impl Into<String>) -> Self {
        Error::Budget {
            what: what.into(),
            hint: hint.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
