//! Crate-wide error type.
//!
//! Out-of-domain cumulant evaluations are *not* errors: `cumulant` returns
//! `f64::INFINITY` there. Errors are reserved for genuinely exceptional
//! outcomes (singular Hessians, exhausted iteration budgets, malformed
//! configuration, missing roots).

use thiserror::Error;

/// Errors produced by the solvers, the simulator and the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the analytic domain of the requested quantity.
    #[error("domain error: {reason}")]
    DomainError { reason: String },

    /// Newton iteration exhausted its budget without meeting the residual target.
    #[error(
        "no convergence after {iterations} iterations: residual {residual:.3e}, last iterate {last_iterate:?}"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    /// The cumulant Hessian is singular at an iterate: the increment law is
    /// concentrated on a lower-dimensional affine set (full-dimensionality fails).
    #[error("degenerate model: {reason}")]
    DegenerateModel { reason: String },

    /// `u ↦ u·Λ(v/u)` has no stationary point inside the search bracket.
    #[error("no finite minimum of u*rate(v/u) for u in [{bracket_lo:.3e}, {bracket_hi:.3e}]: {diagnostics}")]
    NoFiniteMinimum {
        bracket_lo: f64,
        bracket_hi: f64,
        diagnostics: String,
    },

    /// The orthant vertex is not a most probable point at the given scale.
    #[error("vertex is not a most probable point at r = {r:.6}: {reason}")]
    VertexNotMpp { r: f64, reason: String },

    /// `K(λ(r·g))` has no sign change inside the root bracket.
    #[error(
        "no root of K(lambda(r*g)) for r in [{bracket_lo:.3e}, {bracket_hi:.3e}] (values {k_lo:.3e}, {k_hi:.3e})"
    )]
    NoRoot {
        bracket_lo: f64,
        bracket_hi: f64,
        k_lo: f64,
        k_hi: f64,
    },

    /// Malformed configuration; `key` names the offending entry.
    #[error("config error at `{key}`: {reason}")]
    ConfigError { key: String, reason: String },

    /// A required condition does not hold (or could not be decided).
    #[error("condition error: {reason}")]
    ConditionError { reason: String },

    /// The asymptotic-constant regression cannot be carried out.
    #[error("fit error: {reason}")]
    FitError { reason: String },

    /// Filesystem / serialization failure in the pipeline.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::ConfigError {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(reason: impl Into<String>) -> Self {
        Error::DomainError {
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
