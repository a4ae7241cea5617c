//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is out of range or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// A geometric construction is undefined for the given arguments.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// Two points that must be distinct coincide, or a similar degeneracy.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    /// A point lies too close to the ideal boundary for double precision.
    #[error("precision floor violated: radius {rho} exceeds {max_rho}")]
    Precision { rho: f64, max_rho: f64 },
    /// A quantity depends on points outside the revealed window.
    #[error("uncertified boundary: {0}")]
    UncertifiedBoundary(String),
    /// A search did not produce a usable answer within its budget.
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    /// A work budget (nodes, tuples) was exhausted.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    /// Malformed serialized input.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
