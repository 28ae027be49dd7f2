use thiserror::Error;

/// Errors raised by constructors and validators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Shapes, block sizes or index ranges do not fit together.
    #[error("structural error: {0}")]
    Structure(String),

    /// A twisted-action identity failed for the named group elements.
    #[error("cocycle violation ({identity}) at g={g}, h={h}, k={k}: residual {residual:.3e}")]
    Cocycle {
        identity: &'static str,
        g: usize,
        h: usize,
        k: usize,
        residual: f64,
    },

    /// A group table is not a group.
    #[error("invalid group table: {0}")]
    Group(String),

    /// A Hilbert-module axiom failed.
    #[error("invalid module: {axiom} violated (residual {residual:.3e})")]
    Module { axiom: &'static str, residual: f64 },

    /// An equivariant-representation axiom or operator identity failed.
    #[error("axiom {axiom} violated (residual {residual:.3e})")]
    Axiom { axiom: &'static str, residual: f64 },

    /// A map expected to be positive definite is not.
    #[error("not positive definite (margin {margin:.3e})")]
    NotPositiveDefinite { margin: f64 },

    /// A map expected to be completely positive is not.
    #[error("not completely positive (margin {margin:.3e})")]
    NotCompletelyPositive { margin: f64 },

    /// A vector or value that must be central is not.
    #[error("not central (defect {defect:.3e})")]
    NotCentral { defect: f64 },

    /// A hypothesis of a construction is not met.
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),

    /// A vector does not generate its module.
    #[error("vector is not cyclic: generated rank {generated} < {expected}")]
    NotCyclic { generated: usize, expected: usize },

    /// No operator satisfies the requested identities.
    #[error("no solution: {what} (residual {residual:.3e})")]
    NoSolution { what: &'static str, residual: f64 },

    /// Input document could not be read or parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structure<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Structure(msg.into()))
}
