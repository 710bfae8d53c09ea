use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Quantum numbers or arguments outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A pole of the Gamma function was requested.
    #[error("Gamma function pole at x = {0}")]
    Pole(f64),

    /// The requested system exceeds a representation's size cap.
    #[error("size limit exceeded: {what} = {value} (maximum {max})")]
    SizeLimit {
        what: &'static str,
        value: usize,
        max: usize,
    },

    /// An operation was asked to act on the wrong network topology.
    #[error("topology mismatch: expected {expected}, found {found}")]
    Topology {
        expected: &'static str,
        found: &'static str,
    },

    /// Two states or a state and an operator do not share a layout.
    #[error("dimension or basis mismatch: {0}")]
    Mismatch(String),

    /// The eigensolver failed or a numerical self-check did not hold.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A state violates a conservation law it must satisfy.
    #[error("inconsistent state: {0}")]
    Inconsistent(String),

    /// Invalid user configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A trajectory record sink refused a record.
    #[error("record sink failure: {0}")]
    Sink(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
