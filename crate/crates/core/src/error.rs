//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameter value.
    #[error("configuration error: {0}")]
    Config(String),

    /// Action id outside the catalog.
    #[error("action id {id} out of range for catalog of size {catalog}")]
    ActionOutOfRange { id: u32, catalog: usize },

    /// Shapes of operands do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Exact-enumeration oracle called on a catalog above its guard.
    #[error("catalog size {p} exceeds the enumeration guard {max}; exact oracles are for small catalogs")]
    EnumerationGuard { p: usize, max: usize },

    /// A score, weight or gradient came out non-finite.
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    /// Malformed input row.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Unrecognized or mismatched on-disk format.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
