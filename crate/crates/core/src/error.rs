// SPDX-License-Identifier: Apache-2.0
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("address error: {0}")]
    Address(String),
    /// A row was inspected or written while an activation was in flight.
    #[error("state error: {0}")]
    State(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    /// Zero-noise sensing with the bitline exactly at the reference level.
    #[error("sensing tie on subarray {subarray} column {column}")]
    Tie { subarray: usize, column: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("netlist error (line {line}): {msg}")]
    Netlist { line: usize, msg: String },
    #[error("compile error: {0}")]
    Compile(String),
    #[error("trng error: {0}")]
    Trng(String),
}

impl Error {
    /// Errors raised by the simulated chip itself rather than by bad input.
    pub fn is_simulation(&self) -> bool {
        matches!(self, Error::Protocol(_) | Error::Tie { .. } | Error::State(_))
    }
}
