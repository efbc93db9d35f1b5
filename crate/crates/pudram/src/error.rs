// SPDX-License-Identifier: Apache-2.0
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] pudram_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    /// A text file did not follow its grammar; `line` is 1-based.
    #[error("{what} line {line}: {msg}")]
    Parse { what: &'static str, line: usize, msg: String },
    #[error("config: {0}")]
    Config(String),
    /// The command ran but its result is wrong, e.g. a golden mismatch.
    #[error("{0}")]
    Check(String),
}

impl Error {
    pub(crate) fn parse(what: &'static str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { what, line, msg: msg.into() }
    }

    /// 2 for errors raised by the simulated chip, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(e) if e.is_simulation() => 2,
            _ => 1,
        }
    }
}

pub(crate) fn read(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })
}

pub(crate) fn write(path: &std::path::Path, data: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, data).map_err(|source| Error::Io { path: path.into(), source })
}
