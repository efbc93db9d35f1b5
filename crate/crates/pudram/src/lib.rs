// SPDX-License-Identifier: Apache-2.0
//! File formats, the parallel sweep driver, primitive demos and the command
//! line for [`pudram_core`].

pub mod cli;
pub mod demo;
mod error;
pub mod formats;
pub mod sweep;

pub use error::{Error, Result};
