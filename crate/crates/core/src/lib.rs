// SPDX-License-Identifier: Apache-2.0
//! Command-level simulator for Processing-using-DRAM.
//!
//! The crate models a DRAM chip as normalized cell and bitline voltages and
//! interprets timed ACT/PRE/RD/WR command streams, including streams that
//! deliberately violate tRAS/tRP, into charge-sharing and sensing events. On
//! top of that engine it provides:
//!
//! - [`primitives`]: RowClone, NOT, Multi-RowCopy, triple-row majority,
//!   N-input AND/NAND/OR/NOR and TRNG sampling as canonical command traces;
//! - [`mig`]: a netlist to majority-inverter-graph compiler that emits
//!   row-level micro-programs;
//! - [`control`]: a bbop control unit with mat-range execution, intra- and
//!   inter-mat moves and vector reduction;
//! - [`reliability`]: noise sweeps, calibration, TRNG harvesting and the
//!   monobit/runs tests.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and the
//! parallel sweep driver live in the companion `pudram` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod chip;
pub mod command;
pub mod control;
pub mod engine;
mod error;
pub mod geometry;
pub mod mig;
pub mod noise;
pub mod primitives;
pub mod reliability;

pub use chip::{ChipState, DataPattern, LogicLevel};
pub use command::{Command, CommandKind, CommandTrace, TimingParams};
pub use engine::{decoder_rowset, issue, run_trace, DecoderMode, ExecReport};
pub use error::{Error, Result};
pub use geometry::{ChipGeometry, RowAddr};
pub use noise::NoiseModel;
