// SPDX-License-Identifier: Apache-2.0
//! Text and binary file formats.

pub mod config;
pub mod dump;
pub mod microprogram;
pub mod program;
pub mod report;
pub mod trace;

pub use config::RunConfig;
pub use dump::{format_dump, parse_dump};
pub use microprogram::{format_microprogram, parse_microprogram};
pub use program::{format_program, parse_program, LoadValues, Program, Statement};
pub use report::{compile_report, report_value, stats_report, sweep_csv, trng_report, SWEEP_HEADER};
pub use trace::{format_command, format_trace, parse_trace};

/// Raw bitstream export: eight bits per byte, the first bit of the stream in
/// the least significant bit of the first byte. A final partial byte is
/// zero-padded in its high bits.
pub fn bitstream_bytes(bits: &[bool]) -> Vec<u8> {
    pudram_core::reliability::pack_bits(bits)
}
