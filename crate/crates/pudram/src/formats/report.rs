// SPDX-License-Identifier: Apache-2.0
//! Reports and tables.
//!
//! Reports are `key=value` lines. Execution statistics use the keys
//! `activations`, `commands`, `simulated_ns`, `lanes_used`, `lanes_useful`
//! and `simd_utilization`, optionally behind a prefix such as `total.`.
//! Sweep tables are CSV with the header [`SWEEP_HEADER`], one row per
//! `(sigma, pattern)` cell.

use std::fmt::Write;

use pudram_core::control::ExecStats;
use pudram_core::mig::CompileReport;
use pudram_core::reliability::{StreamStats, SweepRow, TrngReport};

pub const SWEEP_HEADER: &str = "primitive,sigma,pattern,trials,successes,success_rate";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let _ =
            writeln!(s, "{},{},{},{},{},{}", r.primitive, r.sigma, r.pattern, r.trials, r.successes, r.success_rate());
    }
    s
}

pub fn stats_report(prefix: &str, st: &ExecStats) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{prefix}activations={}", st.activations);
    let _ = writeln!(s, "{prefix}commands={}", st.commands);
    let _ = writeln!(s, "{prefix}simulated_ns={}", st.simulated_ns);
    let _ = writeln!(s, "{prefix}lanes_used={}", st.lanes_used);
    let _ = writeln!(s, "{prefix}lanes_useful={}", st.lanes_useful);
    let _ = writeln!(s, "{prefix}simd_utilization={}", st.simd_utilization);
    s
}

pub fn compile_report(opcode: &str, r: &CompileReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "opcode={opcode}");
    let _ = writeln!(s, "nodes_before={}", r.nodes_before);
    let _ = writeln!(s, "nodes_after={}", r.nodes_after);
    let _ = writeln!(s, "maj_before={}", r.maj_before);
    let _ = writeln!(s, "maj_after={}", r.maj_after);
    let _ = writeln!(s, "activations={}", r.activations);
    let _ = writeln!(s, "unoptimized_activations={}", r.unoptimized_activations);
    let _ = writeln!(s, "temps={}", r.temps);
    let _ = writeln!(s, "spills={}", r.spills);
    s
}

fn stream(s: &mut String, prefix: &str, st: &StreamStats) {
    let _ = writeln!(s, "{prefix}.bits={}", st.bits);
    let _ = writeln!(s, "{prefix}.ones_fraction={}", st.ones_fraction);
    let _ = writeln!(s, "{prefix}.monobit_p={}", st.monobit_p);
    let _ = writeln!(s, "{prefix}.runs_p={}", st.runs_p);
}

pub fn trng_report(r: &TrngReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "n_rows={}", r.n_rows);
    let _ = writeln!(s, "entropy_cells={}", r.entropy_cells);
    let _ = writeln!(s, "bits_per_apa={}", r.bits_per_apa);
    let _ = writeln!(s, "samples={}", r.samples);
    let _ = writeln!(s, "simulated_ns={}", r.simulated_ns);
    let _ = writeln!(s, "profiling_ns={}", r.profiling_ns);
    let _ = writeln!(s, "throughput_bits_per_sim_second={}", r.throughput_bits_per_sim_second);
    stream(&mut s, "raw", &r.raw);
    if let Some(c) = &r.conditioned {
        stream(&mut s, "conditioned", c);
    }
    s
}

/// Looks `key` up in a `key=value` report.
pub fn report_value<'a>(report: &'a str, key: &str) -> Option<&'a str> {
    report.lines().find_map(|l| l.split_once('=').filter(|(k, _)| *k == key).map(|(_, v)| v))
}
