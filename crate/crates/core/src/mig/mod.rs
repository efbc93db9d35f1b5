// SPDX-License-Identifier: Apache-2.0
//! Netlist to micro-program compiler.
//!
//! ```text
//! parse_netlist -> to_mig -> optimize_mig -> allocate_rows -> emit_microprogram
//! ```
//!
//! [`compile`] runs the whole pipeline. With optimization on it also compiles
//! the unoptimized graph and keeps whichever program needs fewer activations,
//! so enabling the optimizer never makes a program more expensive.

pub mod alloc;
pub mod bitserial;
pub mod graph;
pub mod microprogram;
pub mod netlist;
pub mod optimize;

pub use self::alloc::{allocate_rows, emit_microprogram, interpret, RegionConfig, RowAllocation};
pub use bitserial::{bitserial_netlist, compile_bitserial, BitserialOp};
pub use graph::{to_mig, MiGraph, Node, NodeId};
pub use microprogram::{MicroOp, MicroProgram, RowRef, Slot};
pub use netlist::{parse_netlist, Gate, GateOp, Netlist};
pub use optimize::optimize_mig;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub optimize: bool,
    pub region: RegionConfig,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { optimize: true, region: RegionConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileReport {
    /// Live MAJ + INV nodes straight out of lowering.
    pub nodes_before: usize,
    /// Live MAJ + INV nodes of the graph the program was built from.
    pub nodes_after: usize,
    pub maj_before: usize,
    pub maj_after: usize,
    pub activations: usize,
    pub unoptimized_activations: usize,
    pub spills: usize,
    pub temps: usize,
}

pub fn compile(netlist: &Netlist, opcode: &str, opts: &CompileOptions) -> Result<(MicroProgram, CompileReport)> {
    let raw = to_mig(netlist).cleanup();
    let raw_alloc = allocate_rows(&raw, opts.region)?;
    let raw_prog = emit_microprogram(&raw_alloc, opcode);
    let mut chosen = (raw.clone(), raw_alloc, raw_prog.clone());
    if opts.optimize {
        let opt = optimize_mig(&raw);
        let a = allocate_rows(&opt, opts.region)?;
        let p = emit_microprogram(&a, opcode);
        if p.declared_activations <= raw_prog.declared_activations {
            chosen = (opt, a, p);
        }
    }
    let (g, alloc, prog) = chosen;
    prog.validate()?;
    let report = CompileReport {
        nodes_before: raw.size(),
        nodes_after: g.size(),
        maj_before: raw.maj_count(),
        maj_after: g.maj_count(),
        activations: prog.declared_activations,
        unoptimized_activations: raw_prog.declared_activations,
        spills: alloc.spills,
        temps: alloc.temps,
    };
    Ok((prog, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ::alloc::vec;
    use ::alloc::vec::Vec;

    const FULL_ADDER: &str =
        "INPUT a b cin\nOUTPUT sum cout\nt = XOR a b\nsum = XOR t cin\nu = AND a b\nv = AND t cin\ncout = OR u v\n";

    #[test]
    fn full_adder_optimization_pays_off() {
        let net = parse_netlist(FULL_ADDER).unwrap();
        let (opt, rep) = compile(&net, "bbop_fa", &CompileOptions::default()).unwrap();
        let (raw, _) = compile(&net, "bbop_fa", &CompileOptions { optimize: false, ..Default::default() }).unwrap();
        assert!(opt.declared_activations < raw.declared_activations, "{rep:?}");
        assert_eq!(rep.unoptimized_activations, raw.declared_activations);
        for v in 0..8u64 {
            let ins: Vec<Vec<u64>> = (0..3).map(|i| vec![if v >> i & 1 == 1 { !0 } else { 0 }]).collect();
            let out = interpret(&opt, &ins).unwrap();
            let n = v.count_ones();
            assert_eq!(out[0][0] & 1, (n % 2) as u64);
            assert_eq!(out[1][0] & 1, (n >= 2) as u64);
        }
    }

    #[test]
    fn bitserial_programs_are_correct() {
        for op in BitserialOp::ALL {
            let (p, _) = compile_bitserial(op, 4, &CompileOptions::default()).unwrap();
            for a in 0..16u64 {
                for b in 0..16u64 {
                    let bits = |v: u64| (0..4).map(|i| if v >> i & 1 == 1 { !0u64 } else { 0 }).collect::<Vec<_>>();
                    let out = interpret(&p, &[bits(a), bits(b)]).unwrap();
                    let got = out[0].iter().enumerate().fold(0u64, |acc, (i, w)| acc | (w & 1) << i);
                    assert_eq!(got, op.reference(a, b, 4), "{op:?} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn and_cost_is_linear_in_width() {
        let cost =
            |w| compile_bitserial(BitserialOp::And, w, &CompileOptions::default()).unwrap().0.declared_activations;
        let (c1, c2, c8) = (cost(1), cost(2), cost(8));
        assert_eq!(c8 - c2, 6 * (c2 - c1));
    }

    #[test]
    fn compile_is_deterministic() {
        let net = parse_netlist(FULL_ADDER).unwrap();
        let a = compile(&net, "bbop_fa", &CompileOptions::default()).unwrap();
        let b = compile(&net, "bbop_fa", &CompileOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
