// SPDX-License-Identifier: Apache-2.0
//! In-DRAM control unit: a micro-program store, bbop execution over mat
//! ranges, intra- and inter-mat data movement and vector reduction.
//!
//! Operands are laid out vertically: bit `i` of an element lives in row
//! `base + i`, and each column of the selected mats is one SIMD lane. The top
//! of every subarray is reserved for the compute region a micro-program runs
//! in, see [`ComputeRegion`].

mod exec;
mod layout;
mod moves;
mod reduce;

pub use exec::{ComputeRegion, ExecMode};
pub use layout::{load_vertical, store_vertical, transpose, untranspose};
pub use moves::{data_move, gb_mov, lc_mov};
pub use reduce::{vector_reduce, ReduceOutcome, ReduceSpec};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::chip::ChipState;
use crate::command::CommandTrace;
use crate::error::{Error, Result};
use crate::geometry::{ChipGeometry, RowAddr};
use crate::mig::MicroProgram;

/// Registered micro-programs, keyed by opcode.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MicroProgramStore {
    programs: BTreeMap<String, MicroProgram>,
}

impl MicroProgramStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, prog: MicroProgram) -> Result<()> {
        prog.validate()?;
        if self.programs.contains_key(&prog.opcode) {
            return Err(Error::Validation(format!("opcode `{}` is already registered", prog.opcode)));
        }
        self.programs.insert(prog.opcode.clone(), prog);
        Ok(())
    }

    pub fn lookup(&self, opcode: &str) -> Result<&MicroProgram> {
        self.programs.get(opcode).ok_or_else(|| Error::Validation(format!("unknown opcode `{opcode}`")))
    }

    pub fn opcodes(&self) -> impl Iterator<Item = &str> {
        self.programs.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }
}

/// One bulk bitwise instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BbopInstruction {
    pub opcode: String,
    /// First row of the outputs; output slots follow each other.
    pub dst: RowAddr,
    /// First row of each input slot.
    pub srcs: Vec<RowAddr>,
    pub mat_begin: usize,
    pub mat_end: usize,
    /// Element width in bits.
    pub width: usize,
    /// Useful lanes, counted from the first column of `mat_begin`.
    pub vector_len: usize,
}

impl BbopInstruction {
    /// Narrowest mat range `[0, k)` that holds `vector_len` lanes.
    pub fn fit_mats(g: &ChipGeometry, vector_len: usize) -> (usize, usize) {
        let k = vector_len.div_ceil(g.columns_per_mat).max(1);
        (0, k - 1)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecStats {
    pub activations: u64,
    pub commands: u64,
    pub simulated_ns: f64,
    pub lanes_used: usize,
    pub lanes_useful: usize,
    pub simd_utilization: f64,
}

impl ExecStats {
    pub(crate) fn from_trace(trace: &CommandTrace, lanes_used: usize, lanes_useful: usize) -> Self {
        let c = trace.counters();
        ExecStats {
            activations: c.acts,
            commands: trace.len() as u64,
            simulated_ns: c.simulated_ns,
            lanes_used,
            lanes_useful,
            simd_utilization: utilization(lanes_useful, lanes_used),
        }
    }

    /// Adds the command counts of `other`; lane figures are kept.
    pub fn absorb(&mut self, other: &ExecStats) {
        self.activations += other.activations;
        self.commands += other.commands;
        self.simulated_ns += other.simulated_ns;
    }
}

pub fn utilization(useful: usize, used: usize) -> f64 {
    if used == 0 {
        0.0
    } else {
        useful as f64 / used as f64
    }
}

/// Micro-program store plus execution mode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ControlUnit {
    pub store: MicroProgramStore,
    pub mode: ExecMode,
}

impl ControlUnit {
    pub fn new(mode: ExecMode) -> Self {
        ControlUnit { store: MicroProgramStore::new(), mode }
    }

    pub fn register(&mut self, prog: MicroProgram) -> Result<()> {
        self.store.register(prog)
    }

    pub fn execute(&self, chip: &mut ChipState, insn: &BbopInstruction) -> Result<ExecStats> {
        execute_bbop(chip, &self.store, self.mode, insn)
    }
}

/// Runs the micro-program registered for `insn.opcode` on the operand rows
/// of `insn`. Everything is validated before the first command is issued.
pub fn execute_bbop(
    chip: &mut ChipState,
    store: &MicroProgramStore,
    mode: ExecMode,
    insn: &BbopInstruction,
) -> Result<ExecStats> {
    let prog = store.lookup(&insn.opcode)?;
    exec::run_program(chip, prog, mode, insn)
}

/// Runs `prog` directly, without going through a store.
pub fn execute_program(
    chip: &mut ChipState,
    prog: &MicroProgram,
    mode: ExecMode,
    insn: &BbopInstruction,
) -> Result<ExecStats> {
    if prog.opcode != insn.opcode {
        return Err(Error::Validation(format!("instruction {} given program {}", insn.opcode, prog.opcode)));
    }
    exec::run_program(chip, prog, mode, insn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mig::{compile_bitserial, BitserialOp, CompileOptions};

    #[test]
    fn store_round_trip_and_errors() {
        let mut s = MicroProgramStore::new();
        let (p, _) = compile_bitserial(BitserialOp::And, 2, &CompileOptions::default()).unwrap();
        s.register(p.clone()).unwrap();
        assert_eq!(s.lookup("bbop_and").unwrap(), &p);
        assert!(matches!(s.register(p), Err(Error::Validation(_))));
        assert!(matches!(s.lookup("bbop_mul"), Err(Error::Validation(_))));
        assert_eq!(s.opcodes().collect::<Vec<_>>(), ["bbop_and"]);
    }

    #[test]
    fn fit_mats_rounds_up() {
        let g = ChipGeometry::default();
        assert_eq!(BbopInstruction::fit_mats(&g, 1), (0, 0));
        assert_eq!(BbopInstruction::fit_mats(&g, 16), (0, 0));
        assert_eq!(BbopInstruction::fit_mats(&g, 17), (0, 1));
        assert_eq!(BbopInstruction::fit_mats(&g, 64), (0, 3));
    }
}
