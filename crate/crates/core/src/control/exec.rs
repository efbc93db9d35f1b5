// SPDX-License-Identifier: Apache-2.0
use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use super::{BbopInstruction, ExecStats};
use crate::chip::ChipState;
use crate::command::{Command, CommandKind, CommandTrace, TimingParams, Wordline};
use crate::engine::issue;
use crate::error::{Error, Result};
use crate::geometry::{ChipGeometry, MatMask, RowAddr};
use crate::mig::{MicroOp, MicroProgram, RowRef};

/// How a bbop picks its mats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// Every mat of the subarray takes part; the instruction's range is ignored.
    Simdram,
    /// Only `[mat_begin, mat_end]` is activated, selected through PRE sector bits.
    #[default]
    Mimdram,
}

/// Rows at the top of a subarray used by a running micro-program.
///
/// From the top: the geometry's dual-contact rows, `C1`, `C0`, the `B`
/// rows and then the spill rows. With two DCC rows and six `B` rows, in a
/// subarray of `R` rows, that is DCC at `R-2..R`, `C1 = R-3`, `C0 = R-4`,
/// `B0..B5 = R-10..R-5` and `T0 = R-11`, `T1 = R-12`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComputeRegion {
    pub subarray: usize,
    rows: usize,
    dcc_rows: usize,
    b_rows: usize,
    temps: usize,
}

impl ComputeRegion {
    pub fn new(g: &ChipGeometry, subarray: usize, prog: &MicroProgram) -> Result<Self> {
        if prog.dcc_rows > g.dcc_rows {
            return Err(Error::Validation(format!(
                "{} needs {} dual-contact rows, the chip has {}",
                prog.opcode, prog.dcc_rows, g.dcc_rows
            )));
        }
        let r = ComputeRegion {
            subarray,
            rows: g.rows_per_subarray,
            dcc_rows: g.dcc_rows,
            b_rows: prog.b_rows,
            temps: prog.temps,
        };
        if r.reserved() >= r.rows {
            return Err(Error::Validation(format!(
                "{} needs {} reserved rows, the subarray has {}",
                prog.opcode,
                r.reserved(),
                r.rows
            )));
        }
        Ok(r)
    }

    pub fn reserved(&self) -> usize {
        self.dcc_rows + 2 + self.b_rows + self.temps
    }

    /// Local rows free for operands.
    pub fn operand_rows(&self) -> Range<usize> {
        0..self.rows - self.reserved()
    }

    pub fn local(&self, r: RowRef) -> Option<usize> {
        let top = self.rows - self.dcc_rows;
        let b0 = top - 2 - self.b_rows;
        match r {
            RowRef::Dcc(i) => Some(top + i),
            RowRef::C1 => Some(top - 1),
            RowRef::C0 => Some(top - 2),
            RowRef::B(i) => Some(b0 + i),
            RowRef::Temp(i) => Some(b0 - 1 - i),
            RowRef::Input { .. } | RowRef::Output { .. } => None,
        }
    }
}

/// Accumulates lowered commands for one mat selection.
pub(crate) struct Lowerer {
    g: ChipGeometry,
    t: TimingParams,
    mats: MatMask,
    sectored: bool,
    cmds: Vec<Command>,
}

impl Lowerer {
    pub(crate) fn new(chip: &ChipState, mats: MatMask, sectored: bool) -> Self {
        Lowerer { g: chip.geometry().clone(), t: *chip.timing(), mats, sectored, cmds: Vec::new() }
    }

    fn pre(&mut self) {
        let s = self.sectored.then_some(self.mats);
        self.cmds.push(Command::pre_sectors(s, self.t.t_rp_ns));
    }

    pub(crate) fn copy(&mut self, src: RowAddr, dst: RowAddr) {
        self.cmds.push(Command::act(&[src], self.t.t_ras_ns));
        self.cmds.push(Command::act(&[dst], self.t.t_ras_ns));
        self.pre();
    }

    pub(crate) fn not(&mut self, src: RowAddr, dcc: RowAddr) {
        self.cmds.push(Command::act(&[src], self.t.t_ras_ns));
        self.cmds.push(Command::act_wordlines(alloc::vec![Wordline::negation(dcc)], self.t.t_ras_ns));
        self.pre();
    }

    pub(crate) fn tra(&mut self, rows: [RowAddr; 3]) {
        self.cmds.push(Command::act(&rows, self.t.t_ras_ns));
        self.pre();
    }

    pub(crate) fn set(&mut self, row: RowAddr, value: bool) {
        let w = self.g.hff_width_bits;
        let ones = if w >= 64 { !0 } else { (1u64 << w) - 1 };
        self.cmds.push(Command::act(&[row], self.t.t_ras_ns));
        for m in self.mats.iter().filter(|&m| m < self.g.mats_per_subarray) {
            for col in self.g.mat_columns(m).step_by(w) {
                if col + w <= self.g.columns() {
                    self.cmds.push(Command::wr(row, col, if value { ones } else { 0 }, self.t.t_wr_ns));
                }
            }
        }
        self.pre();
    }

    /// Issues everything. Sectored streams open with a PRE carrying the mat
    /// mask, and their last PRE releases the mask again.
    pub(crate) fn finish(mut self, chip: &mut ChipState) -> Result<CommandTrace> {
        if self.sectored {
            if let Some(last) = self.cmds.iter_mut().rev().find(|c| matches!(c.kind, CommandKind::Pre(_))) {
                last.kind = CommandKind::Pre(None);
            }
            if !self.cmds.is_empty() {
                self.cmds.insert(0, Command::pre_sectors(Some(self.mats), self.t.t_rp_ns));
            }
        }
        let mut trace = CommandTrace::new(self.g.mats_per_subarray);
        for c in self.cmds {
            issue(chip, c.clone())?;
            trace.push(c);
        }
        Ok(trace)
    }
}

pub(crate) fn mat_selection(g: &ChipGeometry, mode: ExecMode, begin: usize, end: usize) -> Result<(usize, usize)> {
    let m = g.mats_per_subarray;
    match mode {
        ExecMode::Simdram => Ok((0, m - 1)),
        ExecMode::Mimdram => {
            if begin > end || end >= m {
                return Err(Error::Validation(format!("mat range [{begin}, {end}] outside 0..{m}")));
            }
            Ok((begin, end))
        }
    }
}

fn overlaps(a: &Range<usize>, b: &Range<usize>) -> bool {
    a.start < b.end && b.start < a.end
}

pub(crate) fn run_program(
    chip: &mut ChipState,
    prog: &MicroProgram,
    mode: ExecMode,
    insn: &BbopInstruction,
) -> Result<ExecStats> {
    prog.validate()?;
    let g = chip.geometry().clone();
    let (mb, me) = mat_selection(&g, mode, insn.mat_begin, insn.mat_end)?;
    if insn.width != prog.width() {
        return Err(Error::Validation(format!(
            "{} is built for {}-bit elements, instruction says {}",
            prog.opcode,
            prog.width(),
            insn.width
        )));
    }
    if insn.srcs.len() != prog.inputs.len() {
        return Err(Error::Validation(format!(
            "{} takes {} source operands, got {}",
            prog.opcode,
            prog.inputs.len(),
            insn.srcs.len()
        )));
    }
    let lanes = (me - mb + 1) * g.columns_per_mat;
    if insn.vector_len == 0 || insn.vector_len > lanes {
        return Err(Error::Validation(format!("vector length {} outside 1..={lanes}", insn.vector_len)));
    }
    g.check_row(insn.dst)?;
    let sub = g.subarray_of(insn.dst);
    let region = ComputeRegion::new(&g, sub, prog)?;
    let free = region.operand_rows();
    let span = |base: RowAddr, n: usize, what: &str| -> Result<Range<usize>> {
        g.check_row(base)?;
        let l = g.local_row(base);
        if g.subarray_of(base) != sub || l + n > free.end {
            return Err(Error::Validation(format!(
                "{what} rows {base}..+{n} leave the operand area of subarray {sub} (local rows {free:?})"
            )));
        }
        Ok(l..l + n)
    };
    let out_span = span(insn.dst, prog.output_rows(), "destination")?;
    let mut out_base = Vec::with_capacity(prog.outputs.len());
    let mut acc = out_span.start;
    for s in &prog.outputs {
        out_base.push(acc);
        acc += s.width;
    }
    let mut in_base = Vec::with_capacity(prog.inputs.len());
    for (k, (s, &r)) in prog.inputs.iter().zip(&insn.srcs).enumerate() {
        let sp = span(r, s.width, "source")?;
        if overlaps(&sp, &out_span) {
            return Err(Error::Validation(format!("source operand {k} overlaps the destination rows")));
        }
        in_base.push(sp.start);
    }
    let resolve = |r: RowRef| -> RowAddr {
        let local = match r {
            RowRef::Input { slot, bit } => in_base[slot] + bit,
            RowRef::Output { slot, bit } => out_base[slot] + bit,
            other => region.local(other).expect("region row"),
        };
        g.row_addr(sub, local)
    };

    let mut low = Lowerer::new(chip, MatMask::range(mb, me), mode == ExecMode::Mimdram);
    for op in &prog.ops {
        match *op {
            MicroOp::Copy { src, dst } => low.copy(resolve(src), resolve(dst)),
            MicroOp::Not { src, dst } => low.not(resolve(src), resolve(dst)),
            MicroOp::Tra([a, b, c]) => low.tra([resolve(a), resolve(b), resolve(c)]),
            MicroOp::Set { row, value } => low.set(resolve(row), value),
        }
    }
    let trace = low.finish(chip)?;
    Ok(ExecStats::from_trace(&trace, lanes, insn.vector_len))
}
