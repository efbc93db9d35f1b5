// SPDX-License-Identifier: Apache-2.0
//! Sum reduction of `A + B` across mats.
//!
//! The `n` elements are spread evenly over the mats of `[mat_begin,
//! mat_end]`, `ceil(n / mats)` lanes per mat, element `i` in lane
//! `i % per_mat` of mat `mat_begin + i / per_mat`. Inputs are first widened
//! in-DRAM to an accumulator wide enough that nothing wraps. Then:
//!
//! 1. one bbop adds `A + B` in every mat;
//! 2. the partial sums of mat `m` are GB-MOVed into mat `m + 1`;
//! 3. a bbop in mat `m + 1` adds them to that mat's own partial sums.
//!
//! Steps 2 and 3 repeat left to right, so the result ends in `mat_end`: lane
//! `j` of the `out` rows there holds the sum of lane `j` over all mats. The
//! host adds those lanes up for the scalar total.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use super::exec::{run_program, ComputeRegion, ExecMode, Lowerer};
use super::{load_vertical, BbopInstruction, ExecStats};
use crate::chip::ChipState;
use crate::error::{Error, Result};
use crate::geometry::{ChipGeometry, MatMask, RowAddr};
use crate::mig::{compile_bitserial, BitserialOp, CompileOptions, RowRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReduceSpec {
    pub a: RowAddr,
    pub b: RowAddr,
    /// Receives `acc_width()` rows.
    pub out: RowAddr,
    /// Start of `4 * acc_width()` scratch rows.
    pub scratch: RowAddr,
    pub width: usize,
    pub mat_begin: usize,
    pub mat_end: usize,
    pub n: usize,
}

impl ReduceSpec {
    pub fn mats(&self) -> usize {
        self.mat_end + 1 - self.mat_begin
    }

    pub fn per_mat(&self) -> usize {
        self.n.div_ceil(self.mats())
    }

    /// Element width plus enough headroom for `2 * mats` addends.
    pub fn acc_width(&self) -> usize {
        let terms = 2 * self.mats();
        self.width + (usize::BITS - (terms - 1).leading_zeros()) as usize
    }

    /// Column of element `i`.
    pub fn column_of(&self, g: &ChipGeometry, i: usize) -> usize {
        let p = self.per_mat();
        (self.mat_begin + i / p) * g.columns_per_mat + i % p
    }

    /// One value per chip column with `elements` placed as described above
    /// and zeros elsewhere, ready for [`store_vertical`](super::store_vertical).
    pub fn column_image(&self, g: &ChipGeometry, elements: &[u64]) -> Result<Vec<u64>> {
        if elements.len() != self.n {
            return Err(Error::Validation(format!("{} elements for a reduction of {}", elements.len(), self.n)));
        }
        let mut img = vec![0u64; g.columns()];
        for (i, &e) in elements.iter().enumerate() {
            img[self.column_of(g, i)] = e;
        }
        Ok(img)
    }

    fn validate(&self, g: &ChipGeometry) -> Result<()> {
        let m = g.mats_per_subarray;
        if self.mat_begin > self.mat_end || self.mat_end >= m {
            return Err(Error::Validation(format!("mat range [{}, {}] outside 0..{m}", self.mat_begin, self.mat_end)));
        }
        if self.n == 0 || self.per_mat() > g.columns_per_mat {
            return Err(Error::Validation(format!(
                "{} elements do not fit {} mats of {} lanes",
                self.n,
                self.mats(),
                g.columns_per_mat
            )));
        }
        if self.width == 0 || self.acc_width() > 64 {
            return Err(Error::Validation(format!("element width {} too wide to accumulate", self.width)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReduceOutcome {
    pub stats: ExecStats,
    pub acc_width: usize,
    /// Per-lane sums left in the `out` rows of `mat_end`.
    pub lanes: Vec<u64>,
    pub total: u64,
    /// Number of row-wide GB-MOV transfers.
    pub gb_movs: usize,
}

fn span(g: &ChipGeometry, base: RowAddr, n: usize) -> Result<(usize, Range<usize>)> {
    g.check_row(base)?;
    g.check_row(RowAddr(base.0 + n as u32 - 1))?;
    let s = g.subarray_of(base);
    if g.subarray_of(RowAddr(base.0 + n as u32 - 1)) != s {
        return Err(Error::Validation(format!("rows {base}..+{n} cross a subarray boundary")));
    }
    let l = g.local_row(base);
    Ok((s, l..l + n))
}

pub fn vector_reduce(chip: &mut ChipState, spec: &ReduceSpec) -> Result<ReduceOutcome> {
    let g = chip.geometry().clone();
    spec.validate(&g)?;
    let acc = spec.acc_width();
    let (prog, _) = compile_bitserial(BitserialOp::Add, acc, &CompileOptions::default())?;
    let parts = [(spec.a, spec.width), (spec.b, spec.width), (spec.out, acc), (spec.scratch, 4 * acc)];
    let mut spans = Vec::new();
    for &(r, n) in &parts {
        spans.push(span(&g, r, n)?);
    }
    let sub = spans[0].0;
    if spans.iter().any(|s| s.0 != sub) {
        return Err(Error::Validation("reduction operands must share one subarray".into()));
    }
    let region = ComputeRegion::new(&g, sub, &prog)?;
    for (i, (_, x)) in spans.iter().enumerate() {
        if x.end > region.operand_rows().end {
            return Err(Error::Validation(format!("operand rows {x:?} run into the compute region")));
        }
        // A and B may alias; everything else must be disjoint.
        for (_, y) in &spans[(i + 1).max(2)..] {
            if x.start < y.end && y.start < x.end {
                return Err(Error::Validation(format!("operand rows {x:?} and {y:?} overlap")));
            }
        }
    }

    let row = |base: RowAddr, i: usize| RowAddr(base.0 + i as u32);
    let (wa, wb) = (spec.scratch, row(spec.scratch, acc));
    let (partial, moved) = (row(spec.scratch, 2 * acc), row(spec.scratch, 3 * acc));
    let (mb, me) = (spec.mat_begin, spec.mat_end);
    let mats = MatMask::range(mb, me);

    // Widen A and B into scratch, zero-filling the headroom bits.
    let mut low = Lowerer::new(chip, mats, true);
    let c0 = g.row_addr(sub, region.local(RowRef::C0).expect("C0"));
    low.set(c0, false);
    for (src, dst) in [(spec.a, wa), (spec.b, wb)] {
        for i in 0..acc {
            low.copy(if i < spec.width { row(src, i) } else { c0 }, row(dst, i));
        }
    }
    let widen = low.finish(chip)?;

    let add = |dst: RowAddr, s1: RowAddr, s2: RowAddr, b: usize, e: usize, n: usize| BbopInstruction {
        opcode: prog.opcode.clone(),
        dst,
        srcs: vec![s1, s2],
        mat_begin: b,
        mat_end: e,
        width: acc,
        vector_len: n,
    };
    let first_dst = if mb == me { spec.out } else { partial };
    let mut stats = run_program(chip, &prog, ExecMode::Mimdram, &add(first_dst, wa, wb, mb, me, spec.n))?;
    stats.absorb(&ExecStats::from_trace(&widen, 0, 0));

    let per = spec.per_mat();
    let mut gb_movs = 0;
    for m in mb..me {
        let from = if m == mb { partial } else { spec.out };
        for i in 0..acc {
            let t = super::gb_mov(chip, m, m + 1, row(from, i), row(moved, i), 0..per)?;
            stats.absorb(&ExecStats::from_trace(&t, 0, 0));
            gb_movs += 1;
        }
        let s = run_program(chip, &prog, ExecMode::Mimdram, &add(spec.out, partial, moved, m + 1, m + 1, per))?;
        stats.absorb(&s);
    }

    let img = load_vertical(chip, spec.out, acc)?;
    let base = me * g.columns_per_mat;
    let lanes = img[base..base + per].to_vec();
    let total = lanes.iter().sum();
    Ok(ReduceOutcome { stats, acc_width: acc, lanes, total, gb_movs })
}
