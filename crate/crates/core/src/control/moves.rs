// SPDX-License-Identifier: Apache-2.0
//! LC-MOV (within a mat, through its helper flip-flops) and GB-MOV (between
//! mats, hop by hop along the chain of neighbouring sense-amplifier sets).
//! Columns are mat-local.

use alloc::format;
use core::ops::Range;

use crate::chip::ChipState;
use crate::command::{Command, CommandTrace};
use crate::engine::issue;
use crate::error::{Error, Result};
use crate::geometry::{ChipGeometry, MatMask, RowAddr};

struct Emit<'a> {
    chip: &'a mut ChipState,
    trace: CommandTrace,
}

impl Emit<'_> {
    fn cmd(&mut self, c: Command) -> Result<()> {
        issue(self.chip, c.clone())?;
        self.trace.push(c);
        Ok(())
    }
}

fn check_group(g: &ChipGeometry, mat: usize, col: usize) -> Result<usize> {
    let w = g.hff_width_bits;
    if mat >= g.mats_per_subarray {
        return Err(Error::Address(format!("mat {mat} out of range")));
    }
    if !col.is_multiple_of(w) || col + w > g.columns_per_mat {
        return Err(Error::Address(format!(
            "mat-local column {col} does not start a {w}-bit group inside the mat; use gb_mov across mats"
        )));
    }
    Ok(mat * g.columns_per_mat + col)
}

fn idle(chip: &ChipState) -> Result<()> {
    if !chip.is_idle() {
        return Err(Error::State("data move while a row is open".into()));
    }
    Ok(())
}

/// Moves one helper-flip-flop group (`hff_width_bits` bits) inside `mat`:
/// ACT-RD-PRE on the source, then ACT-WR-PRE on the destination with the
/// flip-flops still holding the data.
pub fn lc_mov(
    chip: &mut ChipState,
    mat: usize,
    src_row: RowAddr,
    src_col: usize,
    dst_row: RowAddr,
    dst_col: usize,
) -> Result<CommandTrace> {
    let g = chip.geometry().clone();
    let (sc, dc) = (check_group(&g, mat, src_col)?, check_group(&g, mat, dst_col)?);
    g.check_row(src_row)?;
    g.check_row(dst_row)?;
    idle(chip)?;
    let t = *chip.timing();
    let mats = g.mats_per_subarray;
    let mut e = Emit { chip, trace: CommandTrace::new(mats) };
    e.cmd(Command::act(&[src_row], t.t_ras_ns))?;
    e.cmd(Command::rd(src_row, sc, t.t_rd_ns))?;
    let nibble = e.chip.hff(g.subarray_of(src_row), mat);
    e.cmd(Command::pre_sectors(Some(MatMask::single(mat)), t.t_rp_ns))?;
    e.cmd(Command::act(&[dst_row], t.t_ras_ns))?;
    e.cmd(Command::wr(dst_row, dc, nibble, t.t_wr_ns))?;
    e.cmd(Command::pre(t.t_rp_ns))?;
    Ok(e.trace)
}

/// Moves the bits at mat-local columns `cols` of `src_row` in `src_mat` to
/// the same columns of `dst_row` in `dst_mat`.
///
/// Each group of `hff_width_bits` bits is read, shifted through
/// `|dst_mat - src_mat|` neighbouring sense-amplifier sets (one NOP of
/// `t_rd + t_wr` per hop) and written. A trailing partial group first reads
/// the destination so the bits outside `cols` keep their value.
pub fn gb_mov(
    chip: &mut ChipState,
    src_mat: usize,
    dst_mat: usize,
    src_row: RowAddr,
    dst_row: RowAddr,
    cols: Range<usize>,
) -> Result<CommandTrace> {
    let g = chip.geometry().clone();
    let w = g.hff_width_bits;
    if src_mat == dst_mat {
        return Err(Error::Validation(format!("source and destination are both mat {src_mat}; use lc_mov")));
    }
    if cols.is_empty() || !cols.start.is_multiple_of(w) || cols.end > g.columns_per_mat {
        return Err(Error::Address(format!("column range {cols:?} is empty, unaligned or leaves the mat")));
    }
    for m in [src_mat, dst_mat] {
        check_group(&g, m, 0)?;
    }
    g.check_row(src_row)?;
    g.check_row(dst_row)?;
    idle(chip)?;
    let t = *chip.timing();
    let hops = src_mat.abs_diff(dst_mat);
    let mut e = Emit { chip, trace: CommandTrace::new(g.mats_per_subarray) };
    for start in cols.clone().step_by(w) {
        let len = (cols.end - start).min(w);
        let (sc, dc) = (src_mat * g.columns_per_mat + start, dst_mat * g.columns_per_mat + start);
        e.cmd(Command::act(&[src_row], t.t_ras_ns))?;
        e.cmd(Command::rd(src_row, sc, t.t_rd_ns))?;
        let mut value = e.chip.hff(g.subarray_of(src_row), src_mat);
        e.cmd(Command::pre_sectors(Some(MatMask::single(dst_mat)), t.t_rp_ns))?;
        for _ in 0..hops {
            e.cmd(Command::nop(t.t_rd_ns + t.t_wr_ns))?;
        }
        e.cmd(Command::act(&[dst_row], t.t_ras_ns))?;
        if len < w {
            e.cmd(Command::rd(dst_row, dc, t.t_rd_ns))?;
            let keep = !((1u64 << len) - 1);
            value = (value & !keep) | (e.chip.hff(g.subarray_of(dst_row), dst_mat) & keep);
        }
        e.cmd(Command::wr(dst_row, dc, value, t.t_wr_ns))?;
        e.cmd(Command::pre(t.t_rp_ns))?;
    }
    Ok(e.trace)
}

/// Dispatches a move: LC-MOV per group when both ends are in the same mat,
/// GB-MOV otherwise.
pub fn data_move(
    chip: &mut ChipState,
    src_mat: usize,
    dst_mat: usize,
    src_row: RowAddr,
    dst_row: RowAddr,
    cols: Range<usize>,
) -> Result<CommandTrace> {
    if src_mat != dst_mat {
        return gb_mov(chip, src_mat, dst_mat, src_row, dst_row, cols);
    }
    let w = chip.geometry().hff_width_bits;
    if cols.is_empty() || !cols.start.is_multiple_of(w) || !cols.end.is_multiple_of(w) {
        return Err(Error::Address(format!("intra-mat move of {cols:?} is not whole {w}-bit groups")));
    }
    let mut trace = CommandTrace::new(chip.geometry().mats_per_subarray);
    for c in cols.step_by(w) {
        trace.extend(&lc_mov(chip, src_mat, src_row, c, dst_row, c)?);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chip::DataPattern;
    use crate::command::CommandKind;
    use crate::noise::NoiseModel;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chip(seed: u64) -> ChipState {
        ChipState::new(ChipGeometry::default(), NoiseModel::noiseless(seed), DataPattern::Random { seed }).unwrap()
    }

    fn bits(c: &ChipState, row: RowAddr, cols: Range<usize>) -> Vec<bool> {
        c.read_row_bits(row).unwrap()[cols].to_vec()
    }

    fn kinds(t: &CommandTrace) -> Vec<&'static str> {
        t.commands()
            .iter()
            .map(|c| match c.kind {
                CommandKind::Act(_) => "ACT",
                CommandKind::Pre(_) => "PRE",
                CommandKind::Rd { .. } => "RD",
                CommandKind::Wr { .. } => "WR",
                CommandKind::Nop => "NOP",
            })
            .collect()
    }

    #[test]
    fn lc_mov_copies_one_group() {
        let mut c = chip(1);
        let (a, b) = (RowAddr(3), RowAddr(40));
        let src = bits(&c, a, 0..4);
        let before = c.snapshot();
        let t = lc_mov(&mut c, 0, a, 0, b, 8).unwrap();
        assert_eq!(kinds(&t), ["ACT", "RD", "PRE", "ACT", "WR", "PRE"]);
        assert_eq!(bits(&c, b, 8..12), src);
        for (row, col) in c.changed_cells(&before) {
            assert!(row == b && (8..12).contains(&col));
        }
    }

    #[test]
    fn lc_mov_in_place_is_identity() {
        let mut c = chip(2);
        let before = c.snapshot();
        lc_mov(&mut c, 2, RowAddr(7), 4, RowAddr(7), 4).unwrap();
        assert!(c.changed_cells(&before).is_empty());
    }

    #[test]
    fn lc_mov_diff_is_exactly_the_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut c = chip(3);
        let g = c.geometry().clone();
        for _ in 0..100 {
            let mat = rng.random_range(0..g.mats_per_subarray);
            let (sr, dr) = (RowAddr(rng.random_range(0..256)), RowAddr(rng.random_range(0..256)));
            let (sc, dc) = (rng.random_range(0..4) * 4, rng.random_range(0..4) * 4);
            if sr == dr && sc == dc {
                continue;
            }
            let base = mat * g.columns_per_mat;
            let src = bits(&c, sr, base + sc..base + sc + 4);
            // Make every destination bit differ from its source bit.
            let mut row = c.read_row_bits(dr).unwrap();
            for j in 0..4 {
                row[base + dc + j] = !src[j];
            }
            c.write_row_logical(dr, &row).unwrap();
            let before = c.snapshot();
            lc_mov(&mut c, mat, sr, sc, dr, dc).unwrap();
            let mut diff = c.changed_cells(&before);
            diff.sort();
            let want: Vec<_> = (0..4).map(|j| (dr, base + dc + j)).collect();
            assert_eq!(diff, want);
            assert_eq!(bits(&c, dr, base + dc..base + dc + 4), src);
        }
    }

    #[test]
    fn lc_mov_rejects_groups_outside_the_mat() {
        let mut c = chip(4);
        assert!(matches!(lc_mov(&mut c, 0, RowAddr(0), 14, RowAddr(1), 0), Err(Error::Address(_))));
        assert!(matches!(lc_mov(&mut c, 0, RowAddr(0), 16, RowAddr(1), 0), Err(Error::Address(_))));
        assert!(matches!(lc_mov(&mut c, 4, RowAddr(0), 0, RowAddr(1), 0), Err(Error::Address(_))));
        assert!(c.log().is_empty());
    }

    #[test]
    fn gb_mov_hops_and_iterations() {
        let mut c = chip(5);
        let t = gb_mov(&mut c, 0, 1, RowAddr(2), RowAddr(9), 0..4).unwrap();
        assert_eq!(kinds(&t), ["ACT", "RD", "PRE", "NOP", "ACT", "WR", "PRE"]);
        let t = gb_mov(&mut c, 0, 3, RowAddr(2), RowAddr(9), 0..4).unwrap();
        assert_eq!(t.counters().nops, 3);
        let t = gb_mov(&mut c, 0, 1, RowAddr(2), RowAddr(9), 0..5).unwrap();
        assert_eq!(t.counters().wrs, 2);
        assert_eq!(t.counters().nops, 2);
    }

    #[test]
    fn gb_mov_partial_group_keeps_neighbours() {
        let mut c = chip(6);
        let (s, d) = (RowAddr(5), RowAddr(6));
        let src = bits(&c, s, 0..5);
        let keep = bits(&c, d, 16 + 5..16 + 8);
        let before = c.snapshot();
        gb_mov(&mut c, 0, 1, s, d, 0..5).unwrap();
        assert_eq!(bits(&c, d, 16..21), src);
        assert_eq!(bits(&c, d, 21..24), keep);
        for (row, col) in c.changed_cells(&before) {
            assert!(row == d && (16..21).contains(&col));
        }
    }

    #[test]
    fn dispatch() {
        let mut c = chip(7);
        let t = data_move(&mut c, 1, 1, RowAddr(0), RowAddr(1), 0..8).unwrap();
        assert_eq!(t.counters().nops, 0);
        assert_eq!(t.counters().acts, 4);
        let t = data_move(&mut c, 1, 2, RowAddr(0), RowAddr(1), 0..8).unwrap();
        assert_eq!(t.counters().nops, 2);
        assert!(gb_mov(&mut c, 1, 1, RowAddr(0), RowAddr(1), 0..4).is_err());
    }
}
