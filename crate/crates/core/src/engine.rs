// SPDX-License-Identifier: Apache-2.0
//! Command interpreter: turns timed ACT/PRE/RD/WR/NOP streams into charge
//! sharing, sensing, restore and precharge events on a [`ChipState`].
//!
//! Timing is logical. A command's `delay_after_ns` is only compared against
//! [`TimingParams::violation_threshold_ns`]:
//!
//! - ACT followed by a gap at or above the threshold shares charge, senses and
//!   restores the connected cells. A shorter gap leaves the activation in the
//!   charge-sharing phase, with the sense amplifiers still off.
//! - PRE followed by a gap at or above the threshold closes the activation and
//!   equalizes the bitlines to VDD/2. A shorter gap interrupts the precharge:
//!   if the next command is an ACT, the rows already raised stay connected.
//! - ACT arriving while the sense amplifiers are latched (directly, or after an
//!   interrupted PRE) connects the new rows to the driven rails, so they take
//!   the latched value on their own side and its complement on the other side.
//! - ACT arriving after an interrupted PRE while still in the sharing phase
//!   (ACT-PRE-ACT with both gaps violated) raises the union of both row sets
//!   and lets them share charge together before sensing.
//!
//! Only one activation may be open on the chip at a time.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::chip::{Activation, ChipState, Connection, Phase, PRECHARGE};
use crate::command::{Command, CommandKind, CommandTrace, TraceCounters, Wordline};
use crate::error::{Error, Result};
use crate::geometry::{ChipGeometry, MatMask, RowAddr};

/// Largest row set a single multi-row activation may raise.
pub const MAX_SIMULTANEOUS_ROWS: usize = 32;

/// How the row decoder combines the two addresses of an ACT-PRE-ACT.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderMode {
    /// The ACT commands name every row they raise.
    Explicit,
    /// Both addresses stay latched in the lowest `k` predecoder bits: every
    /// row that agrees with the first address wherever the two addresses
    /// agree is raised.
    Hierarchical(u32),
}

impl DecoderMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DecoderMode::Hierarchical(k) if k > 31 => {
                Err(Error::Config(format!("hierarchical decoder width {k} is too large")))
            }
            _ => Ok(()),
        }
    }
}

/// Row set raised by an ACT `r1` / PRE / ACT `r2` sequence.
///
/// In explicit mode the caller-supplied `explicit` set is returned (sorted,
/// deduplicated). In hierarchical mode the rows of the `2^k` block containing
/// `r1` whose low bits agree with `r1` on every position where `r1` and `r2`
/// agree are returned.
pub fn decoder_rowset(
    geometry: &ChipGeometry,
    r1: RowAddr,
    r2: RowAddr,
    mode: DecoderMode,
    explicit: &[RowAddr],
) -> Result<Vec<RowAddr>> {
    geometry.check_row(r1)?;
    geometry.check_row(r2)?;
    let sub = geometry.subarray_of(r1);
    if geometry.subarray_of(r2) != sub {
        return Err(Error::Address(format!("rows {r1} and {r2} are in different subarrays")));
    }
    let mut rows = match mode {
        DecoderMode::Explicit => {
            for &r in explicit {
                geometry.check_row(r)?;
                if geometry.subarray_of(r) != sub {
                    return Err(Error::Address(format!("row {r} is outside subarray {sub}")));
                }
            }
            explicit.to_vec()
        }
        DecoderMode::Hierarchical(k) => {
            let locals = hierarchical_locals(geometry.local_row(r1), geometry.local_row(r2), k)?;
            locals.into_iter().filter(|&l| l < geometry.rows_per_subarray).map(|l| geometry.row_addr(sub, l)).collect()
        }
    };
    rows.sort_unstable();
    rows.dedup();
    if rows.len() > MAX_SIMULTANEOUS_ROWS {
        return Err(Error::Unsupported(format!(
            "{} simultaneously activated rows (at most {MAX_SIMULTANEOUS_ROWS})",
            rows.len()
        )));
    }
    Ok(rows)
}

fn hierarchical_locals(l1: usize, l2: usize, k: u32) -> Result<Vec<usize>> {
    let low = if k >= usize::BITS { usize::MAX } else { (1usize << k) - 1 };
    let free = (l1 ^ l2) & low;
    let n = free.count_ones() as usize;
    if n > 5 {
        return Err(Error::Unsupported(format!(
            "{} simultaneously activated rows (at most {MAX_SIMULTANEOUS_ROWS})",
            1usize << n.min(usize::BITS as usize - 1)
        )));
    }
    let base = l1 & !free;
    let bits: Vec<usize> = (0..usize::BITS as usize).filter(|b| free >> b & 1 == 1).collect();
    Ok((0..1usize << n)
        .map(|sel| {
            bits.iter().enumerate().fold(base, |acc, (i, &b)| if sel >> i & 1 == 1 { acc | 1 << b } else { acc })
        })
        .collect())
}

/// Counters of an executed trace plus a digest of the final chip state.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecReport {
    pub counters: TraceCounters,
    pub state_hash: [u8; 32],
}

/// Applies every command of `trace` in order.
pub fn run_trace(chip: &mut ChipState, trace: &CommandTrace) -> Result<ExecReport> {
    for cmd in trace.commands() {
        issue(chip, cmd.clone())?;
    }
    Ok(ExecReport { counters: trace.counters().clone(), state_hash: chip.state_hash() })
}

/// Issues one command. Successful commands are appended to the chip log.
pub fn issue(chip: &mut ChipState, cmd: Command) -> Result<()> {
    let gap = cmd.delay_after_ns;
    if !(gap.is_finite() && gap >= 0.0) {
        return Err(Error::Validation(format!("invalid command delay {gap}")));
    }
    // An interrupted precharge only matters to an ACT; anything else lets it finish.
    if !cmd.is_act() && chip.open.as_ref().is_some_and(|a| a.interrupted) {
        close(chip);
    }
    match &cmd.kind {
        CommandKind::Act(wls) => activate(chip, wls, gap)?,
        CommandKind::Pre(mask) => precharge(chip, *mask, gap)?,
        CommandKind::Rd { row, column } => column_access(chip, *row, *column, None)?,
        CommandKind::Wr { row, column, value } => column_access(chip, *row, *column, Some(*value))?,
        CommandKind::Nop => {
            if let Some(mut act) = chip.open.take() {
                let res = if act.phase == Phase::Sharing { sense(chip, &mut act) } else { Ok(()) };
                chip.open = Some(act);
                res?;
                sync(chip);
            }
        }
    }
    chip.log.push(cmd);
    Ok(())
}

fn connections(chip: &ChipState, wls: &[Wordline]) -> Result<(usize, Vec<Connection>)> {
    let g = &chip.geometry;
    let first = wls.first().ok_or_else(|| Error::Validation("ACT with an empty row set".into()))?;
    g.check_row(first.row)?;
    let sub = g.subarray_of(first.row);
    let mut out = Vec::with_capacity(wls.len());
    for wl in wls {
        g.check_row(wl.row)?;
        if g.subarray_of(wl.row) != sub {
            return Err(Error::Validation(format!("ACT rows {} and {} span subarrays", first.row, wl.row)));
        }
        let local = g.local_row(wl.row);
        if wl.negated && !g.is_dcc(local) {
            return Err(Error::Address(format!("row {} has no negation wordline", wl.row)));
        }
        out.push(Connection { subarray: sub, local, negated: wl.negated });
    }
    out.sort_unstable();
    out.dedup();
    if out.len() > MAX_SIMULTANEOUS_ROWS {
        return Err(Error::Unsupported(format!("ACT raises {} rows", out.len())));
    }
    Ok((sub, out))
}

fn activate(chip: &mut ChipState, wls: &[Wordline], gap: f64) -> Result<()> {
    let (sub, mut new) = connections(chip, wls)?;
    let g = chip.geometry.clone();
    let stripe = g.stripe_of(sub);
    let cols = g.columns();
    let mut act = match chip.open.take() {
        None => {
            let mask = MatMask(chip.sector_latch.0 & g.all_mats().0);
            let mut act = Activation {
                stripe,
                side_a: stripe,
                side_b: g.partner(stripe),
                mask,
                rows: Vec::new(),
                phase: Phase::Sharing,
                interrupted: false,
                opener: (wls.len() == 1).then(|| wls[0]),
                bl_a: vec![PRECHARGE; cols],
                bl_b: vec![PRECHARGE; cols],
            };
            act.rows = new;
            share(chip, &mut act);
            act
        }
        Some(mut act) => {
            if act.stripe != stripe {
                let msg = format!("ACT on subarray {sub} while stripe {} is open", act.stripe);
                chip.open = Some(act);
                return Err(Error::Protocol(msg));
            }
            match act.phase {
                Phase::Sharing if act.interrupted => {
                    if let (DecoderMode::Hierarchical(k), Some(first), [second]) = (chip.decoder, act.opener, wls) {
                        new = match hierarchical_pair(&g, first, *second, k) {
                            Ok(v) => v,
                            Err(e) => {
                                chip.open = Some(act);
                                return Err(e);
                            }
                        };
                    }
                    act.rows.extend(new);
                    act.rows.sort_unstable();
                    act.rows.dedup();
                    if act.rows.len() > 2 * MAX_SIMULTANEOUS_ROWS {
                        chip.open = Some(act);
                        return Err(Error::Unsupported("too many simultaneously activated rows".into()));
                    }
                    act.interrupted = false;
                    share(chip, &mut act);
                }
                Phase::Sharing => {
                    chip.open = Some(act);
                    return Err(Error::Protocol(format!(
                        "ACT on subarray {sub} before the open activation was sensed or precharged"
                    )));
                }
                Phase::Sensed => {
                    act.interrupted = false;
                    for c in &new {
                        drive_from_rails(chip, &act, c);
                    }
                    act.rows.extend(new);
                    act.rows.sort_unstable();
                    act.rows.dedup();
                }
            }
            act
        }
    };
    let res = if act.phase == Phase::Sharing && !chip.timing.is_violated(gap) { sense(chip, &mut act) } else { Ok(()) };
    chip.open = Some(act);
    sync(chip);
    res
}

/// Rows raised by the hierarchical decoder for an APA whose two ACTs each
/// named one wordline. When the two rows sit on opposite sides of a stripe,
/// the same local pattern is raised in both subarrays.
fn hierarchical_pair(g: &ChipGeometry, first: Wordline, second: Wordline, k: u32) -> Result<Vec<Connection>> {
    let (s1, s2) = (g.subarray_of(first.row), g.subarray_of(second.row));
    let locals = hierarchical_locals(g.local_row(first.row), g.local_row(second.row), k)?;
    let mut out = Vec::new();
    for &l in locals.iter().filter(|&&l| l < g.rows_per_subarray) {
        out.push(Connection { subarray: s1, local: l, negated: false });
        if s2 != s1 {
            out.push(Connection { subarray: s2, local: l, negated: false });
        }
    }
    Ok(out)
}

/// True when a connection shares charge with the side-A bitline.
fn on_side_a(chip: &ChipState, c: &Connection) -> bool {
    chip.geometry.is_side_a(c.subarray) != c.negated
}

fn mask_columns(g: &ChipGeometry, mask: MatMask) -> impl Iterator<Item = usize> + '_ {
    mask.iter().filter(|&m| m < g.mats_per_subarray).flat_map(|m| g.mat_columns(m))
}

/// Charge sharing between every connected cell and its bitline. The bitline
/// contributes `beta` cell-capacitances at its current voltage.
pub(crate) fn share(chip: &mut ChipState, act: &mut Activation) {
    let g = chip.geometry.clone();
    let beta = chip.beta;
    let sides: Vec<(Connection, bool)> = act.rows.iter().map(|c| (*c, on_side_a(chip, c))).collect();
    for col in mask_columns(&g, act.mask) {
        for side_a in [true, false] {
            let mut sum = 0.0;
            let mut n = 0usize;
            for (c, _) in sides.iter().filter(|(_, s)| *s == side_a) {
                sum += chip.subarrays[c.subarray].cells[c.local * g.columns() + col];
                n += 1;
            }
            if n == 0 {
                continue;
            }
            let bl = if side_a { &mut act.bl_a[col] } else { &mut act.bl_b[col] };
            let v = shared_voltage(sum, n, *bl, beta);
            *bl = v;
            for (c, _) in sides.iter().filter(|(_, s)| *s == side_a) {
                chip.subarrays[c.subarray].cells[c.local * g.columns() + col] = v;
            }
        }
    }
}

/// Voltage after `n` cells holding `cell_sum` in total share charge with a
/// bitline at `bitline_v` whose capacitance is `beta` cells.
pub fn shared_voltage(cell_sum: f64, n: usize, bitline_v: f64, beta: f64) -> f64 {
    (beta * bitline_v + cell_sum) / (beta + n as f64)
}

fn sense(chip: &mut ChipState, act: &mut Activation) -> Result<()> {
    let g = chip.geometry.clone();
    let sigma = chip.noise.effective_sigma();
    let mut decisions = Vec::new();
    for col in mask_columns(&g, act.mask) {
        let z: f64 = chip.rng.sample(StandardNormal);
        let d = act.bl_a[col] - act.bl_b[col] + chip.offsets[col];
        if sigma == 0.0 && d == 0.0 {
            let subarray = act.rows.first().map_or(act.side_a, |c| c.subarray);
            return Err(Error::Tie { subarray, column: col });
        }
        decisions.push((col, d + sigma * z > 0.0));
    }
    let stripe = chip.stripes[act.stripe].as_mut().expect("stripe exists for side-A subarray");
    for &(col, high) in &decisions {
        act.bl_a[col] = if high { 1.0 } else { 0.0 };
        act.bl_b[col] = 1.0 - act.bl_a[col];
        stripe.latched[col] = Some(high);
    }
    for c in act.rows.clone() {
        drive_from_rails(chip, act, &c);
    }
    act.phase = Phase::Sensed;
    Ok(())
}

fn drive_from_rails(chip: &mut ChipState, act: &Activation, c: &Connection) {
    let g = chip.geometry.clone();
    let a = on_side_a(chip, c);
    for col in mask_columns(&g, act.mask) {
        let v = if a { act.bl_a[col] } else { act.bl_b[col] };
        *chip.cell_mut(c.subarray, c.local, col) = v;
    }
}

fn precharge(chip: &mut ChipState, mask: Option<MatMask>, gap: f64) -> Result<()> {
    let all = chip.geometry.all_mats();
    if let Some(m) = mask {
        if m.0 & !all.0 != 0 {
            return Err(Error::Validation(format!("sector bits {:#x} name mats beyond {}", m.0, all.count())));
        }
    }
    chip.sector_latch = mask.unwrap_or(all);
    if chip.open.is_some() {
        if chip.timing.is_violated(gap) {
            chip.open.as_mut().unwrap().interrupted = true;
        } else {
            close(chip);
        }
    }
    Ok(())
}

fn close(chip: &mut ChipState) {
    let Some(act) = chip.open.take() else { return };
    for s in [Some(act.side_a), act.side_b].into_iter().flatten() {
        let sa = &mut chip.subarrays[s];
        sa.row_active.clear();
        sa.mat_active = MatMask::default();
        sa.bitline_v.iter_mut().for_each(|v| *v = PRECHARGE);
        sa.precharged.iter_mut().for_each(|p| *p = true);
    }
    if let Some(st) = chip.stripes[act.stripe].as_mut() {
        st.latched.iter_mut().for_each(|l| *l = None);
    }
}

fn column_access(chip: &mut ChipState, row: RowAddr, column: usize, value: Option<u64>) -> Result<()> {
    let g = chip.geometry.clone();
    let what = if value.is_some() { "WR" } else { "RD" };
    let Some(mut act) = chip.open.take() else {
        return Err(Error::Protocol(format!("{what} to row {row} with no open row")));
    };
    let res = column_access_open(chip, &g, &mut act, row, column, value, what);
    chip.open = Some(act);
    sync(chip);
    res
}

fn column_access_open(
    chip: &mut ChipState,
    g: &ChipGeometry,
    act: &mut Activation,
    row: RowAddr,
    column: usize,
    value: Option<u64>,
    what: &str,
) -> Result<()> {
    if act.phase != Phase::Sensed {
        return Err(Error::Protocol(format!("{what} before the sense amplifiers latched")));
    }
    g.check_row(row)?;
    let conn = Connection { subarray: g.subarray_of(row), local: g.local_row(row), negated: false };
    if !act.rows.contains(&conn) {
        return Err(Error::Protocol(format!("{what} to row {row}, which is not open")));
    }
    let w = g.hff_width_bits;
    if !column.is_multiple_of(w) || column + w > g.columns() {
        return Err(Error::Address(format!("column {column} is not a {w}-bit aligned group")));
    }
    let mat = g.mat_of_column(column);
    if !act.mask.contains(mat) {
        return Err(Error::Protocol(format!("{what} to mat {mat}, which is not activated")));
    }
    let a = on_side_a(chip, &conn);
    let slot = conn.subarray * g.mats_per_subarray + mat;
    match value {
        None => {
            let mut nibble = 0u64;
            for j in 0..w {
                let v = if a { act.bl_a[column + j] } else { act.bl_b[column + j] };
                if v > PRECHARGE {
                    nibble |= 1 << j;
                }
            }
            chip.hff[slot] = nibble;
        }
        Some(v) => {
            if w < 64 && v >> w != 0 {
                return Err(Error::Validation(format!("WR value {v:#x} wider than {w} bits")));
            }
            let stripe = chip.stripes[act.stripe].as_mut().expect("stripe exists");
            for j in 0..w {
                let bit = v >> j & 1 == 1;
                let high_a = bit == a;
                act.bl_a[column + j] = if high_a { 1.0 } else { 0.0 };
                act.bl_b[column + j] = 1.0 - act.bl_a[column + j];
                stripe.latched[column + j] = Some(high_a);
            }
            for c in act.rows.clone() {
                let side = on_side_a(chip, &c);
                for j in 0..w {
                    let rail = if side { act.bl_a[column + j] } else { act.bl_b[column + j] };
                    *chip.cell_mut(c.subarray, c.local, column + j) = rail;
                }
            }
            chip.hff[slot] = v;
        }
    }
    Ok(())
}

/// Mirrors the open activation into the per-subarray inspection fields.
fn sync(chip: &mut ChipState) {
    let Some(act) = chip.open.as_ref() else { return };
    let g = &chip.geometry;
    let cols: Vec<usize> = mask_columns(g, act.mask).collect();
    for (s, bl) in [(Some(act.side_a), &act.bl_a), (act.side_b, &act.bl_b)] {
        let Some(s) = s else { continue };
        let sa = &mut chip.subarrays[s];
        sa.row_active = act.rows.iter().filter(|c| c.subarray == s).map(|c| c.local).collect();
        sa.mat_active = act.mask;
        for &c in &cols {
            sa.bitline_v[c] = bl[c];
            sa.precharged[c] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chip::{DataPattern, LogicLevel};
    use crate::geometry::ChipGeometry;
    use crate::noise::NoiseModel;

    fn chip() -> ChipState {
        ChipState::new(ChipGeometry::new(1, 2, 2, 16, 8), NoiseModel::default(), DataPattern::AllZeros).unwrap()
    }

    fn r(g: &ChipGeometry, s: usize, l: usize) -> RowAddr {
        g.row_addr(s, l)
    }

    #[test]
    fn decoder_explicit_and_hierarchical() {
        let g = ChipGeometry::new(1, 2, 1, 64, 8);
        let set =
            decoder_rowset(&g, RowAddr(3), RowAddr(7), DecoderMode::Explicit, &[RowAddr(3), RowAddr(5), RowAddr(7)]);
        assert_eq!(set.unwrap(), [RowAddr(3), RowAddr(5), RowAddr(7)]);

        let set = decoder_rowset(&g, RowAddr(8), RowAddr(11), DecoderMode::Hierarchical(2), &[]).unwrap();
        assert_eq!(set, [RowAddr(8), RowAddr(9), RowAddr(10), RowAddr(11)]);

        let set = decoder_rowset(&g, RowAddr(0), RowAddr(31), DecoderMode::Hierarchical(5), &[]).unwrap();
        assert_eq!(set.len(), 32);
        for k in 1..=5u32 {
            let r2 = RowAddr((1 << k) - 1);
            assert_eq!(decoder_rowset(&g, RowAddr(0), r2, DecoderMode::Hierarchical(k), &[]).unwrap().len(), 1 << k);
        }
        let big = decoder_rowset(&g, RowAddr(0), RowAddr(63), DecoderMode::Hierarchical(6), &[]);
        assert!(matches!(big, Err(Error::Unsupported(_))));
        let cross = decoder_rowset(&g, RowAddr(0), RowAddr(64), DecoderMode::Hierarchical(2), &[]);
        assert!(matches!(cross, Err(Error::Address(_))));
    }

    #[test]
    fn normal_activation_is_identity() {
        let mut c = chip();
        let g = c.geometry().clone();
        let row = r(&g, 0, 3);
        c.write_row_logical(row, &[true; 16]).unwrap();
        issue(&mut c, Command::act(&[row], 35.0)).unwrap();
        assert!(c.subarray(0).bitline_v.iter().all(|&v| v == 1.0));
        issue(&mut c, Command::pre(15.0)).unwrap();
        assert_eq!(c.read_row_bits(row).unwrap(), [true; 16]);
        assert!(c.subarray(0).bitline_v.iter().all(|&v| v == 0.5));
        assert!(c.subarray(0).precharged.iter().all(|&p| p));
    }

    #[test]
    fn triple_row_activation_majority() {
        let mut c = chip();
        let g = c.geometry().clone();
        let rows = [r(&g, 0, 0), r(&g, 0, 1), r(&g, 0, 2)];
        c.write_row_logical(rows[1], &[true; 16]).unwrap();
        c.write_row_logical(rows[2], &[true; 16]).unwrap();
        issue(&mut c, Command::act(&rows, 35.0)).unwrap();
        issue(&mut c, Command::pre(15.0)).unwrap();
        for row in rows {
            assert_eq!(c.read_row_bits(row).unwrap(), [true; 16]);
        }
    }

    #[test]
    fn interrupted_precharge_negates_into_partner() {
        let mut c = chip();
        let g = c.geometry().clone();
        let (src, dst) = (r(&g, 0, 4), r(&g, 1, 4));
        issue(&mut c, Command::act(&[src], 35.0)).unwrap();
        issue(&mut c, Command::pre(1.5)).unwrap();
        issue(&mut c, Command::act(&[dst], 35.0)).unwrap();
        issue(&mut c, Command::pre(15.0)).unwrap();
        assert_eq!(c.read_row_bits(dst).unwrap(), [true; 16]);
        assert_eq!(c.read_row_bits(src).unwrap(), [false; 16]);
    }

    #[test]
    fn interrupt_overwrites_regardless_of_prior_contents() {
        // two new cells on the same side, every prior combination
        for latched in [false, true] {
            for prior in 0..4u8 {
                let mut c = chip();
                let g = c.geometry().clone();
                let src = r(&g, 0, 0);
                let dsts = [r(&g, 0, 5), r(&g, 0, 6)];
                c.write_row_logical(src, &[latched; 16]).unwrap();
                for (i, d) in dsts.iter().enumerate() {
                    c.write_row_logical(*d, &[prior >> i & 1 == 1; 16]).unwrap();
                }
                issue(&mut c, Command::act(&[src], 35.0)).unwrap();
                issue(&mut c, Command::pre(1.0)).unwrap();
                issue(&mut c, Command::act(&dsts, 35.0)).unwrap();
                issue(&mut c, Command::pre(15.0)).unwrap();
                for d in dsts {
                    assert_eq!(c.read_row_bits(d).unwrap(), [latched; 16]);
                }
            }
        }
    }

    #[test]
    fn charge_sharing_is_mean_before_sensing() {
        let mut c = chip();
        let g = c.geometry().clone();
        let rows = [r(&g, 0, 0), r(&g, 0, 1), r(&g, 0, 2), r(&g, 0, 3)];
        let volts = [0.1, 0.9, 0.3, 0.45];
        for (row, v) in rows.iter().zip(volts) {
            c.write_row_voltages(*row, &[v; 16]).unwrap();
        }
        issue(&mut c, Command::act(&rows, 1.0)).unwrap();
        let expect = volts.iter().sum::<f64>() / 4.0;
        assert!(c.subarray(0).bitline_v.iter().all(|v| (v - expect).abs() < 1e-12));
        assert_eq!(c.subarray(0).row_active, [0, 1, 2, 3]);
    }

    #[test]
    fn beta_weights_precharge_level() {
        let mut c = chip().with_beta(0.5).unwrap();
        let g = c.geometry().clone();
        let row = r(&g, 0, 2);
        c.write_row_logical(row, &[true; 16]).unwrap();
        issue(&mut c, Command::act(&[row], 1.0)).unwrap();
        let expect = (0.5 * 0.5 + 1.0) / 1.5;
        assert!(c.subarray(0).bitline_v.iter().all(|v| (v - expect).abs() < 1e-12));
    }

    #[test]
    fn apa_singleton_equals_plain_activation() {
        let mut a =
            ChipState::new(ChipGeometry::new(1, 2, 2, 16, 8), NoiseModel::default(), DataPattern::Random { seed: 4 })
                .unwrap();
        let mut b = a.clone();
        let row = RowAddr(6);
        issue(&mut a, Command::act(&[row], 35.0)).unwrap();
        issue(&mut a, Command::pre(15.0)).unwrap();
        issue(&mut b, Command::act(&[row], 1.5)).unwrap();
        issue(&mut b, Command::pre(1.5)).unwrap();
        issue(&mut b, Command::act(&[row], 35.0)).unwrap();
        issue(&mut b, Command::pre(15.0)).unwrap();
        assert_eq!(a.state_hash(), b.state_hash());
    }

    #[test]
    fn hierarchical_apa_raises_block() {
        let mut c = ChipState::new(ChipGeometry::new(1, 2, 1, 16, 8), NoiseModel::default(), DataPattern::AllZeros)
            .unwrap()
            .with_decoder(DecoderMode::Hierarchical(2))
            .unwrap();
        c.write_row_logical(RowAddr(8), &[true; 8]).unwrap();
        c.write_row_logical(RowAddr(9), &[true; 8]).unwrap();
        c.write_row_logical(RowAddr(10), &[true; 8]).unwrap();
        issue(&mut c, Command::act(&[RowAddr(8)], 1.5)).unwrap();
        issue(&mut c, Command::pre(1.5)).unwrap();
        issue(&mut c, Command::act(&[RowAddr(11)], 35.0)).unwrap();
        assert_eq!(c.subarray(0).row_active, [8, 9, 10, 11]);
        issue(&mut c, Command::pre(15.0)).unwrap();
        for row in 8..12 {
            assert_eq!(c.read_row_bits(RowAddr(row)).unwrap(), [true; 8]);
        }
    }

    #[test]
    fn zero_noise_tie_is_an_error() {
        let mut c = chip();
        let g = c.geometry().clone();
        let rows = [r(&g, 0, 0), r(&g, 0, 1)];
        c.write_row_logical(rows[0], &[true; 16]).unwrap();
        let err = issue(&mut c, Command::act(&rows, 35.0)).unwrap_err();
        assert_eq!(err, Error::Tie { subarray: 0, column: 0 });
    }

    #[test]
    fn protocol_errors() {
        let mut c =
            ChipState::new(ChipGeometry::new(1, 4, 2, 16, 8), NoiseModel::default(), DataPattern::AllOnes).unwrap();
        let g = c.geometry().clone();
        assert!(matches!(issue(&mut c, Command::rd(r(&g, 0, 0), 0, 15.0)), Err(Error::Protocol(_))));
        issue(&mut c, Command::act(&[r(&g, 0, 0)], 35.0)).unwrap();
        assert!(matches!(issue(&mut c, Command::act(&[r(&g, 2, 0)], 35.0)), Err(Error::Protocol(_))));
        issue(&mut c, Command::pre(15.0)).unwrap();
        issue(&mut c, Command::act(&[r(&g, 0, 0)], 1.0)).unwrap();
        assert!(matches!(issue(&mut c, Command::act(&[r(&g, 0, 1)], 35.0)), Err(Error::Protocol(_))));
        assert!(matches!(issue(&mut c, Command::rd(r(&g, 0, 0), 0, 15.0)), Err(Error::Protocol(_))));
        assert!(matches!(issue(&mut c, Command::act(&[], 35.0)), Err(Error::Validation(_))));
        assert!(matches!(
            issue(&mut c, Command::act_wordlines(vec![Wordline::negation(r(&g, 0, 3))], 35.0)),
            Err(Error::Address(_))
        ));
    }

    #[test]
    fn sector_bits_confine_activation() {
        let mut c =
            ChipState::new(ChipGeometry::new(1, 2, 2, 16, 8), NoiseModel::default(), DataPattern::AllZeros).unwrap();
        let g = c.geometry().clone();
        let src = r(&g, 0, 0);
        let dst = r(&g, 0, 1);
        c.write_row_logical(src, &[true; 16]).unwrap();
        let before = c.snapshot();
        issue(&mut c, Command::pre_sectors(Some(MatMask::single(1)), 15.0)).unwrap();
        issue(&mut c, Command::act(&[src], 35.0)).unwrap();
        issue(&mut c, Command::act(&[dst], 35.0)).unwrap();
        issue(&mut c, Command::pre(15.0)).unwrap();
        let levels = c.read_row_logical(dst).unwrap();
        assert!(levels[..8].iter().all(|&l| l == LogicLevel::Low));
        assert!(levels[8..].iter().all(|&l| l == LogicLevel::High));
        assert!(c.changed_cells(&before).iter().all(|&(_, col)| col >= 8));
        assert_eq!(c.log().counters().per_mat_acts, [0, 2]);
    }

    #[test]
    fn rd_wr_move_nibbles() {
        let mut c = chip();
        let g = c.geometry().clone();
        let row = r(&g, 0, 2);
        let mut bits = [false; 16];
        bits[4] = true;
        bits[6] = true;
        c.write_row_logical(row, &bits).unwrap();
        issue(&mut c, Command::act(&[row], 35.0)).unwrap();
        issue(&mut c, Command::rd(row, 4, 15.0)).unwrap();
        assert_eq!(c.hff(0, 0), 0b0101);
        issue(&mut c, Command::wr(row, 12, 0b1001, 15.0)).unwrap();
        assert!(matches!(issue(&mut c, Command::wr(row, 2, 1, 15.0)), Err(Error::Address(_))));
        assert!(matches!(issue(&mut c, Command::wr(row, 0, 0x1f, 15.0)), Err(Error::Validation(_))));
        issue(&mut c, Command::pre(15.0)).unwrap();
        let got = c.read_row_bits(row).unwrap();
        assert_eq!(&got[12..16], &[true, false, false, true]);
        assert!(got[4] && got[6]);
    }

    #[test]
    fn dcc_negation_wordline() {
        let mut c = chip();
        let g = c.geometry().clone();
        let src = r(&g, 0, 0);
        let dcc = r(&g, 0, 15);
        let pattern: Vec<bool> = (0..16).map(|i| i % 3 == 0).collect();
        c.write_row_logical(src, &pattern).unwrap();
        issue(&mut c, Command::act(&[src], 35.0)).unwrap();
        issue(&mut c, Command::act_wordlines(vec![Wordline::negation(dcc)], 35.0)).unwrap();
        issue(&mut c, Command::pre(15.0)).unwrap();
        let got = c.read_row_bits(dcc).unwrap();
        assert!(got.iter().zip(&pattern).all(|(a, b)| a != b));
        assert_eq!(c.read_row_bits(src).unwrap(), pattern);
    }

    #[test]
    fn unsensed_precharge_leaves_shared_voltage() {
        let mut c = chip();
        let g = c.geometry().clone();
        let rows = [r(&g, 0, 0), r(&g, 0, 1)];
        c.write_row_logical(rows[0], &[true; 16]).unwrap();
        issue(&mut c, Command::act(&rows, 1.0)).unwrap();
        issue(&mut c, Command::pre(15.0)).unwrap();
        assert!(c.read_row_logical(rows[0]).unwrap().iter().all(|&l| l == LogicLevel::Indeterminate));
    }

    #[test]
    fn read_during_activation_is_state_error() {
        let mut c = chip();
        issue(&mut c, Command::act(&[RowAddr(0)], 35.0)).unwrap();
        assert!(matches!(c.read_row_logical(RowAddr(1)), Err(Error::State(_))));
        assert!(matches!(c.read_row_logical(RowAddr(17)), Err(Error::State(_))));
    }
}
