// SPDX-License-Identifier: Apache-2.0
//! Named in-DRAM operations as canonical command traces.
//!
//! Every function here validates its operands, issues its command sequence
//! on the chip and returns the issued trace. Delays come from the chip's
//! [`TimingParams`](crate::TimingParams): `t_ras_ns` after a sensing ACT,
//! `t_rp_ns` after a closing PRE and `violated_gap_ns` wherever the sequence
//! relies on a violated timing.

use alloc::format;
use alloc::vec::Vec;

use crate::chip::{ChipState, PRECHARGE};
use crate::command::{Command, CommandTrace, Wordline};
use crate::engine::issue;
use crate::error::{Error, Result};
use crate::geometry::RowAddr;

/// Largest destination set of a Multi-RowCopy.
pub const MAX_COPY_DSTS: usize = 31;

/// Selects the mechanism behind [`not_op`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NotVariant {
    /// `dst` sits in the subarray across the sense amplifiers; an interrupted
    /// precharge connects it to the bitline-bar.
    #[default]
    Cots,
    /// `dst` is a dual-contact row of the source subarray, raised through its
    /// negation wordline.
    Dcc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    And,
    Nand,
    Or,
    Nor,
}

impl OpKind {
    pub const ALL: [OpKind; 4] = [OpKind::And, OpKind::Nand, OpKind::Or, OpKind::Nor];

    /// AND/NAND share one reference composition, OR/NOR the other.
    pub fn is_and_family(self) -> bool {
        matches!(self, OpKind::And | OpKind::Nand)
    }

    /// True when the result is read from the reference rows.
    pub fn is_negated(self) -> bool {
        matches!(self, OpKind::Nand | OpKind::Nor)
    }

    pub fn eval(self, inputs: impl IntoIterator<Item = bool>) -> bool {
        let mut it = inputs.into_iter();
        match self {
            OpKind::And => it.all(|b| b),
            OpKind::Nand => !it.all(|b| b),
            OpKind::Or => it.any(|b| b),
            OpKind::Nor => !it.any(|b| b),
        }
    }
}

/// Cell contents of the reference rows for an `n`-input operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefComposition {
    pub n_inputs: usize,
    pub vdd_rows: usize,
    pub frac_rows: usize,
    pub gnd_rows: usize,
    pub op_kind: OpKind,
}

impl RefComposition {
    /// Places the reference half a cell below full for AND (`(n - 0.5) / n`)
    /// and half a cell above empty for OR (`0.5 / n`).
    pub fn for_op(op_kind: OpKind, n_inputs: usize) -> Result<Self> {
        if !matches!(n_inputs, 2 | 4 | 8 | 16) {
            return Err(Error::Unsupported(format!("{n_inputs}-input operations (supported: 2, 4, 8, 16)")));
        }
        let n = n_inputs;
        let comp = if op_kind.is_and_family() {
            RefComposition { n_inputs: n, vdd_rows: n - 1, frac_rows: 1, gnd_rows: 0, op_kind }
        } else {
            RefComposition { n_inputs: n, vdd_rows: 0, frac_rows: 1, gnd_rows: n - 1, op_kind }
        };
        comp.validate()?;
        Ok(comp)
    }

    pub fn v_ref(&self) -> f64 {
        (self.vdd_rows as f64 + 0.5 * self.frac_rows as f64) / self.n_inputs as f64
    }

    /// Checks the row counts and that the reference separates the two input
    /// weights the operation must tell apart.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_inputs;
        if n == 0 || self.vdd_rows + self.frac_rows + self.gnd_rows != n {
            return Err(Error::Validation(format!("reference rows do not add up to {n}")));
        }
        let v = self.v_ref();
        let nf = n as f64;
        let (lo, hi) = if self.op_kind.is_and_family() { ((nf - 1.0) / nf, 1.0) } else { (0.0, 1.0 / nf) };
        if !(lo < v && v < hi) {
            return Err(Error::Validation(format!("reference {v} outside the window ({lo}, {hi})")));
        }
        Ok(())
    }
}

fn run(chip: &mut ChipState, cmds: Vec<Command>) -> Result<CommandTrace> {
    let mut trace = CommandTrace::new(chip.geometry().mats_per_subarray);
    for c in cmds {
        issue(chip, c.clone())?;
        trace.push(c);
    }
    Ok(trace)
}

fn same_subarray(chip: &ChipState, rows: &[RowAddr]) -> Result<usize> {
    let g = chip.geometry();
    let first = *rows.first().ok_or_else(|| Error::Validation("empty row set".into()))?;
    g.check_row(first)?;
    let s = g.subarray_of(first);
    for &r in rows {
        g.check_row(r)?;
        if g.subarray_of(r) != s {
            return Err(Error::Unsupported(format!("rows {first} and {r} are in different subarrays")));
        }
    }
    Ok(s)
}

fn distinct(rows: &[RowAddr]) -> Result<()> {
    let mut v = rows.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.len() != rows.len() {
        return Err(Error::Validation("row set contains duplicates".into()));
    }
    Ok(())
}

/// Copies `src` into `dst` with two back-to-back activations (ACT-ACT-PRE).
pub fn row_clone(chip: &mut ChipState, src: RowAddr, dst: RowAddr) -> Result<CommandTrace> {
    same_subarray(chip, &[src, dst])?;
    let t = *chip.timing();
    run(chip, alloc::vec![Command::act(&[src], t.t_ras_ns), Command::act(&[dst], t.t_ras_ns), Command::pre(t.t_rp_ns)])
}

/// `dst = NOT(src)`.
pub fn not_op(chip: &mut ChipState, src: RowAddr, dst: RowAddr, variant: NotVariant) -> Result<CommandTrace> {
    let g = chip.geometry().clone();
    g.check_row(src)?;
    g.check_row(dst)?;
    let (ss, ds) = (g.subarray_of(src), g.subarray_of(dst));
    let t = *chip.timing();
    match variant {
        NotVariant::Cots => {
            if g.partner(ss) != Some(ds) {
                return Err(Error::Address(format!("row {dst} is not across the sense amplifiers from row {src}")));
            }
            run(
                chip,
                alloc::vec![
                    Command::act(&[src], t.t_ras_ns),
                    Command::pre(t.violated_gap_ns),
                    Command::act(&[dst], t.t_ras_ns),
                    Command::pre(t.t_rp_ns),
                ],
            )
        }
        NotVariant::Dcc => {
            if ss != ds || !g.is_dcc(g.local_row(dst)) || src == dst {
                return Err(Error::Address(format!("row {dst} is not a dual-contact row next to row {src}")));
            }
            run(
                chip,
                alloc::vec![
                    Command::act(&[src], t.t_ras_ns),
                    Command::act_wordlines(alloc::vec![Wordline::negation(dst)], t.t_ras_ns),
                    Command::pre(t.t_rp_ns),
                ],
            )
        }
    }
}

/// Copies `src` into every row of `dsts` with one interrupted precharge.
pub fn multi_row_copy(chip: &mut ChipState, src: RowAddr, dsts: &[RowAddr]) -> Result<CommandTrace> {
    if dsts.len() > MAX_COPY_DSTS {
        return Err(Error::Unsupported(format!("{} copy destinations (at most {MAX_COPY_DSTS})", dsts.len())));
    }
    let mut all = alloc::vec![src];
    all.extend_from_slice(dsts);
    same_subarray(chip, &all)?;
    let t = *chip.timing();
    if dsts.is_empty() {
        return run(chip, alloc::vec![Command::act(&[src], t.t_ras_ns), Command::pre(t.t_rp_ns)]);
    }
    run(
        chip,
        alloc::vec![
            Command::act(&[src], t.t_ras_ns),
            Command::pre(t.violated_gap_ns),
            Command::act(dsts, t.t_ras_ns),
            Command::pre(t.t_rp_ns),
        ],
    )
}

/// Triple-row activation: all three rows end up holding their bitwise majority.
pub fn tra_maj3(chip: &mut ChipState, rows: [RowAddr; 3]) -> Result<CommandTrace> {
    same_subarray(chip, &rows)?;
    distinct(&rows)?;
    let t = *chip.timing();
    run(chip, alloc::vec![Command::act(&rows, t.t_ras_ns), Command::pre(t.t_rp_ns)])
}

/// Host-writes the reference rows for `comp`: VDD rows first, then the frac
/// rows, then the GND rows.
pub fn make_reference(chip: &mut ChipState, comp: &RefComposition, ref_rows: &[RowAddr]) -> Result<()> {
    comp.validate()?;
    if ref_rows.len() != comp.n_inputs {
        return Err(Error::Validation(format!("{} reference rows for {} inputs", ref_rows.len(), comp.n_inputs)));
    }
    same_subarray(chip, ref_rows)?;
    distinct(ref_rows)?;
    let cols = chip.geometry().columns();
    for (i, &r) in ref_rows.iter().enumerate() {
        if i < comp.vdd_rows {
            chip.write_row_logical(r, &alloc::vec![true; cols])?;
        } else if i < comp.vdd_rows + comp.frac_rows {
            chip.store_frac(r, 0..cols)?;
        } else {
            chip.write_row_logical(r, &alloc::vec![false; cols])?;
        }
    }
    Ok(())
}

fn check_reference(chip: &ChipState, comp: &RefComposition, ref_rows: &[RowAddr]) -> Result<()> {
    for c in 0..chip.geometry().columns() {
        let (mut vdd, mut frac, mut gnd) = (0, 0, 0);
        for &r in ref_rows {
            let v = chip.cell(r, c);
            if v == 1.0 {
                vdd += 1;
            } else if v == PRECHARGE {
                frac += 1;
            } else if v == 0.0 {
                gnd += 1;
            }
        }
        if (vdd, frac, gnd) != (comp.vdd_rows, comp.frac_rows, comp.gnd_rows) {
            return Err(Error::Validation(format!(
                "reference rows are not composed for {:?} (column {c})",
                comp.op_kind
            )));
        }
    }
    Ok(())
}

/// N-input AND/NAND/OR/NOR with one ACT-PRE-ACT across a subarray pair.
///
/// Afterwards every input row holds the AND (OR) of the inputs and every
/// reference row holds the NAND (NOR). `kind` only selects which reference
/// composition is required; [`multi_input_result_rows`] names the rows that
/// hold its result.
pub fn multi_input_op(
    chip: &mut ChipState,
    kind: OpKind,
    input_rows: &[RowAddr],
    ref_rows: &[RowAddr],
) -> Result<CommandTrace> {
    let n = input_rows.len();
    if ref_rows.len() != n {
        return Err(Error::Validation(format!("{n} input rows but {} reference rows", ref_rows.len())));
    }
    let comp = RefComposition::for_op(kind, n)?;
    let cs = same_subarray(chip, input_rows)?;
    let rs = same_subarray(chip, ref_rows)?;
    distinct(input_rows)?;
    distinct(ref_rows)?;
    if chip.geometry().partner(cs) != Some(rs) {
        return Err(Error::Address(format!("subarrays {cs} and {rs} do not share a sense-amplifier stripe")));
    }
    check_reference(chip, &comp, ref_rows)?;
    let t = *chip.timing();
    run(
        chip,
        alloc::vec![
            Command::act(ref_rows, t.violated_gap_ns),
            Command::pre(t.violated_gap_ns),
            Command::act(input_rows, t.t_ras_ns),
            Command::pre(t.t_rp_ns),
        ],
    )
}

/// Rows holding the result of `kind` after [`multi_input_op`].
pub fn multi_input_result_rows<'a>(kind: OpKind, input_rows: &'a [RowAddr], ref_rows: &'a [RowAddr]) -> &'a [RowAddr] {
    if kind.is_negated() {
        ref_rows
    } else {
        input_rows
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrngSample {
    /// One sensed bit per column.
    pub bits: Vec<bool>,
    /// False when some column's rows were not half ones, half zeros.
    pub balanced: bool,
    pub trace: CommandTrace,
}

/// Activates a row set whose cells average to VDD/2 on every bitline and
/// returns what the sense amplifiers resolve. The rows are overwritten and
/// must be re-initialized before the next sample.
pub fn trng_sample(chip: &mut ChipState, rows: &[RowAddr]) -> Result<TrngSample> {
    if rows.len() < 2 {
        return Err(Error::Validation("a TRNG sample needs at least two rows".into()));
    }
    same_subarray(chip, rows)?;
    distinct(rows)?;
    let cols = chip.geometry().columns();
    let balanced = (0..cols).all(|c| {
        let ones = rows.iter().filter(|&&r| chip.cell(r, c) == 1.0).count();
        let zeros = rows.iter().filter(|&&r| chip.cell(r, c) == 0.0).count();
        ones == zeros && ones * 2 == rows.len()
    });
    let t = *chip.timing();
    let trace = run(
        chip,
        alloc::vec![
            Command::act(&rows[..1], t.violated_gap_ns),
            Command::pre(t.violated_gap_ns),
            Command::act(&rows[1..], t.t_ras_ns),
            Command::pre(t.t_rp_ns),
        ],
    )?;
    let bits = chip.read_row_bits(rows[0])?;
    Ok(TrngSample { bits, balanced, trace })
}
