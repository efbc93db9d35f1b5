// SPDX-License-Identifier: Apache-2.0
//! DRAM commands, timing parameters and recorded command traces.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{MatMask, RowAddr};

/// Nominal timings in nanoseconds. Delays below `violation_threshold_ns` after
/// an ACT or PRE are treated as violated (sensing not yet started, or the
/// precharge interrupted).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingParams {
    pub t_ras_ns: f64,
    pub t_rp_ns: f64,
    pub violation_threshold_ns: f64,
    /// Gap used by the canonical traces when they violate a timing.
    pub violated_gap_ns: f64,
    pub t_rd_ns: f64,
    pub t_wr_ns: f64,
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams {
            t_ras_ns: 35.0,
            t_rp_ns: 15.0,
            violation_threshold_ns: 3.0,
            violated_gap_ns: 1.5,
            t_rd_ns: 15.0,
            t_wr_ns: 15.0,
        }
    }
}

impl TimingParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.t_ras_ns,
            self.t_rp_ns,
            self.violation_threshold_ns,
            self.violated_gap_ns,
            self.t_rd_ns,
            self.t_wr_ns,
        ];
        if all.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Config("timing parameters must be positive".into()));
        }
        if self.violation_threshold_ns >= self.t_rp_ns {
            return Err(Error::Config("violation threshold must be below tRP".into()));
        }
        if self.violated_gap_ns >= self.violation_threshold_ns {
            return Err(Error::Config("violated gap must be below the violation threshold".into()));
        }
        Ok(())
    }

    pub fn is_violated(&self, gap_ns: f64) -> bool {
        gap_ns < self.violation_threshold_ns
    }
}

/// One raised wordline. `negated` selects the negation wordline of a
/// dual-contact row, which connects the cell to the bitline-bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Wordline {
    pub row: RowAddr,
    pub negated: bool,
}

impl Wordline {
    pub fn data(row: RowAddr) -> Self {
        Wordline { row, negated: false }
    }

    pub fn negation(row: RowAddr) -> Self {
        Wordline { row, negated: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandKind {
    Act(Vec<Wordline>),
    /// Precharge; the optional sector bits select the mats of the next ACT.
    Pre(Option<MatMask>),
    Rd {
        row: RowAddr,
        column: usize,
    },
    Wr {
        row: RowAddr,
        column: usize,
        value: u64,
    },
    Nop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub kind: CommandKind,
    pub delay_after_ns: f64,
}

impl Command {
    pub fn act(rows: &[RowAddr], delay_after_ns: f64) -> Self {
        let wl = rows.iter().map(|&r| Wordline::data(r)).collect();
        Command { kind: CommandKind::Act(wl), delay_after_ns }
    }

    pub fn act_wordlines(wordlines: Vec<Wordline>, delay_after_ns: f64) -> Self {
        Command { kind: CommandKind::Act(wordlines), delay_after_ns }
    }

    pub fn pre(delay_after_ns: f64) -> Self {
        Command { kind: CommandKind::Pre(None), delay_after_ns }
    }

    pub fn pre_sectors(mask: Option<MatMask>, delay_after_ns: f64) -> Self {
        Command { kind: CommandKind::Pre(mask), delay_after_ns }
    }

    pub fn rd(row: RowAddr, column: usize, delay_after_ns: f64) -> Self {
        Command { kind: CommandKind::Rd { row, column }, delay_after_ns }
    }

    pub fn wr(row: RowAddr, column: usize, value: u64, delay_after_ns: f64) -> Self {
        Command { kind: CommandKind::Wr { row, column, value }, delay_after_ns }
    }

    pub fn nop(delay_after_ns: f64) -> Self {
        Command { kind: CommandKind::Nop, delay_after_ns }
    }

    pub fn is_act(&self) -> bool {
        matches!(self.kind, CommandKind::Act(_))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceCounters {
    pub acts: u64,
    pub pres: u64,
    pub rds: u64,
    pub wrs: u64,
    pub nops: u64,
    pub simulated_ns: f64,
    /// ACTs per mat, attributed through the sector bits latched by the most
    /// recent PRE of the trace (all mats before the first sectored PRE).
    pub per_mat_acts: Vec<u64>,
}

/// Ordered command list with running counters.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandTrace {
    commands: Vec<Command>,
    counters: TraceCounters,
    mats: usize,
    latch: MatMask,
}

impl CommandTrace {
    pub fn new(mats: usize) -> Self {
        CommandTrace {
            commands: Vec::new(),
            counters: TraceCounters { per_mat_acts: vec![0; mats], ..Default::default() },
            mats,
            latch: MatMask::range(0, mats.max(1) - 1),
        }
    }

    pub fn from_commands(mats: usize, commands: impl IntoIterator<Item = Command>) -> Self {
        let mut t = CommandTrace::new(mats);
        for c in commands {
            t.push(c);
        }
        t
    }

    pub fn push(&mut self, cmd: Command) {
        let c = &mut self.counters;
        c.simulated_ns += cmd.delay_after_ns;
        match &cmd.kind {
            CommandKind::Act(_) => {
                c.acts += 1;
                for m in self.latch.iter().filter(|&m| m < self.mats) {
                    c.per_mat_acts[m] += 1;
                }
            }
            CommandKind::Pre(s) => {
                c.pres += 1;
                self.latch = s.unwrap_or(MatMask::range(0, self.mats.max(1) - 1));
            }
            CommandKind::Rd { .. } => c.rds += 1,
            CommandKind::Wr { .. } => c.wrs += 1,
            CommandKind::Nop => c.nops += 1,
        }
        self.commands.push(cmd);
    }

    pub fn extend(&mut self, other: &CommandTrace) {
        for c in &other.commands {
            self.push(c.clone());
        }
    }

    pub fn commands(&self) -> &[Command] {
        &self.commands
    }

    pub fn counters(&self) -> &TraceCounters {
        &self.counters
    }

    pub fn mats(&self) -> usize {
        self.mats
    }

    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    /// Counters recomputed from the command list alone.
    pub fn recount(&self) -> TraceCounters {
        CommandTrace::from_commands(self.mats, self.commands.iter().cloned()).counters
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_invariants() {
        assert!(TimingParams::default().validate().is_ok());
        let bad = TimingParams { violation_threshold_ns: 20.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = TimingParams { t_ras_ns: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn counters_follow_sector_latch() {
        let mut t = CommandTrace::new(4);
        t.push(Command::pre_sectors(Some(MatMask::range(1, 2)), 15.0));
        t.push(Command::act(&[RowAddr(3)], 35.0));
        t.push(Command::pre(15.0));
        t.push(Command::act(&[RowAddr(3)], 35.0));
        t.push(Command::rd(RowAddr(3), 0, 15.0));
        let c = t.counters();
        assert_eq!((c.acts, c.pres, c.rds, c.wrs), (2, 2, 1, 0));
        assert_eq!(c.per_mat_acts, [1, 2, 2, 1]);
        assert_eq!(c.simulated_ns, 115.0);
        assert_eq!(&t.recount(), c);
    }
}
