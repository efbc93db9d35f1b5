// SPDX-License-Identifier: Apache-2.0
//! Row-level micro-programs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Symbolic row operand, resolved to a physical row when a program runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RowRef {
    /// Bit `bit` of input operand `slot`.
    Input {
        slot: usize,
        bit: usize,
    },
    /// Bit `bit` of output operand `slot`.
    Output {
        slot: usize,
        bit: usize,
    },
    /// Bitwise compute row; TRA operands live here.
    B(usize),
    /// Constant rows holding all zeros / all ones.
    C0,
    C1,
    /// Dual-contact row; NOT writes its result here.
    Dcc(usize),
    /// Spill row below the compute region.
    Temp(usize),
}

impl RowRef {
    /// Rows a TRA may target.
    pub fn is_compute(self) -> bool {
        matches!(self, RowRef::B(_) | RowRef::Dcc(_))
    }
}

impl fmt::Display for RowRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowRef::Input { slot, bit } => write!(f, "in{slot}.{bit}"),
            RowRef::Output { slot, bit } => write!(f, "out{slot}.{bit}"),
            RowRef::B(i) => write!(f, "B{i}"),
            RowRef::C0 => f.write_str("C0"),
            RowRef::C1 => f.write_str("C1"),
            RowRef::Dcc(i) => write!(f, "DCC{i}"),
            RowRef::Temp(i) => write!(f, "T{i}"),
        }
    }
}

impl core::str::FromStr for RowRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("bad row operand `{s}`"));
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        let slot_bit = |t: &str| -> Result<(usize, usize)> {
            let (a, b) = t.split_once('.').ok_or_else(bad)?;
            Ok((num(a)?, num(b)?))
        };
        Ok(match s {
            "C0" => RowRef::C0,
            "C1" => RowRef::C1,
            _ if s.starts_with("DCC") => RowRef::Dcc(num(&s[3..])?),
            _ if s.starts_with("in") => {
                let (slot, bit) = slot_bit(&s[2..])?;
                RowRef::Input { slot, bit }
            }
            _ if s.starts_with("out") => {
                let (slot, bit) = slot_bit(&s[3..])?;
                RowRef::Output { slot, bit }
            }
            _ if s.starts_with('B') => RowRef::B(num(&s[1..])?),
            _ if s.starts_with('T') => RowRef::Temp(num(&s[1..])?),
            _ => return Err(bad()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MicroOp {
    /// RowClone: ACT src, ACT dst, PRE.
    Copy { src: RowRef, dst: RowRef },
    /// One triple-row activation.
    Tra([RowRef; 3]),
    /// ACT src, ACT the negation wordline of `dst`, PRE.
    Not { src: RowRef, dst: RowRef },
    /// ACT row, column writes, PRE.
    Set { row: RowRef, value: bool },
}

impl MicroOp {
    pub fn activations(&self) -> usize {
        match self {
            MicroOp::Copy { .. } | MicroOp::Not { .. } => 2,
            MicroOp::Tra(_) | MicroOp::Set { .. } => 1,
        }
    }

    pub fn rows(&self) -> Vec<RowRef> {
        match *self {
            MicroOp::Copy { src, dst } | MicroOp::Not { src, dst } => alloc::vec![src, dst],
            MicroOp::Tra(r) => r.to_vec(),
            MicroOp::Set { row, .. } => alloc::vec![row],
        }
    }
}

/// A named multi-bit operand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub name: String,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MicroProgram {
    pub opcode: String,
    pub inputs: Vec<Slot>,
    pub outputs: Vec<Slot>,
    /// Compute-region shape the program was allocated for.
    pub b_rows: usize,
    pub dcc_rows: usize,
    pub temps: usize,
    pub ops: Vec<MicroOp>,
    pub declared_activations: usize,
}

impl MicroProgram {
    pub fn new(
        opcode: impl Into<String>,
        inputs: Vec<Slot>,
        outputs: Vec<Slot>,
        b_rows: usize,
        dcc_rows: usize,
        temps: usize,
        ops: Vec<MicroOp>,
    ) -> Self {
        let declared_activations = ops.iter().map(MicroOp::activations).sum();
        MicroProgram { opcode: opcode.into(), inputs, outputs, b_rows, dcc_rows, temps, ops, declared_activations }
    }

    pub fn activations(&self) -> usize {
        self.ops.iter().map(MicroOp::activations).sum()
    }

    /// Element width: the widest input operand.
    pub fn width(&self) -> usize {
        self.inputs.iter().chain(&self.outputs).map(|s| s.width).max().unwrap_or(0)
    }

    /// Rows the outputs occupy, laid out back to back.
    pub fn output_rows(&self) -> usize {
        self.outputs.iter().map(|s| s.width).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.opcode.starts_with("bbop_") || self.opcode.len() == 5 {
            return Err(Error::Validation(format!("opcode `{}` must look like bbop_<name>", self.opcode)));
        }
        if self.declared_activations != self.activations() {
            return Err(Error::Validation(format!(
                "declared activation count {} differs from the {} the ops need",
                self.declared_activations,
                self.activations()
            )));
        }
        for op in &self.ops {
            for r in op.rows() {
                let ok = match r {
                    RowRef::Input { slot, bit } => self.inputs.get(slot).is_some_and(|s| bit < s.width),
                    RowRef::Output { slot, bit } => self.outputs.get(slot).is_some_and(|s| bit < s.width),
                    RowRef::B(i) => i < self.b_rows,
                    RowRef::Dcc(i) => i < self.dcc_rows,
                    RowRef::Temp(i) => i < self.temps,
                    RowRef::C0 | RowRef::C1 => true,
                };
                if !ok {
                    return Err(Error::Validation(format!("operand {r} out of range in {op:?}")));
                }
            }
            match *op {
                MicroOp::Tra(rows) if !rows.iter().all(|r| r.is_compute()) => {
                    return Err(Error::Validation(format!("TRA on non-compute rows {op:?}")));
                }
                MicroOp::Not { dst, .. } if !matches!(dst, RowRef::Dcc(_)) => {
                    return Err(Error::Validation(format!("NOT must target a DCC row: {op:?}")));
                }
                MicroOp::Set { row, .. } if !matches!(row, RowRef::C0 | RowRef::C1) => {
                    return Err(Error::Validation(format!("SET must target a constant row: {op:?}")));
                }
                MicroOp::Copy { dst: RowRef::Input { .. } | RowRef::C0 | RowRef::C1, .. } => {
                    return Err(Error::Validation(format!("COPY overwrites a protected row: {op:?}")));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
