// SPDX-License-Identifier: Apache-2.0
//! Ripple-carry and bitwise netlists for vertically laid out operands.
//!
//! Operand `a` bit `i` is signal `a[i]`, `b` likewise; results are `s[i]`
//! (or the single bit `lt`). Addition and subtraction wrap modulo `2^w`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::netlist::{Gate, GateOp, Netlist};
use super::{compile, CompileOptions, CompileReport, MicroProgram};
use crate::error::{Error, Result};

pub const MAX_WIDTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitserialOp {
    Add,
    Sub,
    And,
    Or,
    Xor,
    /// Unsigned `a < b`.
    Lt,
}

impl BitserialOp {
    pub const ALL: [BitserialOp; 6] =
        [BitserialOp::Add, BitserialOp::Sub, BitserialOp::And, BitserialOp::Or, BitserialOp::Xor, BitserialOp::Lt];

    pub fn name(self) -> &'static str {
        match self {
            BitserialOp::Add => "add",
            BitserialOp::Sub => "sub",
            BitserialOp::And => "and",
            BitserialOp::Or => "or",
            BitserialOp::Xor => "xor",
            BitserialOp::Lt => "lt",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        let s = s.strip_prefix("bbop_").unwrap_or(s);
        BitserialOp::ALL.into_iter().find(|o| o.name().eq_ignore_ascii_case(s))
    }

    pub fn opcode(self) -> String {
        format!("bbop_{}", self.name())
    }

    /// Host reference on `width`-bit unsigned values.
    pub fn reference(self, a: u64, b: u64, width: usize) -> u64 {
        let mask = if width >= 64 { !0 } else { (1u64 << width) - 1 };
        let (a, b) = (a & mask, b & mask);
        match self {
            BitserialOp::Add => a.wrapping_add(b) & mask,
            BitserialOp::Sub => a.wrapping_sub(b) & mask,
            BitserialOp::And => a & b,
            BitserialOp::Or => a | b,
            BitserialOp::Xor => a ^ b,
            BitserialOp::Lt => (a < b) as u64,
        }
    }
}

struct Gen {
    gates: Vec<Gate>,
    fresh: usize,
}

impl Gen {
    fn gate(&mut self, op: GateOp, out: Option<String>, args: &[&str]) -> String {
        let out = out.unwrap_or_else(|| {
            self.fresh += 1;
            format!("n{}", self.fresh)
        });
        self.gates.push(Gate { op, out: out.clone(), args: args.iter().map(|s| String::from(*s)).collect(), line: 0 });
        out
    }
}

pub fn bitserial_netlist(op: BitserialOp, width: usize) -> Result<Netlist> {
    if width == 0 || width > MAX_WIDTH {
        return Err(Error::Validation(format!("element width {width} outside 1..={MAX_WIDTH}")));
    }
    let a: Vec<String> = (0..width).map(|i| format!("a[{i}]")).collect();
    let b: Vec<String> = (0..width).map(|i| format!("b[{i}]")).collect();
    let s: Vec<String> = (0..width).map(|i| format!("s[{i}]")).collect();
    let mut inputs = a.clone();
    inputs.extend(b.iter().cloned());
    let mut g = Gen { gates: Vec::new(), fresh: 0 };
    let outputs = match op {
        BitserialOp::And | BitserialOp::Or | BitserialOp::Xor => {
            let gop = match op {
                BitserialOp::And => GateOp::And,
                BitserialOp::Or => GateOp::Or,
                _ => GateOp::Xor,
            };
            for i in 0..width {
                g.gate(gop, Some(s[i].clone()), &[&a[i], &b[i]]);
            }
            s
        }
        BitserialOp::Add | BitserialOp::Sub | BitserialOp::Lt => {
            let sub = op != BitserialOp::Add;
            let sums = op != BitserialOp::Lt;
            // Subtraction adds the complement of b with a carry-in of one.
            let bb: Vec<String> =
                if sub { (0..width).map(|i| g.gate(GateOp::Not, None, &[&b[i]])).collect() } else { b.clone() };
            if sums {
                g.gate(GateOp::Xor, Some(s[0].clone()), &[&a[0], &b[0]]);
            }
            let need_carry = |i: usize| op == BitserialOp::Lt || i + 1 < width;
            let mut carry = if !need_carry(0) {
                None
            } else if sub {
                Some(g.gate(GateOp::Or, None, &[&a[0], &bb[0]]))
            } else {
                Some(g.gate(GateOp::And, None, &[&a[0], &b[0]]))
            };
            for i in 1..width {
                let c = carry.clone().unwrap();
                let t = g.gate(GateOp::Xor, None, &[&a[i], &bb[i]]);
                if sums {
                    g.gate(GateOp::Xor, Some(s[i].clone()), &[&t, &c]);
                }
                if need_carry(i) {
                    let u = g.gate(GateOp::And, None, &[&a[i], &bb[i]]);
                    let v = g.gate(GateOp::And, None, &[&t, &c]);
                    carry = Some(g.gate(GateOp::Or, None, &[&u, &v]));
                }
            }
            if op == BitserialOp::Lt {
                let c = carry.unwrap();
                g.gate(GateOp::Not, Some("lt".into()), &[&c]);
                vec!["lt".into()]
            } else {
                s
            }
        }
    };
    Netlist::new(inputs, outputs, g.gates)
}

/// Builds the width-`w` netlist for `op` and runs the full compile pipeline.
pub fn compile_bitserial(
    op: BitserialOp,
    width: usize,
    opts: &CompileOptions,
) -> Result<(MicroProgram, CompileReport)> {
    let net = bitserial_netlist(op, width)?;
    compile(&net, &op.opcode(), opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pack(v: u64, width: usize) -> Vec<bool> {
        (0..width).map(|i| v >> i & 1 == 1).collect()
    }

    #[test]
    fn netlists_match_reference() {
        for op in BitserialOp::ALL {
            for width in [1, 3, 4] {
                let n = bitserial_netlist(op, width).unwrap();
                for a in 0..1u64 << width {
                    for b in 0..1u64 << width {
                        let mut ins = pack(a, width);
                        ins.extend(pack(b, width));
                        let out = n.eval(&ins);
                        let got = out.iter().enumerate().fold(0u64, |acc, (i, &bit)| acc | (bit as u64) << i);
                        assert_eq!(got, op.reference(a, b, width), "{op:?} w={width} a={a} b={b}");
                    }
                }
            }
        }
    }

    #[test]
    fn one_bit_add_is_half_adder_sum() {
        let n = bitserial_netlist(BitserialOp::Add, 1).unwrap();
        assert_eq!(n.outputs(), ["s[0]"]);
        assert_eq!(n.gates().len(), 1);
    }

    #[test]
    fn names_and_width_checks() {
        assert_eq!(BitserialOp::from_name("bbop_add"), Some(BitserialOp::Add));
        assert_eq!(BitserialOp::from_name("LT"), Some(BitserialOp::Lt));
        assert!(BitserialOp::from_name("mul").is_none());
        assert!(bitserial_netlist(BitserialOp::Add, 0).is_err());
        assert!(bitserial_netlist(BitserialOp::Add, 65).is_err());
    }
}
