// SPDX-License-Identifier: Apache-2.0
//! Gate-level netlists over AND/OR/NOT/XOR.
//!
//! Text form, one statement per line, `#` starts a comment:
//!
//! ```text
//! INPUT a b cin
//! OUTPUT sum cout
//! t = XOR a b
//! sum = XOR t cin
//! cout = OR u v
//! u = AND a b
//! v = AND t cin
//! ```
//!
//! Gates may appear in any order. Identifiers start with a letter or `_` and
//! may contain letters, digits, `_` and `[` `]`; a name of the form
//! `base[i]` is bit `i` of the multi-bit operand `base`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateOp {
    And,
    Or,
    Not,
    Xor,
}

impl GateOp {
    pub fn arity(self) -> usize {
        if self == GateOp::Not {
            1
        } else {
            2
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateOp::And => "AND",
            GateOp::Or => "OR",
            GateOp::Not => "NOT",
            GateOp::Xor => "XOR",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_uppercase().as_str() {
            "AND" | "AND2" => GateOp::And,
            "OR" | "OR2" => GateOp::Or,
            "NOT" | "INV" => GateOp::Not,
            "XOR" | "XOR2" => GateOp::Xor,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub op: GateOp,
    pub out: String,
    pub args: Vec<String>,
    /// Source line (1-based), 0 for generated gates.
    pub line: usize,
}

/// A validated, acyclic netlist whose gates are stored in topological order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    inputs: Vec<String>,
    outputs: Vec<String>,
    gates: Vec<Gate>,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Netlist { line, msg: msg.into() }
}

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '[' | ']'))
}

impl Netlist {
    /// Validates and topologically sorts. `output_lines` gives the source
    /// line of each output declaration for diagnostics (may be empty).
    pub fn new(inputs: Vec<String>, outputs: Vec<String>, gates: Vec<Gate>) -> Result<Self> {
        Self::with_lines(inputs, outputs, gates, &[])
    }

    fn with_lines(inputs: Vec<String>, outputs: Vec<String>, gates: Vec<Gate>, output_lines: &[usize]) -> Result<Self> {
        let mut defined: BTreeMap<&str, Option<usize>> = BTreeMap::new();
        for name in &inputs {
            if defined.insert(name, None).is_some() {
                return Err(err(0, format!("input `{name}` declared twice")));
            }
        }
        for (i, g) in gates.iter().enumerate() {
            if g.args.len() != g.op.arity() {
                return Err(err(
                    g.line,
                    format!("{} takes {} operand(s), got {}", g.op.name(), g.op.arity(), g.args.len()),
                ));
            }
            if defined.insert(&g.out, Some(i)).is_some() {
                return Err(err(g.line, format!("signal `{}` defined twice", g.out)));
            }
        }
        for g in &gates {
            for a in &g.args {
                if !defined.contains_key(a.as_str()) {
                    return Err(err(g.line, format!("undefined signal `{a}`")));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for (k, o) in outputs.iter().enumerate() {
            let line = output_lines.get(k).copied().unwrap_or(0);
            if !defined.contains_key(o.as_str()) {
                return Err(err(line, format!("output `{o}` is never defined")));
            }
            if !seen.insert(o) {
                return Err(err(line, format!("output `{o}` declared twice")));
            }
        }

        // Kahn's algorithm, keeping source order among ready gates.
        let n = gates.len();
        let mut indeg = vec![0usize; n];
        let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, g) in gates.iter().enumerate() {
            for a in &g.args {
                if let Some(Some(j)) = defined.get(a.as_str()) {
                    indeg[i] += 1;
                    users[*j].push(i);
                }
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &u in &users[i] {
                indeg[u] -= 1;
                if indeg[u] == 0 {
                    ready.insert(u);
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n).find(|&i| indeg[i] > 0).unwrap();
            return Err(err(gates[stuck].line, format!("combinational cycle through `{}`", gates[stuck].out)));
        }
        let mut slots: Vec<Option<Gate>> = gates.into_iter().map(Some).collect();
        let gates = order.into_iter().map(|i| slots[i].take().unwrap()).collect();
        Ok(Netlist { inputs, outputs, gates })
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Rewrites every XOR as `AND(OR(a, b), NOT(AND(a, b)))`.
    pub fn expand_xor(&self) -> Netlist {
        let mut gates = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            if g.op != GateOp::Xor {
                gates.push(g.clone());
                continue;
            }
            let (a, b) = (g.args[0].clone(), g.args[1].clone());
            let or = format!("{}$or", g.out);
            let and = format!("{}$and", g.out);
            let nand = format!("{}$nand", g.out);
            let mk = |op, out: &String, args: Vec<String>| Gate { op, out: out.clone(), args, line: g.line };
            gates.push(mk(GateOp::Or, &or, vec![a.clone(), b.clone()]));
            gates.push(mk(GateOp::And, &and, vec![a, b]));
            gates.push(mk(GateOp::Not, &nand, vec![and.clone()]));
            gates.push(mk(GateOp::And, &g.out, vec![or, nand]));
        }
        Netlist { inputs: self.inputs.clone(), outputs: self.outputs.clone(), gates }
    }

    /// Bit-parallel evaluation: word `i` of `inputs` carries 64 values of input `i`.
    pub fn eval_words(&self, inputs: &[u64]) -> Vec<u64> {
        assert_eq!(inputs.len(), self.inputs.len());
        let mut vals: BTreeMap<&str, u64> =
            self.inputs.iter().map(String::as_str).zip(inputs.iter().copied()).collect();
        for g in &self.gates {
            let a = vals[g.args[0].as_str()];
            let v = match g.op {
                GateOp::Not => !a,
                GateOp::And => a & vals[g.args[1].as_str()],
                GateOp::Or => a | vals[g.args[1].as_str()],
                GateOp::Xor => a ^ vals[g.args[1].as_str()],
            };
            vals.insert(&g.out, v);
        }
        self.outputs.iter().map(|o| vals[o.as_str()]).collect()
    }

    pub fn eval(&self, inputs: &[bool]) -> Vec<bool> {
        let words: Vec<u64> = inputs.iter().map(|&b| if b { !0 } else { 0 }).collect();
        self.eval_words(&words).into_iter().map(|w| w & 1 == 1).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "INPUT {}", self.inputs.join(" "));
        let _ = writeln!(s, "OUTPUT {}", self.outputs.join(" "));
        for g in &self.gates {
            let _ = writeln!(s, "{} = {} {}", g.out, g.op.name(), g.args.join(" "));
        }
        s
    }
}

pub fn parse_netlist(text: &str) -> Result<Netlist> {
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut output_lines = Vec::new();
    let mut gates = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let mut words = body.split_whitespace();
        let head = words.next().unwrap();
        match head.to_ascii_uppercase().as_str() {
            "INPUT" | "INPUTS" | "OUTPUT" | "OUTPUTS" => {
                let is_in = head.to_ascii_uppercase().starts_with("IN");
                for w in words {
                    if !valid_ident(w) {
                        return Err(err(line, format!("invalid identifier `{w}`")));
                    }
                    if is_in {
                        inputs.push(w.to_string());
                    } else {
                        outputs.push(w.to_string());
                        output_lines.push(line);
                    }
                }
                continue;
            }
            _ => {}
        }
        let (lhs, rhs) = body.split_once('=').ok_or_else(|| err(line, "expected `out = OP args`"))?;
        let out = lhs.trim();
        if !valid_ident(out) {
            return Err(err(line, format!("invalid identifier `{out}`")));
        }
        let mut words = rhs.split_whitespace();
        let opname = words.next().ok_or_else(|| err(line, "missing gate type"))?;
        let op = GateOp::parse(opname).ok_or_else(|| err(line, format!("unknown gate `{opname}`")))?;
        let args: Vec<String> = words.map(ToString::to_string).collect();
        if let Some(bad) = args.iter().find(|a| !valid_ident(a)) {
            return Err(err(line, format!("invalid identifier `{bad}`")));
        }
        if args.len() != op.arity() {
            return Err(err(line, format!("{} takes {} operand(s), got {}", op.name(), op.arity(), args.len())));
        }
        gates.push(Gate { op, out: out.to_string(), args, line });
    }
    if outputs.is_empty() {
        return Err(err(0, "netlist declares no outputs"));
    }
    Netlist::with_lines(inputs, outputs, gates, &output_lines)
}

/// Splits `base[i]` into `("base", Some(i))`; other names map to `(name, None)`.
pub fn split_bus(name: &str) -> (&str, Option<usize>) {
    if let Some(stripped) = name.strip_suffix(']') {
        if let Some((base, idx)) = stripped.split_once('[') {
            if let Ok(i) = idx.parse() {
                return (base, Some(i));
            }
        }
    }
    (name, None)
}

/// Word `chunk` of an exhaustive enumeration for input `i`: bit `j` is bit
/// `i` of assignment `64 * chunk + j`.
pub fn exhaustive_word(i: usize, chunk: usize) -> u64 {
    let mut w = 0u64;
    for j in 0..64 {
        if ((chunk * 64 + j) >> i) & 1 == 1 {
            w |= 1 << j;
        }
    }
    w
}

/// Number of 64-assignment chunks covering all `2^n` assignments.
pub fn exhaustive_chunks(n: usize) -> usize {
    if n >= 6 {
        1 << (n - 6)
    } else {
        1
    }
}

/// Mask of the valid assignments within a chunk.
pub fn exhaustive_mask(n: usize) -> u64 {
    if n >= 6 {
        !0
    } else {
        (1u64 << (1 << n)) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FULL_ADDER: &str = "\
# one-bit full adder
INPUT a b cin
OUTPUT sum cout
t = XOR a b
sum = XOR t cin
u = AND a b
v = AND t cin
cout = OR u v
";

    #[test]
    fn single_gate() {
        let n = parse_netlist("INPUT x y\nOUTPUT z\nz = AND x y\n").unwrap();
        assert_eq!(n.gates().len(), 1);
        assert_eq!(n.eval(&[true, true]), [true]);
        assert_eq!(n.eval(&[true, false]), [false]);
    }

    #[test]
    fn full_adder_expands_to_eleven_gates() {
        let n = parse_netlist(FULL_ADDER).unwrap();
        assert_eq!(n.gates().len(), 5);
        let x = n.expand_xor();
        assert_eq!(x.gates().len(), 11);
        for v in 0..8u32 {
            let ins = [v & 1 == 1, v & 2 == 2, v & 4 == 4];
            let s = v.count_ones();
            assert_eq!(n.eval(&ins), [s % 2 == 1, s >= 2]);
            assert_eq!(x.eval(&ins), n.eval(&ins));
        }
    }

    #[test]
    fn any_gate_order() {
        let n = parse_netlist("OUTPUT z\nz = NOT y\ny = OR a a\nINPUT a\n").unwrap();
        assert_eq!(n.gates()[0].out, "y");
        assert_eq!(n.eval(&[false]), [true]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cyc = parse_netlist("INPUT a\nOUTPUT x\nx = AND a y\ny = NOT x\n").unwrap_err();
        assert!(matches!(cyc, Error::Netlist { line: 3 | 4, .. }), "{cyc:?}");
        let undef = parse_netlist("INPUT a\nOUTPUT x\n\nx = AND a q\n").unwrap_err();
        assert!(matches!(undef, Error::Netlist { line: 4, .. }));
        let arity = parse_netlist("INPUT a b\nOUTPUT x\nx = NOT a b\n").unwrap_err();
        assert!(matches!(arity, Error::Netlist { line: 3, .. }));
        let dup = parse_netlist("INPUT a\nOUTPUT x\nx = NOT a\nx = NOT a\n").unwrap_err();
        assert!(matches!(dup, Error::Netlist { line: 4, .. }));
        let unk = parse_netlist("INPUT a\nOUTPUT x\nx = NAND a a\n").unwrap_err();
        assert!(matches!(unk, Error::Netlist { line: 3, .. }));
        let out = parse_netlist("INPUT a\nOUTPUT x\n").unwrap_err();
        assert!(matches!(out, Error::Netlist { line: 2, .. }));
    }

    #[test]
    fn text_round_trip() {
        let n = parse_netlist(FULL_ADDER).unwrap();
        let again = parse_netlist(&n.to_text()).unwrap();
        assert_eq!(again.to_text(), n.to_text());
        assert_eq!(again.inputs(), n.inputs());
    }

    #[test]
    fn bus_names() {
        assert_eq!(split_bus("a[12]"), ("a", Some(12)));
        assert_eq!(split_bus("a"), ("a", None));
        assert_eq!(split_bus("a[x]"), ("a[x]", None));
    }

    #[test]
    fn exhaustive_words_enumerate() {
        assert_eq!(exhaustive_word(0, 0), 0xAAAA_AAAA_AAAA_AAAA);
        assert_eq!(exhaustive_word(6, 1), !0);
        assert_eq!(exhaustive_mask(3), 0xFF);
        assert_eq!(exhaustive_chunks(10), 16);
    }
}
