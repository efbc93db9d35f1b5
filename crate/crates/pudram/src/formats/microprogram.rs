// SPDX-License-Identifier: Apache-2.0
//! Micro-program text, version 1.
//!
//! ```text
//! pudram-microprogram 1
//! opcode bbop_add
//! input a 8
//! input b 8
//! output s 8
//! region b_rows=6 dcc_rows=2 temps=0
//! activations 161
//! SET C0 0
//! COPY in0.0 B0
//! NOT B0 DCC0
//! TRA B0 B1 DCC0
//! ```
//!
//! Header lines come first, in this order; `input`/`output` repeat once per
//! operand slot. The op lines use the row-operand names `in<slot>.<bit>`,
//! `out<slot>.<bit>`, `B<i>`, `C0`, `C1`, `DCC<i>` and `T<i>`. A parsed
//! program is validated, including the declared activation count.

use std::fmt::Write;

use pudram_core::mig::{MicroOp, MicroProgram, RowRef, Slot};

use crate::error::{Error, Result};

pub const MAGIC: &str = "pudram-microprogram";
pub const VERSION: u32 = 1;
const WHAT: &str = "micro-program";

pub fn format_microprogram(p: &MicroProgram) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {VERSION}");
    let _ = writeln!(s, "opcode {}", p.opcode);
    for x in &p.inputs {
        let _ = writeln!(s, "input {} {}", x.name, x.width);
    }
    for x in &p.outputs {
        let _ = writeln!(s, "output {} {}", x.name, x.width);
    }
    let _ = writeln!(s, "region b_rows={} dcc_rows={} temps={}", p.b_rows, p.dcc_rows, p.temps);
    let _ = writeln!(s, "activations {}", p.declared_activations);
    for op in &p.ops {
        let _ = match op {
            MicroOp::Copy { src, dst } => writeln!(s, "COPY {src} {dst}"),
            MicroOp::Not { src, dst } => writeln!(s, "NOT {src} {dst}"),
            MicroOp::Tra([a, b, c]) => writeln!(s, "TRA {a} {b} {c}"),
            MicroOp::Set { row, value } => writeln!(s, "SET {row} {}", *value as u8),
        };
    }
    s
}

pub fn parse_microprogram(text: &str) -> Result<MicroProgram> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();
    let err = |line: usize, m: String| Error::parse(WHAT, line, m);

    let (n, head) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    match head.split_whitespace().collect::<Vec<_>>()[..] {
        [MAGIC, v] if v == VERSION.to_string() => {}
        [MAGIC, v] => return Err(err(n, format!("unsupported version {v}"))),
        _ => return Err(err(n, format!("expected `{MAGIC} {VERSION}`"))),
    }
    let (n, w) = take(&mut lines, "opcode")?;
    let opcode = match &w[..] {
        [o] => o.to_string(),
        _ => return Err(err(n, "opcode takes one name".into())),
    };

    let mut prog = MicroProgram::new(opcode, Vec::new(), Vec::new(), 0, 0, 0, Vec::new());
    let num = |n: usize, v: &str| v.parse::<usize>().map_err(|_| err(n, format!("bad number `{v}`")));
    while let Some(&(n, l)) = lines.peek() {
        let w: Vec<&str> = l.split_whitespace().collect();
        let dst = match w[0] {
            "input" => &mut prog.inputs,
            "output" => &mut prog.outputs,
            _ => break,
        };
        if w.len() != 3 {
            return Err(err(n, format!("`{}` takes a name and a width", w[0])));
        }
        dst.push(Slot { name: w[1].to_string(), width: num(n, w[2])? });
        lines.next();
    }
    let (n, w) = take(&mut lines, "region")?;
    let mut seen = [None; 3];
    for kv in &w {
        let (k, v) = kv.split_once('=').ok_or_else(|| err(n, format!("expected key=value, got `{kv}`")))?;
        let i = ["b_rows", "dcc_rows", "temps"]
            .iter()
            .position(|x| *x == k)
            .ok_or_else(|| err(n, format!("unknown region key `{k}`")))?;
        if seen[i].replace(num(n, v)?).is_some() {
            return Err(err(n, format!("`{k}` given twice")));
        }
    }
    let [Some(b), Some(d), Some(t)] = seen else {
        return Err(err(n, "region needs b_rows, dcc_rows and temps".into()));
    };
    (prog.b_rows, prog.dcc_rows, prog.temps) = (b, d, t);
    let (n, w) = take(&mut lines, "activations")?;
    prog.declared_activations = match &w[..] {
        [v] => num(n, v)?,
        _ => return Err(err(n, "activations takes one count".into())),
    };

    for (n, l) in lines {
        let w: Vec<&str> = l.split_whitespace().collect();
        let r = |i: usize| -> Result<RowRef> { w[i].parse::<RowRef>().map_err(|e| err(n, e.to_string())) };
        let arity = |k: usize| {
            if w.len() == k + 1 {
                Ok(())
            } else {
                Err(err(n, format!("{} takes {k} operands", w[0])))
            }
        };
        prog.ops.push(match w[0] {
            "COPY" => {
                arity(2)?;
                MicroOp::Copy { src: r(1)?, dst: r(2)? }
            }
            "NOT" => {
                arity(2)?;
                MicroOp::Not { src: r(1)?, dst: r(2)? }
            }
            "TRA" => {
                arity(3)?;
                MicroOp::Tra([r(1)?, r(2)?, r(3)?])
            }
            "SET" => {
                arity(2)?;
                let value = match w[2] {
                    "0" => false,
                    "1" => true,
                    v => return Err(err(n, format!("SET value must be 0 or 1, got `{v}`"))),
                };
                MicroOp::Set { row: r(1)?, value }
            }
            op => return Err(err(n, format!("unknown op `{op}`"))),
        });
    }
    prog.validate()?;
    Ok(prog)
}

/// Next line, which must start with `key`; returns the remaining words.
fn take<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, Vec<&'a str>)> {
    match lines.next() {
        Some((n, l)) => {
            let mut w = l.split_whitespace();
            if w.next() != Some(key) {
                return Err(Error::parse(WHAT, n, format!("expected `{key}`")));
            }
            Ok((n, w.collect()))
        }
        None => Err(Error::parse(WHAT, 0, format!("missing `{key}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pudram_core::mig::{compile_bitserial, BitserialOp, CompileOptions};

    #[test]
    fn compiled_programs_round_trip() {
        for op in BitserialOp::ALL {
            let (p, _) = compile_bitserial(op, 4, &CompileOptions::default()).unwrap();
            let text = format_microprogram(&p);
            let back = parse_microprogram(&text).unwrap();
            assert_eq!(back, p);
            assert_eq!(format_microprogram(&back), text);
        }
    }

    #[test]
    fn rejects_bad_files() {
        let (p, _) = compile_bitserial(BitserialOp::And, 1, &CompileOptions::default()).unwrap();
        let good = format_microprogram(&p);
        let cases = [
            good.replace("pudram-microprogram 1", "pudram-microprogram 2"),
            good.replace("activations", "acts"),
            good.replacen("TRA", "TRX", 1),
            good.replace(&format!("activations {}", p.declared_activations), "activations 1"),
            good.replace("temps=", "spare="),
        ];
        for c in cases {
            assert!(parse_microprogram(&c).is_err(), "{c}");
        }
        match parse_microprogram(&good.replacen("TRA", "TRX", 1)) {
            Err(Error::Parse { line, .. }) => assert!(line > 6),
            other => panic!("{other:?}"),
        }
    }
}
