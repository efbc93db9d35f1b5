// SPDX-License-Identifier: Apache-2.0
//! Command-trace text.
//!
//! One command per line, `#` starts a comment:
//!
//! ```text
//! ACT r=3,5,~126 d=35
//! PRE d=1.5
//! PRE s=1100 d=15
//! RD r=3 c=4 d=15
//! WR r=3 c=4 v=0xa d=15
//! NOP d=15
//! ```
//!
//! `~` marks the negation wordline of a dual-contact row. The sector bits of
//! a PRE are written mat 0 first, one character per mat of the trace; a PRE
//! without `s=` selects every mat. Delays are nanoseconds in the shortest
//! form that reads back to the same `f64`, so printing and parsing round-trip
//! exactly.

use std::fmt::Write;

use pudram_core::command::Wordline;
use pudram_core::geometry::MatMask;
use pudram_core::{Command, CommandKind, CommandTrace, RowAddr};

use crate::error::{Error, Result};

const WHAT: &str = "trace";

pub fn format_command(cmd: &Command, mats: usize) -> String {
    let mut s = String::new();
    match &cmd.kind {
        CommandKind::Act(wls) => {
            s.push_str("ACT r=");
            for (i, w) in wls.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                if w.negated {
                    s.push('~');
                }
                let _ = write!(s, "{}", w.row);
            }
        }
        CommandKind::Pre(None) => s.push_str("PRE"),
        CommandKind::Pre(Some(m)) => {
            s.push_str("PRE s=");
            s.extend((0..mats).map(|i| if m.contains(i) { '1' } else { '0' }));
        }
        CommandKind::Rd { row, column } => {
            let _ = write!(s, "RD r={row} c={column}");
        }
        CommandKind::Wr { row, column, value } => {
            let _ = write!(s, "WR r={row} c={column} v={value:#x}");
        }
        CommandKind::Nop => s.push_str("NOP"),
    }
    let _ = write!(s, " d={}", cmd.delay_after_ns);
    s
}

pub fn format_trace(trace: &CommandTrace) -> String {
    let mut s = String::new();
    for c in trace.commands() {
        s.push_str(&format_command(c, trace.mats()));
        s.push('\n');
    }
    s
}

/// Parses a trace for a chip with `mats` mats per subarray.
pub fn parse_trace(text: &str, mats: usize) -> Result<CommandTrace> {
    let mut trace = CommandTrace::new(mats);
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if !body.is_empty() {
            trace.push(parse_line(body, mats).map_err(|m| Error::parse(WHAT, i + 1, m))?);
        }
    }
    Ok(trace)
}

fn parse_line(body: &str, mats: usize) -> Result<Command, String> {
    let mut words = body.split_whitespace();
    let op = words.next().unwrap_or_default();
    let mut fields: Vec<(&str, &str)> = Vec::new();
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| format!("expected key=value, got `{w}`"))?;
        if fields.iter().any(|(x, _)| *x == k) {
            return Err(format!("`{k}` given twice"));
        }
        fields.push((k, v));
    }
    let allowed: &[&str] = match op {
        "ACT" => &["r", "d"],
        "PRE" => &["s", "d"],
        "RD" => &["r", "c", "d"],
        "WR" => &["r", "c", "v", "d"],
        "NOP" => &["d"],
        _ => return Err(format!("unknown command `{op}`")),
    };
    if let Some((k, _)) = fields.iter().find(|(k, _)| !allowed.contains(k)) {
        return Err(format!("{op} takes no `{k}`"));
    }
    let get = |k: &str| fields.iter().find(|(x, _)| *x == k).map(|(_, v)| *v);
    let need = |k: &str| get(k).ok_or_else(|| format!("{op} needs `{k}=`"));
    let d: f64 = need("d")?.parse().map_err(|_| format!("bad delay `{}`", get("d").unwrap_or_default()))?;
    if !d.is_finite() || d < 0.0 {
        return Err(format!("delay {d} must be finite and non-negative"));
    }
    let row = |v: &str| v.parse::<u32>().map(RowAddr).map_err(|_| format!("bad row `{v}`"));
    let col = |v: &str| v.parse::<usize>().map_err(|_| format!("bad column `{v}`"));
    Ok(match op {
        "ACT" => {
            let mut wls = Vec::new();
            for r in need("r")?.split(',') {
                wls.push(match r.strip_prefix('~') {
                    Some(n) => Wordline::negation(row(n)?),
                    None => Wordline::data(row(r)?),
                });
            }
            Command::act_wordlines(wls, d)
        }
        "PRE" => {
            let mask = match get("s") {
                None => None,
                Some(bits) => {
                    if bits.len() != mats || mats > 64 {
                        return Err(format!("sector bits `{bits}` must have one digit per mat ({mats})"));
                    }
                    let mut m = 0u64;
                    for (i, ch) in bits.chars().enumerate() {
                        match ch {
                            '1' => m |= 1 << i,
                            '0' => {}
                            _ => return Err(format!("bad sector bit `{ch}`")),
                        }
                    }
                    Some(MatMask(m))
                }
            };
            Command::pre_sectors(mask, d)
        }
        "RD" => Command::rd(row(need("r")?)?, col(need("c")?)?, d),
        "WR" => {
            let v = need("v")?;
            let value = match v.strip_prefix("0x") {
                Some(h) => u64::from_str_radix(h, 16),
                None => v.parse(),
            }
            .map_err(|_| format!("bad value `{v}`"))?;
            Command::wr(row(need("r")?)?, col(need("c")?)?, value, d)
        }
        _ => Command::nop(d),
    })
}
