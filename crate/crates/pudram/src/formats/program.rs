// SPDX-License-Identifier: Apache-2.0
//! bbop program text.
//!
//! One statement per line, `key=value` fields in any order, `#` comments:
//!
//! ```text
//! load r=0 w=8 v=3,250,17      # host write, lane i = column i, other lanes 0
//! load r=8 w=8 fill=5          # same value in every lane
//! bbop_add dst=16 s1=0 s2=8 mats=0:3 w=8 n=64
//! reduce a=0 b=8 out=24 scratch=40 mats=0:1 w=8 n=10
//! print r=16 w=8 n=16          # lanes 0..n of an operand
//! ```
//!
//! Any statement whose name starts with `bbop_` is an instruction. Source
//! slots are numbered `s1`, `s2`, ... without gaps. `mats=b:e` is an inclusive
//! mat range.

use std::fmt::Write;

use pudram_core::control::{BbopInstruction, ReduceSpec};
use pudram_core::RowAddr;

use crate::error::{Error, Result};

const WHAT: &str = "program";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadValues {
    Fill(u64),
    Lanes(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Load { row: RowAddr, width: usize, values: LoadValues },
    Bbop(BbopInstruction),
    Reduce(ReduceSpec),
    Print { row: RowAddr, width: usize, n: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    /// Statements with their 1-based source lines.
    pub statements: Vec<(usize, Statement)>,
}

struct Fields<'a> {
    kv: Vec<(&'a str, &'a str)>,
    used: Vec<bool>,
}

impl<'a> Fields<'a> {
    fn new(words: impl Iterator<Item = &'a str>) -> Result<Self, String> {
        let mut kv: Vec<(&str, &str)> = Vec::new();
        for w in words {
            let (k, v) = w.split_once('=').ok_or_else(|| format!("expected key=value, got `{w}`"))?;
            if kv.iter().any(|(x, _)| *x == k) {
                return Err(format!("`{k}` given twice"));
            }
            kv.push((k, v));
        }
        let used = vec![false; kv.len()];
        Ok(Fields { kv, used })
    }

    fn opt(&mut self, k: &str) -> Option<&'a str> {
        let i = self.kv.iter().position(|(x, _)| *x == k)?;
        self.used[i] = true;
        Some(self.kv[i].1)
    }

    fn get(&mut self, k: &str) -> Result<&'a str, String> {
        self.opt(k).ok_or_else(|| format!("missing `{k}=`"))
    }

    fn num<T: std::str::FromStr>(&mut self, k: &str) -> Result<T, String> {
        let v = self.get(k)?;
        v.parse().map_err(|_| format!("bad {k} `{v}`"))
    }

    fn row(&mut self, k: &str) -> Result<RowAddr, String> {
        self.num::<u32>(k).map(RowAddr)
    }

    fn mats(&mut self) -> Result<(usize, usize), String> {
        let v = self.get("mats")?;
        let bad = || format!("bad mat range `{v}`, expected b:e");
        let (b, e) = v.split_once(':').ok_or_else(bad)?;
        Ok((b.parse().map_err(|_| bad())?, e.parse().map_err(|_| bad())?))
    }

    fn finish(&self) -> Result<(), String> {
        match self.kv.iter().zip(&self.used).find(|(_, u)| !**u) {
            Some(((k, _), _)) => Err(format!("unexpected field `{k}`")),
            None => Ok(()),
        }
    }
}

fn check_value(v: u64, width: usize) -> Result<u64, String> {
    if width < 64 && v >> width != 0 {
        return Err(format!("value {v} does not fit {width} bits"));
    }
    Ok(v)
}

fn parse_statement(body: &str) -> Result<Statement, String> {
    let mut words = body.split_whitespace();
    let head = words.next().unwrap_or_default();
    let mut f = Fields::new(words)?;
    let st = match head {
        "load" => {
            let row = f.row("r")?;
            let width: usize = f.num("w")?;
            if width == 0 || width > 64 {
                return Err(format!("width {width} outside 1..=64"));
            }
            let values = match (f.opt("v"), f.opt("fill")) {
                (Some(list), None) => LoadValues::Lanes(
                    list.split(',')
                        .map(|x| {
                            x.parse::<u64>().map_err(|_| format!("bad value `{x}`")).and_then(|v| check_value(v, width))
                        })
                        .collect::<Result<_, _>>()?,
                ),
                (None, Some(x)) => {
                    LoadValues::Fill(check_value(x.parse().map_err(|_| format!("bad value `{x}`"))?, width)?)
                }
                _ => return Err("load takes exactly one of `v=` and `fill=`".into()),
            };
            Statement::Load { row, width, values }
        }
        "print" => Statement::Print { row: f.row("r")?, width: f.num("w")?, n: f.num("n")? },
        "reduce" => {
            let (mat_begin, mat_end) = f.mats()?;
            Statement::Reduce(ReduceSpec {
                a: f.row("a")?,
                b: f.row("b")?,
                out: f.row("out")?,
                scratch: f.row("scratch")?,
                width: f.num("w")?,
                mat_begin,
                mat_end,
                n: f.num("n")?,
            })
        }
        op if op.starts_with("bbop_") && op.len() > 5 => {
            let mut srcs = Vec::new();
            while let Some(v) = f.opt(&format!("s{}", srcs.len() + 1)) {
                srcs.push(RowAddr(v.parse().map_err(|_| format!("bad row `{v}`"))?));
            }
            let (mat_begin, mat_end) = f.mats()?;
            Statement::Bbop(BbopInstruction {
                opcode: op.to_string(),
                dst: f.row("dst")?,
                srcs,
                mat_begin,
                mat_end,
                width: f.num("w")?,
                vector_len: f.num("n")?,
            })
        }
        other => return Err(format!("unknown statement `{other}`")),
    };
    f.finish()?;
    Ok(st)
}

pub fn parse_program(text: &str) -> Result<Program> {
    let mut p = Program::default();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if !body.is_empty() {
            let st = parse_statement(body).map_err(|m| Error::parse(WHAT, i + 1, m))?;
            p.statements.push((i + 1, st));
        }
    }
    Ok(p)
}

pub fn format_statement(st: &Statement) -> String {
    let mut s = String::new();
    let _ = match st {
        Statement::Load { row, width, values: LoadValues::Fill(v) } => write!(s, "load r={row} w={width} fill={v}"),
        Statement::Load { row, width, values: LoadValues::Lanes(v) } => {
            let list: Vec<String> = v.iter().map(u64::to_string).collect();
            write!(s, "load r={row} w={width} v={}", list.join(","))
        }
        Statement::Print { row, width, n } => write!(s, "print r={row} w={width} n={n}"),
        Statement::Reduce(r) => write!(
            s,
            "reduce a={} b={} out={} scratch={} mats={}:{} w={} n={}",
            r.a, r.b, r.out, r.scratch, r.mat_begin, r.mat_end, r.width, r.n
        ),
        Statement::Bbop(b) => {
            let _ = write!(s, "{} dst={}", b.opcode, b.dst);
            for (i, r) in b.srcs.iter().enumerate() {
                let _ = write!(s, " s{}={r}", i + 1);
            }
            write!(s, " mats={}:{} w={} n={}", b.mat_begin, b.mat_end, b.width, b.vector_len)
        }
    };
    s
}

pub fn format_program(p: &Program) -> String {
    p.statements.iter().map(|(_, st)| format_statement(st) + "\n").collect()
}
