// SPDX-License-Identifier: Apache-2.0
//! Chip-state dump: a geometry header, then one line per flat row holding the
//! cell voltages of every column with four decimals.
//!
//! ```text
//! pudram-dump 1
//! geometry banks=1 subarrays_per_bank=2 mats_per_subarray=4 rows_per_subarray=128 columns_per_mat=16 hff_width_bits=4 dcc_rows=2
//! row 0 1.0000 0.0000 0.5000 ...
//! ```

use std::fmt::Write;

use pudram_core::{ChipGeometry, ChipState, RowAddr};

use crate::error::{Error, Result};

pub const MAGIC: &str = "pudram-dump 1";
const WHAT: &str = "dump";
const KEYS: [&str; 7] = [
    "banks",
    "subarrays_per_bank",
    "mats_per_subarray",
    "rows_per_subarray",
    "columns_per_mat",
    "hff_width_bits",
    "dcc_rows",
];

fn geometry_fields(g: &ChipGeometry) -> [usize; 7] {
    [
        g.banks,
        g.subarrays_per_bank,
        g.mats_per_subarray,
        g.rows_per_subarray,
        g.columns_per_mat,
        g.hff_width_bits,
        g.dcc_rows,
    ]
}

pub fn format_dump(chip: &ChipState) -> String {
    let g = chip.geometry();
    let mut s = String::with_capacity(g.total_rows() * (g.columns() * 7 + 10));
    let _ = writeln!(s, "{MAGIC}");
    s.push_str("geometry");
    for (k, v) in KEYS.iter().zip(geometry_fields(g)) {
        let _ = write!(s, " {k}={v}");
    }
    s.push('\n');
    for r in 0..g.total_rows() {
        let _ = write!(s, "row {r}");
        for v in chip.row_voltages(RowAddr(r as u32)) {
            let _ = write!(s, " {v:.4}");
        }
        s.push('\n');
    }
    s
}

/// Reads a dump back into its geometry and per-row voltages.
pub fn parse_dump(text: &str) -> Result<(ChipGeometry, Vec<Vec<f64>>)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let err = |n: usize, m: String| Error::parse(WHAT, n, m);
    match lines.next() {
        Some((_, MAGIC)) => {}
        _ => return Err(err(1, format!("expected `{MAGIC}`"))),
    }
    let (n, head) = lines.next().ok_or_else(|| err(2, "missing geometry".into()))?;
    let mut words = head.split_whitespace();
    if words.next() != Some("geometry") {
        return Err(err(n, "expected `geometry`".into()));
    }
    let mut vals = [0usize; 7];
    let kv: Vec<&str> = words.collect();
    if kv.len() != KEYS.len() {
        return Err(err(n, format!("geometry needs {} fields", KEYS.len())));
    }
    for (i, w) in kv.iter().enumerate() {
        match w.split_once('=') {
            Some((k, v)) if k == KEYS[i] => {
                vals[i] = v.parse().map_err(|_| err(n, format!("bad {k} `{v}`")))?;
            }
            _ => return Err(err(n, format!("expected `{}=`", KEYS[i]))),
        }
    }
    let [banks, subarrays_per_bank, mats_per_subarray, rows_per_subarray, columns_per_mat, hff_width_bits, dcc_rows] =
        vals;
    let g = ChipGeometry {
        banks,
        subarrays_per_bank,
        mats_per_subarray,
        rows_per_subarray,
        columns_per_mat,
        hff_width_bits,
        dcc_rows,
    };
    g.validate()?;
    let mut rows = Vec::with_capacity(g.total_rows());
    for (n, l) in lines {
        let mut w = l.split_whitespace();
        if w.next() != Some("row") || w.next() != Some(rows.len().to_string().as_str()) {
            return Err(err(n, format!("expected `row {}`", rows.len())));
        }
        let v: Vec<f64> =
            w.map(|x| x.parse().map_err(|_| err(n, format!("bad voltage `{x}`")))).collect::<Result<_>>()?;
        if v.len() != g.columns() {
            return Err(err(n, format!("{} voltages, expected {}", v.len(), g.columns())));
        }
        rows.push(v);
    }
    if rows.len() != g.total_rows() {
        return Err(err(0, format!("{} rows, expected {}", rows.len(), g.total_rows())));
    }
    Ok((g, rows))
}
