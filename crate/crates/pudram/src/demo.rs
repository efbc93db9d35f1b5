// SPDX-License-Identifier: Apache-2.0
//! Canonical primitive demonstrations on a fixed row layout.
//!
//! Every demo runs on a chip of the given geometry with rows filled from a
//! seeded random pattern, executes one primitive and checks the result rows
//! against a host oracle computed beforehand. Inputs live in subarray 0,
//! the partner rows of cross-subarray primitives in subarray 1. The command
//! trace of a demo depends only on the geometry and timing, which is what the
//! golden traces pin down.

use std::fmt::Write;

use pudram_core::primitives::{
    multi_input_op, multi_input_result_rows, multi_row_copy, not_op, trng_sample, NotVariant, OpKind, RefComposition,
    MAX_COPY_DSTS,
};
use pudram_core::reliability::pack_bits;
use pudram_core::{ChipState, CommandTrace, Error, RowAddr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Demo {
    Not,
    Maj3,
    MultiCopy(usize),
    MultiInput(OpKind, usize),
    TrngSample(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoOutcome {
    pub trace: CommandTrace,
    /// `key=value` summary.
    pub report: String,
    /// All result rows match the oracle (always true for TRNG samples).
    pub ok: bool,
}

impl Demo {
    /// CLI name plus the optional `--n` parameter.
    pub fn from_cli(name: &str, n: Option<usize>) -> Result<Self> {
        let bad = |m: String| Error::Validation(m).into();
        let d = match name {
            "not" | "maj3" if n.is_some() => return Err(bad(format!("`{name}` takes no --n"))),
            "not" => Demo::Not,
            "maj3" => Demo::Maj3,
            "multicopy" => Demo::MultiCopy(n.unwrap_or(MAX_COPY_DSTS)),
            "nand16" => Demo::MultiInput(OpKind::Nand, n.unwrap_or(16)),
            "trng-sample" => Demo::TrngSample(n.unwrap_or(4)),
            _ => return Err(bad(format!("unknown primitive `{name}`"))),
        };
        match d {
            Demo::MultiCopy(k) if k == 0 || k > MAX_COPY_DSTS => {
                Err(bad(format!("multicopy takes --n in 1..={MAX_COPY_DSTS}, got {k}")))
            }
            Demo::MultiInput(kind, k) => RefComposition::for_op(kind, k).map(|_| d).map_err(Into::into),
            Demo::TrngSample(k) if !(2..=32).contains(&k) || k % 2 == 1 => {
                Err(bad(format!("trng-sample takes an even --n in 2..=32, got {k}")))
            }
            _ => Ok(d),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Demo::Not => "not".into(),
            Demo::Maj3 => "maj3".into(),
            Demo::MultiCopy(n) => format!("multicopy{n}"),
            Demo::MultiInput(k, n) => format!("{}{n}", format!("{k:?}").to_ascii_lowercase()),
            Demo::TrngSample(n) => format!("trng-sample{n}"),
        }
    }
}

fn random_rows(chip: &mut ChipState, rows: &[RowAddr], rng: &mut ChaCha8Rng) -> Result<Vec<Vec<bool>>> {
    let cols = chip.geometry().columns();
    let mut data = Vec::with_capacity(rows.len());
    for &r in rows {
        let bits: Vec<bool> = (0..cols).map(|_| rng.random()).collect();
        chip.write_row_logical(r, &bits)?;
        data.push(bits);
    }
    Ok(data)
}

/// Runs `demo` on `chip`, which must be idle and have at least two
/// subarrays. `seed` picks the input data.
pub fn run_demo(chip: &mut ChipState, demo: Demo, seed: u64) -> Result<DemoOutcome> {
    let g = chip.geometry().clone();
    let (a, b) = (|l: usize| g.row_addr(0, l), |l: usize| g.row_addr(1, l));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = String::new();
    let _ = writeln!(report, "primitive={}", demo.name());
    chip.clear_log();
    let (trace, ok) = match demo {
        Demo::Not => {
            let src = random_rows(chip, &[a(3)], &mut rng)?.remove(0);
            let trace = not_op(chip, a(3), b(3), NotVariant::Cots)?;
            let want: Vec<bool> = src.iter().map(|x| !x).collect();
            let ok = chip.read_row_bits(b(3))? == want;
            (trace, ok)
        }
        Demo::Maj3 => {
            let rows = [a(0), a(1), a(2)];
            let d = random_rows(chip, &rows, &mut rng)?;
            let want: Vec<bool> =
                (0..g.columns()).map(|c| (d[0][c] as u8 + d[1][c] as u8 + d[2][c] as u8) >= 2).collect();
            let trace = pudram_core::primitives::tra_maj3(chip, rows)?;
            let mut equal = 0;
            for r in rows {
                equal += (chip.read_row_bits(r)? == want) as usize;
            }
            let _ = writeln!(report, "rows_equal={equal}/3");
            (trace, equal == 3)
        }
        Demo::MultiCopy(n) => {
            let dsts: Vec<RowAddr> = (1..=n).map(a).collect();
            let src = random_rows(chip, &[a(0)], &mut rng)?.remove(0);
            let inv: Vec<bool> = src.iter().map(|x| !x).collect();
            for &d in &dsts {
                chip.write_row_logical(d, &inv)?;
            }
            let trace = multi_row_copy(chip, a(0), &dsts)?;
            let mut equal = 0;
            for &d in &dsts {
                equal += (chip.read_row_bits(d)? == src) as usize;
            }
            let intact = chip.read_row_bits(a(0))? == src;
            let _ = writeln!(report, "rows_equal={equal}/{n}");
            let _ = writeln!(report, "source_intact={intact}");
            (trace, equal == n && intact)
        }
        Demo::MultiInput(kind, n) => {
            let inputs: Vec<RowAddr> = (0..n).map(a).collect();
            let refs: Vec<RowAddr> = (0..n).map(b).collect();
            let d = random_rows(chip, &inputs, &mut rng)?;
            let want: Vec<bool> = (0..g.columns()).map(|c| kind.eval(d.iter().map(|r| r[c]))).collect();
            let comp = RefComposition::for_op(kind, n)?;
            pudram_core::primitives::make_reference(chip, &comp, &refs)?;
            let trace = multi_input_op(chip, kind, &inputs, &refs)?;
            let result = multi_input_result_rows(kind, &inputs, &refs);
            let mut equal = 0;
            for &r in result {
                equal += (chip.read_row_bits(r)? == want) as usize;
            }
            let _ = writeln!(report, "rows_equal={equal}/{n}");
            (trace, equal == n)
        }
        Demo::TrngSample(n) => {
            let rows: Vec<RowAddr> = (0..n).map(a).collect();
            let cols = g.columns();
            for (k, &r) in rows.iter().enumerate() {
                chip.write_row_logical(r, &vec![k % 2 == 0; cols])?;
            }
            let s = trng_sample(chip, &rows)?;
            let hex: String = pack_bits(&s.bits).iter().map(|b| format!("{b:02x}")).collect();
            let _ = writeln!(report, "ones={}", s.bits.iter().filter(|&&b| b).count());
            let _ = writeln!(report, "bits_hex={hex}");
            (s.trace, true)
        }
    };
    let c = trace.counters();
    let _ = writeln!(report, "match={ok}");
    let _ = writeln!(report, "activations={}", c.acts);
    let _ = writeln!(report, "commands={}", trace.len());
    let _ = writeln!(report, "simulated_ns={}", c.simulated_ns);
    Ok(DemoOutcome { trace, report, ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pudram_core::{ChipGeometry, DataPattern, NoiseModel};

    fn chip() -> ChipState {
        ChipState::new(ChipGeometry::default(), NoiseModel::noiseless(0), DataPattern::AllZeros).unwrap()
    }

    #[test]
    fn noiseless_demos_match() {
        for d in [
            Demo::Not,
            Demo::Maj3,
            Demo::MultiCopy(31),
            Demo::MultiCopy(1),
            Demo::MultiInput(OpKind::Nand, 16),
            Demo::MultiInput(OpKind::Or, 2),
            Demo::MultiInput(OpKind::And, 16),
        ] {
            let out = run_demo(&mut chip(), d, 5).unwrap();
            assert!(out.ok, "{d:?}\n{}", out.report);
        }
        let out = run_demo(&mut chip(), Demo::MultiCopy(31), 5).unwrap();
        assert!(out.report.contains("rows_equal=31/31\n"));
    }

    #[test]
    fn trng_sample_needs_noise() {
        assert!(matches!(run_demo(&mut chip(), Demo::TrngSample(4), 1), Err(crate::Error::Core(Error::Tie { .. }))));
        let mut c =
            ChipState::new(ChipGeometry::default(), NoiseModel::gaussian(0.05, 1), DataPattern::AllZeros).unwrap();
        assert!(run_demo(&mut c, Demo::TrngSample(4), 1).unwrap().report.contains("bits_hex="));
    }

    #[test]
    fn cli_names_and_params() {
        assert_eq!(Demo::from_cli("multicopy", Some(7)).unwrap(), Demo::MultiCopy(7));
        assert_eq!(Demo::from_cli("nand16", None).unwrap(), Demo::MultiInput(OpKind::Nand, 16));
        for (name, n) in
            [("multicopy", Some(32)), ("multicopy", Some(0)), ("nand16", Some(3)), ("not", Some(2)), ("xor", None)]
        {
            assert!(Demo::from_cli(name, n).is_err(), "{name} {n:?}");
        }
    }
}
