// SPDX-License-Identifier: Apache-2.0
//! True random numbers from balanced multi-row activations.
//!
//! `n_rows` rows of one subarray are set to alternating all-ones/all-zeros
//! rows by RowClone from two constant rows, so every bitline shares to
//! exactly VDD/2 and the sense amplifier resolves noise. Profiling keeps
//! the bitlines whose ones fraction over the probe samples lies in the band;
//! only those are harvested.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use super::stats::{stat_tests, StreamStats};
use crate::chip::ChipState;
use crate::error::{Error, Result};
use crate::geometry::RowAddr;
use crate::primitives::{row_clone, trng_sample};

pub const MAX_TRNG_ROWS: usize = 32;
const ROW_COUNTS: [usize; 5] = [2, 4, 8, 16, 32];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrngConfig {
    /// Rows activated together; one of 2, 4, 8, 16, 32.
    pub n_rows: usize,
    /// Raw bits to harvest.
    pub nbits: usize,
    pub probes: usize,
    /// Inclusive ones-fraction band a bitline must fall in during profiling.
    pub band: (f64, f64),
    /// Also produce the hash-conditioned stream.
    pub condition: bool,
    pub subarray: usize,
}

impl Default for TrngConfig {
    fn default() -> Self {
        TrngConfig { n_rows: 4, nbits: 1 << 16, probes: 1000, band: (0.4, 0.6), condition: true, subarray: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrngReport {
    pub n_rows: usize,
    pub entropy_cells: usize,
    /// Sampling activations used while harvesting.
    pub samples: usize,
    pub bits_per_apa: usize,
    pub raw: StreamStats,
    pub conditioned: Option<StreamStats>,
    /// Harvest time: re-initialization plus sampling, profiling excluded.
    pub simulated_ns: f64,
    pub profiling_ns: f64,
    /// Raw bits per simulated second of harvest time.
    pub throughput_bits_per_sim_second: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrngRun {
    pub report: TrngReport,
    pub entropy_columns: Vec<usize>,
    pub raw: Vec<bool>,
    pub conditioned: Option<Vec<bool>>,
}

/// Packs bits into bytes, first bit in the least significant position.
pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8).map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (b as u8) << i)).collect()
}

/// SHA-256 over each complete 512-bit block, 256 output bits per block.
pub fn condition(bits: &[bool]) -> Vec<bool> {
    let mut out = Vec::with_capacity(bits.len() / 2);
    for block in bits.chunks_exact(512) {
        let digest = Sha256::digest(pack_bits(block));
        out.extend(digest.iter().flat_map(|&byte| (0..8).map(move |i| byte >> i & 1 == 1)));
    }
    out
}

struct Sampler {
    rows: Vec<RowAddr>,
    ones: RowAddr,
    zeros: RowAddr,
}

impl Sampler {
    /// Returns the sensed row and the simulated time spent.
    fn sample(&self, chip: &mut ChipState) -> Result<(Vec<bool>, f64)> {
        chip.clear_log();
        let mut ns = 0.0;
        for (k, &r) in self.rows.iter().enumerate() {
            let src = if k % 2 == 0 { self.ones } else { self.zeros };
            ns += row_clone(chip, src, r)?.counters().simulated_ns;
        }
        let s = trng_sample(chip, &self.rows)?;
        ns += s.trace.counters().simulated_ns;
        Ok((s.bits, ns))
    }
}

/// Profiles the bitlines, then harvests `cfg.nbits` raw bits. Rows
/// `0..n_rows + 2` of the subarray are overwritten and the chip's command
/// log is not kept.
pub fn trng_run(chip: &mut ChipState, cfg: &TrngConfig) -> Result<TrngRun> {
    let g = chip.geometry().clone();
    if !ROW_COUNTS.contains(&cfg.n_rows) {
        return Err(Error::Validation(format!("TRNG row count {} is not one of {ROW_COUNTS:?}", cfg.n_rows)));
    }
    if cfg.nbits == 0 || cfg.probes == 0 {
        return Err(Error::Validation("TRNG needs at least one bit and one probe".into()));
    }
    if !(0.0 <= cfg.band.0 && cfg.band.0 <= cfg.band.1 && cfg.band.1 <= 1.0) {
        return Err(Error::Validation(format!("bad profiling band {:?}", cfg.band)));
    }
    if cfg.subarray >= g.total_subarrays() || cfg.n_rows + 2 > g.rows_per_subarray - g.dcc_rows {
        return Err(Error::Validation(format!("subarray {} cannot hold {} TRNG rows", cfg.subarray, cfg.n_rows + 2)));
    }
    let cols = g.columns();
    let at = |l: usize| g.row_addr(cfg.subarray, l);
    let sampler = Sampler { rows: (0..cfg.n_rows).map(at).collect(), ones: at(cfg.n_rows), zeros: at(cfg.n_rows + 1) };
    chip.write_row_logical(sampler.ones, &vec![true; cols])?;
    chip.write_row_logical(sampler.zeros, &vec![false; cols])?;

    let mut ones = vec![0usize; cols];
    let mut profiling_ns = 0.0;
    for _ in 0..cfg.probes {
        let (bits, ns) = sampler.sample(chip)?;
        profiling_ns += ns;
        for (c, b) in bits.into_iter().enumerate() {
            ones[c] += b as usize;
        }
    }
    let entropy_columns: Vec<usize> = (0..cols)
        .filter(|&c| {
            let f = ones[c] as f64 / cfg.probes as f64;
            cfg.band.0 <= f && f <= cfg.band.1
        })
        .collect();
    if entropy_columns.is_empty() {
        return Err(Error::Trng(format!(
            "no bitline kept a ones fraction within {:?} over {} probes",
            cfg.band, cfg.probes
        )));
    }

    let mut raw = Vec::with_capacity(cfg.nbits);
    let (mut samples, mut ns) = (0, 0.0);
    while raw.len() < cfg.nbits {
        let (bits, t) = sampler.sample(chip)?;
        samples += 1;
        ns += t;
        raw.extend(entropy_columns.iter().map(|&c| bits[c]).take(cfg.nbits - raw.len()));
    }
    chip.clear_log();
    let conditioned = cfg.condition.then(|| condition(&raw));
    let report = TrngReport {
        n_rows: cfg.n_rows,
        entropy_cells: entropy_columns.len(),
        samples,
        bits_per_apa: entropy_columns.len(),
        raw: stat_tests(&raw),
        conditioned: conditioned.as_deref().map(stat_tests),
        simulated_ns: ns,
        profiling_ns,
        throughput_bits_per_sim_second: raw.len() as f64 / (ns * 1e-9),
    };
    Ok(TrngRun { report, entropy_columns, raw, conditioned })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chip::DataPattern;
    use crate::geometry::ChipGeometry;
    use crate::noise::NoiseModel;

    fn chip(noise: NoiseModel) -> ChipState {
        ChipState::new(ChipGeometry::new(1, 2, 4, 64, 16), noise, DataPattern::AllZeros).unwrap()
    }

    #[test]
    fn packing_is_lsb_first() {
        assert_eq!(pack_bits(&[true, false, false, false, false, false, false, false, true]), [1, 1]);
        assert_eq!(pack_bits(&[false, true, true]), [6]);
    }

    #[test]
    fn conditioning_halves_whole_blocks() {
        let bits = vec![true; 1100];
        let out = condition(&bits);
        assert_eq!(out.len(), 512);
        let d = Sha256::digest([0xFFu8; 64]);
        assert_eq!(pack_bits(&out[..256]), d.as_slice());
    }

    #[test]
    fn zero_noise_ties() {
        let mut c = chip(NoiseModel::noiseless(1));
        let r = trng_run(&mut c, &TrngConfig { probes: 5, nbits: 10, ..Default::default() });
        assert!(matches!(r, Err(Error::Tie { .. })), "{r:?}");
    }

    #[test]
    fn profiling_drops_a_biased_bitline() {
        let mut c = chip(NoiseModel::gaussian(0.05, 3));
        c.set_bitline_offset(5, 0.25);
        let run = trng_run(&mut c, &TrngConfig { nbits: 4096, ..Default::default() }).unwrap();
        assert!(!run.entropy_columns.contains(&5));
        assert_eq!(run.report.entropy_cells, 63);
        assert_eq!(run.raw.len(), 4096);
        assert_eq!(run.conditioned.as_ref().unwrap().len(), 2048);
        let r = &run.report;
        let want = r.raw.bits as f64 / (r.simulated_ns * 1e-9);
        assert!((r.throughput_bits_per_sim_second - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn all_biased_is_a_trng_error() {
        let mut c = chip(NoiseModel::gaussian(0.01, 3));
        for col in 0..64 {
            c.set_bitline_offset(col, if col % 2 == 0 { 0.3 } else { -0.3 });
        }
        let r = trng_run(&mut c, &TrngConfig { probes: 50, nbits: 10, ..Default::default() });
        assert!(matches!(r, Err(Error::Trng(_))));
    }

    #[test]
    fn rejects_bad_row_counts() {
        let mut c = chip(NoiseModel::gaussian(0.05, 3));
        assert!(trng_run(&mut c, &TrngConfig { n_rows: 3, ..Default::default() }).is_err());
        assert!(trng_run(&mut c, &TrngConfig { nbits: 0, ..Default::default() }).is_err());
    }
}
