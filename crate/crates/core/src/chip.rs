// SPDX-License-Identifier: Apache-2.0
//! Electrical and logical state of one simulated DRAM chip.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::command::{CommandTrace, TimingParams};
use crate::engine::DecoderMode;
use crate::error::{Error, Result};
use crate::geometry::{ChipGeometry, MatMask, RowAddr};
use crate::noise::NoiseModel;

/// Precharge level of a bitline, VDD/2.
pub const PRECHARGE: f64 = 0.5;

/// Initial cell contents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataPattern {
    AllZeros,
    AllOnes,
    /// Cell `(r, c)` holds `(r + c) mod 2`, with `r` and `c` local to the subarray.
    Checkerboard,
    Random {
        seed: u64,
    },
}

/// Result of thresholding one cell voltage against VDD/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogicLevel {
    Low,
    High,
    /// The cell holds exactly VDD/2.
    Indeterminate,
}

impl LogicLevel {
    pub fn from_voltage(v: f64) -> Self {
        if v > PRECHARGE {
            LogicLevel::High
        } else if v < PRECHARGE {
            LogicLevel::Low
        } else {
            LogicLevel::Indeterminate
        }
    }

    pub fn bit(self) -> Option<bool> {
        match self {
            LogicLevel::Low => Some(false),
            LogicLevel::High => Some(true),
            LogicLevel::Indeterminate => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubarrayState {
    /// Row-major cell voltages, `rows_per_subarray x columns`.
    pub cells: Vec<f64>,
    /// Local indices of the rows whose wordlines are raised.
    pub row_active: Vec<usize>,
    /// Mats connected for the in-flight activation (mat isolation).
    pub mat_active: MatMask,
    pub bitline_v: Vec<f64>,
    pub precharged: Vec<bool>,
}

impl SubarrayState {
    fn new(rows: usize, columns: usize) -> Self {
        SubarrayState {
            cells: vec![0.0; rows * columns],
            row_active: Vec::new(),
            mat_active: MatMask::default(),
            bitline_v: vec![PRECHARGE; columns],
            precharged: vec![true; columns],
        }
    }
}

/// Sense amplifiers between a subarray pair. `side_b` is `None` for the
/// dummy reference strip.
#[derive(Debug, Clone, PartialEq)]
pub struct SenseAmpBank {
    pub side_a: usize,
    pub side_b: Option<usize>,
    /// Value latched on side A per column by the last sensing.
    pub latched: Vec<Option<bool>>,
}

/// A wordline connected to the bitlines of an open activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Connection {
    pub subarray: usize,
    pub local: usize,
    pub negated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Phase {
    /// Wordlines raised and charge shared, sense amplifiers not yet enabled.
    Sharing,
    /// Sense amplifiers latched; bitlines at full rail.
    Sensed,
}

/// Bookkeeping for the one activation the engine allows in flight.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Activation {
    pub stripe: usize,
    pub side_a: usize,
    pub side_b: Option<usize>,
    pub mask: MatMask,
    pub rows: Vec<Connection>,
    pub phase: Phase,
    /// The last command was a PRE issued with a violated gap.
    pub interrupted: bool,
    /// Single wordline of the opening ACT, for hierarchical decoding of APA.
    pub opener: Option<crate::command::Wordline>,
    /// Bitline voltages per column on each side of the stripe.
    pub bl_a: Vec<f64>,
    pub bl_b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChipState {
    pub(crate) geometry: ChipGeometry,
    pub(crate) noise: NoiseModel,
    pub(crate) timing: TimingParams,
    pub(crate) decoder: DecoderMode,
    /// Bitline to cell capacitance ratio.
    pub(crate) beta: f64,
    pub(crate) subarrays: Vec<SubarrayState>,
    /// Indexed by stripe number (the side-A subarray index).
    pub(crate) stripes: Vec<Option<SenseAmpBank>>,
    pub(crate) offsets: Vec<f64>,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) open: Option<Activation>,
    pub(crate) sector_latch: MatMask,
    /// Helper flip-flop contents per `(subarray, mat)`.
    pub(crate) hff: Vec<u64>,
    pub(crate) log: CommandTrace,
}

impl ChipState {
    pub fn new(geometry: ChipGeometry, noise: NoiseModel, init: DataPattern) -> Result<Self> {
        geometry.validate()?;
        noise.validate()?;
        let cols = geometry.columns();
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        let offsets = (0..cols)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z * noise.offset_sigma
            })
            .collect();
        let mut subarrays = vec![SubarrayState::new(geometry.rows_per_subarray, cols); geometry.total_subarrays()];
        let mut stripes = vec![None; geometry.total_subarrays()];
        for s in 0..geometry.total_subarrays() {
            if geometry.is_side_a(s) {
                stripes[s] = Some(SenseAmpBank { side_a: s, side_b: geometry.partner(s), latched: vec![None; cols] });
            }
        }
        let mut pattern_rng = match init {
            DataPattern::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        for sa in subarrays.iter_mut() {
            for r in 0..geometry.rows_per_subarray {
                for c in 0..cols {
                    let bit = match init {
                        DataPattern::AllZeros => false,
                        DataPattern::AllOnes => true,
                        DataPattern::Checkerboard => (r + c) % 2 == 1,
                        DataPattern::Random { .. } => pattern_rng.as_mut().unwrap().random::<bool>(),
                    };
                    sa.cells[r * cols + c] = if bit { 1.0 } else { 0.0 };
                }
            }
        }
        let mats = geometry.mats_per_subarray;
        Ok(ChipState {
            sector_latch: geometry.all_mats(),
            hff: vec![0; geometry.total_subarrays() * mats],
            log: CommandTrace::new(mats),
            geometry,
            noise,
            timing: TimingParams::default(),
            decoder: DecoderMode::Explicit,
            beta: 0.0,
            subarrays,
            stripes,
            offsets,
            rng,
            open: None,
        })
    }

    pub fn with_timing(mut self, timing: TimingParams) -> Result<Self> {
        timing.validate()?;
        self.timing = timing;
        Ok(self)
    }

    pub fn with_decoder(mut self, decoder: DecoderMode) -> Result<Self> {
        decoder.validate()?;
        self.decoder = decoder;
        Ok(self)
    }

    /// Sets the bitline/cell capacitance ratio; 0 gives the plain mean of
    /// the connected cells.
    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::Config(format!("beta must lie in [0, 1), got {beta}")));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn geometry(&self) -> &ChipGeometry {
        &self.geometry
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn timing(&self) -> &TimingParams {
        &self.timing
    }

    pub fn decoder(&self) -> DecoderMode {
        self.decoder
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn subarray(&self, idx: usize) -> &SubarrayState {
        &self.subarrays[idx]
    }

    pub fn sense_amps(&self, stripe: usize) -> Option<&SenseAmpBank> {
        self.stripes.get(stripe).and_then(|s| s.as_ref())
    }

    pub fn bitline_offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Overrides the fixed sensing offset of one column.
    pub fn set_bitline_offset(&mut self, column: usize, offset: f64) {
        self.offsets[column] = offset;
    }

    /// Restarts the per-sensing noise stream; the fixed column offsets stay.
    pub fn reseed_noise(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    /// Commands issued since creation (or since the log was last cleared).
    pub fn log(&self) -> &CommandTrace {
        &self.log
    }

    pub fn clear_log(&mut self) {
        self.log = CommandTrace::new(self.geometry.mats_per_subarray);
    }

    pub fn hff(&self, subarray: usize, mat: usize) -> u64 {
        self.hff[subarray * self.geometry.mats_per_subarray + mat]
    }

    pub fn is_idle(&self) -> bool {
        self.open.is_none()
    }

    pub(crate) fn cols(&self) -> usize {
        self.geometry.columns()
    }

    pub fn cell(&self, row: RowAddr, column: usize) -> f64 {
        let g = &self.geometry;
        self.subarrays[g.subarray_of(row)].cells[g.local_row(row) * g.columns() + column]
    }

    pub(crate) fn cell_mut(&mut self, subarray: usize, local: usize, column: usize) -> &mut f64 {
        let cols = self.cols();
        &mut self.subarrays[subarray].cells[local * cols + column]
    }

    pub fn row_voltages(&self, row: RowAddr) -> &[f64] {
        let g = &self.geometry;
        let cols = g.columns();
        let l = g.local_row(row);
        &self.subarrays[g.subarray_of(row)].cells[l * cols..(l + 1) * cols]
    }

    fn check_quiescent(&self, row: RowAddr) -> Result<()> {
        self.geometry.check_row(row)?;
        let s = self.geometry.subarray_of(row);
        if let Some(act) = &self.open {
            if act.side_a == s || act.side_b == Some(s) {
                return Err(Error::State(format!("subarray {s} has an activation in flight")));
            }
        }
        Ok(())
    }

    /// Thresholds every cell of `row` against VDD/2 without touching state.
    pub fn read_row_logical(&self, row: RowAddr) -> Result<Vec<LogicLevel>> {
        self.check_quiescent(row)?;
        Ok(self.row_voltages(row).iter().map(|&v| LogicLevel::from_voltage(v)).collect())
    }

    /// Like [`read_row_logical`](Self::read_row_logical) but fails on any
    /// indeterminate cell.
    pub fn read_row_bits(&self, row: RowAddr) -> Result<Vec<bool>> {
        self.read_row_logical(row)?
            .into_iter()
            .enumerate()
            .map(|(c, l)| l.bit().ok_or_else(|| Error::State(format!("row {row} column {c} holds VDD/2"))))
            .collect()
    }

    /// Host write through the memory controller.
    pub fn write_row_logical(&mut self, row: RowAddr, bits: &[bool]) -> Result<()> {
        self.check_quiescent(row)?;
        if bits.len() != self.cols() {
            return Err(Error::Validation(format!(
                "row write of {} bits into a {}-column subarray",
                bits.len(),
                self.cols()
            )));
        }
        let g = &self.geometry;
        let (s, l, cols) = (g.subarray_of(row), g.local_row(row), g.columns());
        for (c, &b) in bits.iter().enumerate() {
            self.subarrays[s].cells[l * cols + c] = if b { 1.0 } else { 0.0 };
        }
        Ok(())
    }

    /// Writes raw voltages, e.g. to probe charge sharing with arbitrary levels.
    pub fn write_row_voltages(&mut self, row: RowAddr, volts: &[f64]) -> Result<()> {
        self.check_quiescent(row)?;
        if volts.len() != self.cols() || volts.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Validation("voltages must cover the row and lie in [0, 1]".into()));
        }
        let g = &self.geometry;
        let (s, l, cols) = (g.subarray_of(row), g.local_row(row), g.columns());
        self.subarrays[s].cells[l * cols..(l + 1) * cols].copy_from_slice(volts);
        Ok(())
    }

    /// Stores VDD/2 into the selected cells of `row`.
    pub fn store_frac(&mut self, row: RowAddr, columns: impl IntoIterator<Item = usize>) -> Result<()> {
        self.check_quiescent(row)?;
        let g = &self.geometry;
        let (s, l, cols) = (g.subarray_of(row), g.local_row(row), g.columns());
        for c in columns {
            if c >= cols {
                return Err(Error::Address(format!("column {c} out of range")));
            }
            self.subarrays[s].cells[l * cols + c] = PRECHARGE;
        }
        Ok(())
    }

    pub fn snapshot(&self) -> ChipState {
        self.clone()
    }

    pub fn restore(&mut self, snap: &ChipState) {
        self.clone_from(snap);
    }

    /// Cells whose voltage differs between `self` and `other`, as
    /// `(row, column)` pairs.
    pub fn changed_cells(&self, other: &ChipState) -> Vec<(RowAddr, usize)> {
        let g = &self.geometry;
        let cols = g.columns();
        let mut out = Vec::new();
        for (s, (a, b)) in self.subarrays.iter().zip(&other.subarrays).enumerate() {
            for (i, (x, y)) in a.cells.iter().zip(&b.cells).enumerate() {
                if x.to_bits() != y.to_bits() {
                    out.push((g.row_addr(s, i / cols), i % cols));
                }
            }
        }
        out
    }

    /// SHA-256 over every cell and bitline voltage.
    pub fn state_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for sa in &self.subarrays {
            for v in sa.cells.iter().chain(&sa.bitline_v) {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        h.finalize().into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> ChipGeometry {
        ChipGeometry::new(1, 2, 2, 16, 8)
    }

    #[test]
    fn all_zeros_init() {
        let chip = ChipState::new(geom(), NoiseModel::default(), DataPattern::AllZeros).unwrap();
        assert!(chip.subarrays.iter().all(|s| s.cells.iter().all(|&v| v == 0.0)));
        assert!(chip.subarrays.iter().all(|s| s.bitline_v.iter().all(|&v| v == 0.5)));
        assert!(chip.log().is_empty());
    }

    #[test]
    fn checkerboard_init() {
        let chip = ChipState::new(geom(), NoiseModel::default(), DataPattern::Checkerboard).unwrap();
        for r in 0..32u32 {
            let g = chip.geometry();
            let l = g.local_row(RowAddr(r));
            for c in 0..16 {
                assert_eq!(chip.cell(RowAddr(r), c), ((l + c) % 2) as f64);
            }
        }
    }

    #[test]
    fn seeded_random_is_reproducible() {
        let mk = || ChipState::new(geom(), NoiseModel::default(), DataPattern::Random { seed: 7 }).unwrap();
        assert_eq!(mk(), mk());
        let other = ChipState::new(geom(), NoiseModel::default(), DataPattern::Random { seed: 8 }).unwrap();
        assert_ne!(mk().state_hash(), other.state_hash());
    }

    #[test]
    fn invalid_geometry_is_config_error() {
        let mut g = geom();
        g.columns_per_mat = 6;
        assert!(matches!(ChipState::new(g, NoiseModel::default(), DataPattern::AllZeros), Err(Error::Config(_))));
    }

    #[test]
    fn logical_round_trip_and_frac() {
        let mut chip = ChipState::new(geom(), NoiseModel::default(), DataPattern::AllZeros).unwrap();
        let bits: Vec<bool> = (0..16).map(|i| [true, false, true, true, false][i % 5]).collect();
        chip.write_row_logical(RowAddr(3), &bits).unwrap();
        assert_eq!(chip.read_row_bits(RowAddr(3)).unwrap(), bits);

        chip.write_row_logical(RowAddr(4), &[true; 16]).unwrap();
        assert!(chip.read_row_logical(RowAddr(4)).unwrap().iter().all(|&l| l == LogicLevel::High));

        chip.store_frac(RowAddr(4), [5]).unwrap();
        let levels = chip.read_row_logical(RowAddr(4)).unwrap();
        assert_eq!(levels.iter().filter(|&&l| l == LogicLevel::Indeterminate).count(), 1);
        assert_eq!(levels[5], LogicLevel::Indeterminate);
        assert!(chip.read_row_bits(RowAddr(4)).is_err());

        chip.store_frac(RowAddr(6), 0..16).unwrap();
        assert!(chip.read_row_logical(RowAddr(6)).unwrap().iter().all(|&l| l == LogicLevel::Indeterminate));
    }

    #[test]
    fn write_length_mismatch() {
        let mut chip = ChipState::new(geom(), NoiseModel::default(), DataPattern::AllZeros).unwrap();
        assert!(matches!(chip.write_row_logical(RowAddr(0), &[true; 3]), Err(Error::Validation(_))));
    }

    #[test]
    fn snapshot_restore_is_exact() {
        let mut chip = ChipState::new(geom(), NoiseModel::gaussian(0.1, 3), DataPattern::Random { seed: 1 }).unwrap();
        let snap = chip.snapshot();
        chip.write_row_logical(RowAddr(0), &[true; 16]).unwrap();
        chip.store_frac(RowAddr(1), 0..4).unwrap();
        assert!(!chip.changed_cells(&snap).is_empty());
        chip.restore(&snap);
        assert_eq!(chip, snap);
        assert!(chip.changed_cells(&snap).is_empty());
    }
}
