// SPDX-License-Identifier: Apache-2.0
//! Success-rate sweeps under sensing noise, sigma calibration, TRNG
//! harvesting and the statistical tests used to judge the bitstreams.
//!
//! Sweeps use common random numbers: trial `t` of every `(sigma, pattern)`
//! cell reseeds the chip's noise stream with the same seed, so the standard
//! normal draws are shared across sigmas and only their scale changes.

mod stats;
mod trng;

pub use stats::{monobit_p, runs_p, stat_tests, StreamStats};
pub use trng::{condition, pack_bits, trng_run, TrngConfig, TrngReport, TrngRun, MAX_TRNG_ROWS};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chip::{ChipState, DataPattern};
use crate::error::{Error, Result};
use crate::geometry::{ChipGeometry, RowAddr};
use crate::noise::NoiseModel;
use crate::primitives::{self, NotVariant, OpKind, RefComposition, MAX_COPY_DSTS};

/// Primitive exercised by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Primitive {
    /// Cross-subarray NOT through the shared sense amplifiers.
    Not,
    Maj3,
    MultiInput(OpKind, usize),
    MultiRowCopy(usize),
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Primitive::Not => f.write_str("not"),
            Primitive::Maj3 => f.write_str("maj3"),
            Primitive::MultiInput(k, n) => {
                let name = match k {
                    OpKind::And => "and",
                    OpKind::Nand => "nand",
                    OpKind::Or => "or",
                    OpKind::Nor => "nor",
                };
                write!(f, "{name}{n}")
            }
            Primitive::MultiRowCopy(n) => write!(f, "multicopy{n}"),
        }
    }
}

impl FromStr for Primitive {
    type Err = Error;

    /// `not`, `maj3`, `and16`, `nand2`, `or4`, `nor8`, `multicopy31`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("unknown primitive `{s}`"));
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "not" => return Ok(Primitive::Not),
            "maj3" => return Ok(Primitive::Maj3),
            _ => {}
        }
        let split = lower.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
        let (name, num) = lower.split_at(split);
        let n: usize = num.parse().map_err(|_| bad())?;
        let p = match name {
            "and" => Primitive::MultiInput(OpKind::And, n),
            "nand" => Primitive::MultiInput(OpKind::Nand, n),
            "or" => Primitive::MultiInput(OpKind::Or, n),
            "nor" => Primitive::MultiInput(OpKind::Nor, n),
            "multicopy" | "mrc" => Primitive::MultiRowCopy(n),
            _ => return Err(bad()),
        };
        p.validate()?;
        Ok(p)
    }
}

impl Primitive {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Primitive::MultiInput(k, n) => RefComposition::for_op(k, n).map(|_| ()),
            Primitive::MultiRowCopy(n) if n == 0 || n > MAX_COPY_DSTS => {
                Err(Error::Validation(format!("multicopy takes 1..={MAX_COPY_DSTS} destinations, got {n}")))
            }
            _ => Ok(()),
        }
    }

    /// Rows needed in the first subarray.
    fn rows_needed(&self) -> usize {
        match *self {
            Primitive::Not => 1,
            Primitive::Maj3 => 3,
            Primitive::MultiInput(_, n) => n,
            Primitive::MultiRowCopy(n) => n + 1,
        }
    }
}

/// Input data written before every trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepPattern {
    Zeros,
    Ones,
    /// Input row `k`, column `c` holds `(k + c) mod 2`.
    Checkerboard,
    /// Fresh random bits per trial.
    Random,
}

impl SweepPattern {
    pub const ALL: [SweepPattern; 4] =
        [SweepPattern::Zeros, SweepPattern::Ones, SweepPattern::Checkerboard, SweepPattern::Random];

    pub fn name(self) -> &'static str {
        match self {
            SweepPattern::Zeros => "zeros",
            SweepPattern::Ones => "ones",
            SweepPattern::Checkerboard => "checkerboard",
            SweepPattern::Random => "random",
        }
    }
}

impl fmt::Display for SweepPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepPattern::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown data pattern `{s}`")))
    }
}

/// Geometry used by sweeps unless told otherwise: one subarray pair of 64
/// rows, 64 columns.
pub fn sweep_geometry() -> ChipGeometry {
    ChipGeometry::new(1, 2, 4, 64, 16)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub primitive: Primitive,
    pub sigmas: Vec<f64>,
    pub environment_factor: f64,
    pub offset_sigma: f64,
    pub trials: usize,
    pub patterns: Vec<SweepPattern>,
    pub seed: u64,
    pub geometry: ChipGeometry,
}

impl SweepConfig {
    pub fn new(primitive: Primitive, sigmas: Vec<f64>, trials: usize) -> Self {
        SweepConfig {
            primitive,
            sigmas,
            environment_factor: 1.0,
            offset_sigma: 0.0,
            trials,
            patterns: vec![SweepPattern::Random],
            seed: 0,
            geometry: sweep_geometry(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.primitive.validate()?;
        if self.trials == 0 {
            return Err(Error::Validation("a sweep needs at least one trial per point".into()));
        }
        if self.sigmas.is_empty() || self.patterns.is_empty() {
            return Err(Error::Validation("a sweep needs at least one sigma and one pattern".into()));
        }
        if self.sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Validation("sigma values must be finite and non-negative".into()));
        }
        self.geometry.validate()?;
        let g = &self.geometry;
        if g.subarrays_per_bank < 2 || self.primitive.rows_needed() > g.rows_per_subarray - g.dcc_rows {
            return Err(Error::Validation(format!(
                "{} needs a subarray pair with {} data rows",
                self.primitive,
                self.primitive.rows_needed()
            )));
        }
        NoiseModel { sigma: 0.0, offset_sigma: self.offset_sigma, environment_factor: self.environment_factor, seed: 0 }
            .validate()
    }

    /// The `(sigma, pattern)` cells of the table, sigma-major.
    pub fn cells(&self) -> Vec<(f64, SweepPattern)> {
        self.sigmas.iter().flat_map(|&s| self.patterns.iter().map(move |&p| (s, p))).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub primitive: String,
    pub sigma: f64,
    pub pattern: SweepPattern,
    pub trials: usize,
    pub successes: usize,
}

impl SweepRow {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trial `t`; shared by every sigma and pattern of a sweep.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    splitmix(seed ^ splitmix(t as u64))
}

/// Per-trial harness: writes inputs, runs the primitive and compares every
/// result row with the noiseless expectation.
struct Bench {
    chip: ChipState,
    prim: Primitive,
    a: Vec<RowAddr>,
    b: Vec<RowAddr>,
    inputs: Vec<Vec<bool>>,
}

impl Bench {
    fn new(cfg: &SweepConfig, sigma: f64) -> Result<Self> {
        let g = cfg.geometry.clone();
        let noise = NoiseModel {
            sigma,
            offset_sigma: cfg.offset_sigma,
            environment_factor: cfg.environment_factor,
            seed: cfg.seed,
        };
        let chip = ChipState::new(g.clone(), noise, DataPattern::AllZeros)?;
        let n = cfg.primitive.rows_needed();
        let a = (0..n).map(|i| g.row_addr(0, i)).collect();
        let b = (0..n).map(|i| g.row_addr(1, i)).collect();
        Ok(Bench { chip, prim: cfg.primitive, a, b, inputs: Vec::new() })
    }

    fn fill(&mut self, pattern: SweepPattern, seed: u64) {
        let cols = self.chip.geometry().columns();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_DA7A);
        self.inputs = (0..self.a.len())
            .map(|k| {
                (0..cols)
                    .map(|c| match pattern {
                        SweepPattern::Zeros => false,
                        SweepPattern::Ones => true,
                        SweepPattern::Checkerboard => (k + c) % 2 == 1,
                        SweepPattern::Random => rng.random(),
                    })
                    .collect()
            })
            .collect();
    }

    fn trial(&mut self, pattern: SweepPattern, seed: u64) -> Result<bool> {
        self.fill(pattern, seed);
        let chip = &mut self.chip;
        for (r, bits) in self.a.iter().zip(&self.inputs) {
            chip.write_row_logical(*r, bits)?;
        }
        chip.reseed_noise(seed);
        let cols = chip.geometry().columns();
        let column = |c: usize| self.inputs.iter().map(move |row| row[c]);
        let expect_rows = |chip: &ChipState, rows: &[RowAddr], want: &[bool]| -> Result<bool> {
            for &r in rows {
                let got = chip.read_row_logical(r)?;
                if got.iter().zip(want).any(|(l, &w)| l.bit() != Some(w)) {
                    return Ok(false);
                }
            }
            Ok(true)
        };
        match self.prim {
            Primitive::Not => {
                primitives::not_op(chip, self.a[0], self.b[0], NotVariant::Cots)?;
                let want: Vec<bool> = self.inputs[0].iter().map(|b| !b).collect();
                expect_rows(chip, &self.b[..1], &want)
            }
            Primitive::Maj3 => {
                primitives::tra_maj3(chip, [self.a[0], self.a[1], self.a[2]])?;
                let want: Vec<bool> = (0..cols).map(|c| column(c).filter(|&b| b).count() >= 2).collect();
                expect_rows(chip, &self.a, &want)
            }
            Primitive::MultiInput(kind, n) => {
                let comp = RefComposition::for_op(kind, n)?;
                primitives::make_reference(chip, &comp, &self.b)?;
                primitives::multi_input_op(chip, kind, &self.a, &self.b)?;
                let want: Vec<bool> = (0..cols).map(|c| kind.eval(column(c))).collect();
                expect_rows(chip, primitives::multi_input_result_rows(kind, &self.a, &self.b), &want)
            }
            Primitive::MultiRowCopy(_) => {
                primitives::multi_row_copy(chip, self.a[0], &self.a[1..])?;
                let want = self.inputs[0].clone();
                expect_rows(chip, &self.a, &want)
            }
        }
    }
}

/// Runs every trial of one `(sigma, pattern)` cell.
pub fn sweep_cell(cfg: &SweepConfig, sigma: f64, pattern: SweepPattern) -> Result<SweepRow> {
    cfg.validate()?;
    let mut bench = Bench::new(cfg, sigma)?;
    let mut successes = 0;
    for t in 0..cfg.trials {
        match bench.trial(pattern, trial_seed(cfg.seed, t)) {
            Ok(true) => successes += 1,
            Ok(false) => {}
            // A zero-noise tie means the operation has no defined outcome.
            Err(Error::Tie { .. }) => {}
            Err(e) => return Err(e),
        }
        if !bench.chip.is_idle() {
            return Err(Error::State("primitive left a row open".into()));
        }
        bench.chip.clear_log();
    }
    Ok(SweepRow { primitive: cfg.primitive.to_string(), sigma, pattern, trials: cfg.trials, successes })
}

/// Success rate for every `(sigma, pattern)` cell, sigma-major.
pub fn success_rate_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    cfg.cells().into_iter().map(|(s, p)| sweep_cell(cfg, s, p)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrateConfig {
    pub trials: usize,
    /// Accepted distance between achieved and target rate.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest sigma tried when searching for the upper bracket.
    pub sigma_ceiling: f64,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        CalibrateConfig { trials: 10_000, tolerance: 0.01, max_iterations: 40, sigma_ceiling: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub sigma: f64,
    pub rate: f64,
    /// Final bracket: rate at `lo` is at least the target, at `hi` below it.
    pub lo: f64,
    pub hi: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Bisects sigma until the success rate of `base.primitive` on `pattern`
/// lands within the tolerance of `target`. The sigma list and trial count of
/// `base` are ignored.
pub fn calibrate(
    base: &SweepConfig,
    pattern: SweepPattern,
    target: f64,
    opts: &CalibrateConfig,
) -> Result<Calibration> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::Validation(format!("target rate {target} outside [0, 1]")));
    }
    let mut cfg = base.clone();
    cfg.trials = opts.trials;
    cfg.sigmas = vec![0.0];
    cfg.patterns = vec![pattern];
    let mut evaluations = 0;
    let mut rate_at = |sigma: f64| -> Result<f64> {
        evaluations += 1;
        Ok(sweep_cell(&cfg, sigma, pattern)?.success_rate())
    };
    let r0 = rate_at(0.0)?;
    if target >= 1.0 {
        let converged = (r0 - target).abs() <= opts.tolerance;
        return Ok(Calibration { sigma: 0.0, rate: r0, lo: 0.0, hi: 0.0, evaluations, converged });
    }
    if r0 < target {
        return Err(Error::Validation(format!("noiseless success rate {r0} is already below the target {target}")));
    }
    let (mut lo, mut hi) = (0.0, 0.05);
    let mut r_hi = rate_at(hi)?;
    while r_hi >= target {
        lo = hi;
        hi *= 2.0;
        if hi > opts.sigma_ceiling {
            return Err(Error::Validation(format!(
                "no sigma up to {} brings the rate below {target}",
                opts.sigma_ceiling
            )));
        }
        r_hi = rate_at(hi)?;
    }
    // Aim well inside the tolerance so the reported rate is not marginal.
    let aim = opts.tolerance / 4.0;
    let mut best = (hi, r_hi);
    for _ in 0..opts.max_iterations {
        let mid = 0.5 * (lo + hi);
        let r = rate_at(mid)?;
        if (r - target).abs() < (best.1 - target).abs() {
            best = (mid, r);
        }
        if r >= target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (r - target).abs() <= aim || hi - lo < 1e-9 {
            break;
        }
    }
    Ok(Calibration {
        sigma: best.0,
        rate: best.1,
        lo,
        hi,
        evaluations,
        converged: (best.1 - target).abs() <= opts.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_names_round_trip() {
        for s in ["not", "maj3", "and16", "nand2", "or4", "nor8", "multicopy31"] {
            assert_eq!(s.parse::<Primitive>().unwrap().to_string(), s);
        }
        assert!("and3".parse::<Primitive>().is_err());
        assert!("multicopy32".parse::<Primitive>().is_err());
        assert!("xor2".parse::<Primitive>().is_err());
    }

    #[test]
    fn noiseless_is_perfect() {
        for p in ["not", "maj3", "and16", "nor4", "multicopy7"] {
            let mut cfg = SweepConfig::new(p.parse().unwrap(), vec![0.0], 20);
            cfg.patterns = SweepPattern::ALL.to_vec();
            for row in success_rate_sweep(&cfg).unwrap() {
                assert_eq!(row.successes, 20, "{p} {:?}", row.pattern);
            }
        }
    }

    #[test]
    fn sweep_is_reproducible_and_ordered() {
        let mut cfg = SweepConfig::new(Primitive::Maj3, vec![0.0, 0.1, 0.2], 50);
        cfg.patterns = vec![SweepPattern::Random, SweepPattern::Checkerboard];
        let a = success_rate_sweep(&cfg).unwrap();
        assert_eq!(a, success_rate_sweep(&cfg).unwrap());
        assert_eq!(a.len(), 6);
        assert_eq!((a[1].sigma, a[1].pattern), (0.0, SweepPattern::Checkerboard));
        let rand: Vec<_> = a.iter().filter(|r| r.pattern == SweepPattern::Random).map(|r| r.successes).collect();
        assert!(rand.windows(2).all(|w| w[0] >= w[1]), "{rand:?}");
        assert!(rand[2] < 50);
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = SweepConfig::new(Primitive::Not, vec![0.1], 0);
        assert!(matches!(success_rate_sweep(&cfg), Err(Error::Validation(_))));
    }

    #[test]
    fn calibrate_full_rate_is_zero_sigma() {
        let cfg = SweepConfig::new(Primitive::Not, vec![], 1);
        let c =
            calibrate(&cfg, SweepPattern::Random, 1.0, &CalibrateConfig { trials: 50, ..Default::default() }).unwrap();
        assert_eq!(c.sigma, 0.0);
        assert!(c.converged);
    }

    #[test]
    fn calibrate_brackets_the_target() {
        let cfg = SweepConfig::new(Primitive::Not, vec![], 1);
        let opts = CalibrateConfig { trials: 400, ..Default::default() };
        let c = calibrate(&cfg, SweepPattern::Random, 0.9, &opts).unwrap();
        assert!(c.converged, "{c:?}");
        assert!(c.sigma > 0.0 && c.lo <= c.sigma && c.sigma <= c.hi);
        assert!((c.rate - 0.9).abs() <= 0.01);
    }
}
