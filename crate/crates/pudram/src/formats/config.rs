// SPDX-License-Identifier: Apache-2.0
//! Run configuration, one TOML file. Every table and key is optional; unknown
//! keys are rejected.
//!
//! ```toml
//! mode = "mimdram"            # or "simdram"
//!
//! [geometry]                  # defaults: 1 bank, 2 subarrays, 4 mats, 128 rows, 16 columns
//! mats_per_subarray = 4
//!
//! [timing]                    # nanoseconds
//! t_ras_ns = 35.0
//!
//! [noise]
//! sigma = 0.05
//! offset_sigma = 0.0
//! environment_factor = 1.0
//! seed = 7
//!
//! [paths]
//! netlist = "adder.net"
//! program = "demo.bbop"
//! output_dir = "out"
//!
//! [sweep]
//! primitive = "and16"
//! sigmas = [0.0, 0.01, 0.02]
//! trials = 1000
//! patterns = ["random", "ones"]
//! seed = 0
//!
//! [trng]
//! rows = 4
//! bits = 65536
//! probes = 1000
//! band = [0.4, 0.6]
//! condition = true
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use pudram_core::control::ExecMode;
use pudram_core::reliability::{sweep_geometry, Primitive, SweepConfig, SweepPattern, TrngConfig};
use pudram_core::{ChipGeometry, ChipState, DataPattern, NoiseModel, TimingParams};

use crate::error::{read, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simdram,
    #[default]
    Mimdram,
}

impl From<Mode> for ExecMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Simdram => ExecMode::Simdram,
            Mode::Mimdram => ExecMode::Mimdram,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub banks: usize,
    pub subarrays_per_bank: usize,
    pub mats_per_subarray: usize,
    pub rows_per_subarray: usize,
    pub columns_per_mat: usize,
    pub hff_width_bits: usize,
    pub dcc_rows: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        ChipGeometry::default().into()
    }
}

impl From<ChipGeometry> for GeometryConfig {
    fn from(g: ChipGeometry) -> Self {
        GeometryConfig {
            banks: g.banks,
            subarrays_per_bank: g.subarrays_per_bank,
            mats_per_subarray: g.mats_per_subarray,
            rows_per_subarray: g.rows_per_subarray,
            columns_per_mat: g.columns_per_mat,
            hff_width_bits: g.hff_width_bits,
            dcc_rows: g.dcc_rows,
        }
    }
}

impl From<&GeometryConfig> for ChipGeometry {
    fn from(g: &GeometryConfig) -> Self {
        ChipGeometry {
            banks: g.banks,
            subarrays_per_bank: g.subarrays_per_bank,
            mats_per_subarray: g.mats_per_subarray,
            rows_per_subarray: g.rows_per_subarray,
            columns_per_mat: g.columns_per_mat,
            hff_width_bits: g.hff_width_bits,
            dcc_rows: g.dcc_rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingConfig {
    pub t_ras_ns: f64,
    pub t_rp_ns: f64,
    pub violation_threshold_ns: f64,
    pub violated_gap_ns: f64,
    pub t_rd_ns: f64,
    pub t_wr_ns: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        let t = TimingParams::default();
        TimingConfig {
            t_ras_ns: t.t_ras_ns,
            t_rp_ns: t.t_rp_ns,
            violation_threshold_ns: t.violation_threshold_ns,
            violated_gap_ns: t.violated_gap_ns,
            t_rd_ns: t.t_rd_ns,
            t_wr_ns: t.t_wr_ns,
        }
    }
}

impl From<&TimingConfig> for TimingParams {
    fn from(t: &TimingConfig) -> Self {
        TimingParams {
            t_ras_ns: t.t_ras_ns,
            t_rp_ns: t.t_rp_ns,
            violation_threshold_ns: t.violation_threshold_ns,
            violated_gap_ns: t.violated_gap_ns,
            t_rd_ns: t.t_rd_ns,
            t_wr_ns: t.t_wr_ns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub sigma: f64,
    pub offset_sigma: f64,
    pub environment_factor: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { sigma: 0.0, offset_sigma: 0.0, environment_factor: 1.0, seed: 0 }
    }
}

impl From<&NoiseConfig> for NoiseModel {
    fn from(n: &NoiseConfig) -> Self {
        NoiseModel {
            sigma: n.sigma,
            offset_sigma: n.offset_sigma,
            environment_factor: n.environment_factor,
            seed: n.seed,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub netlist: Option<PathBuf>,
    pub program: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub primitive: String,
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub patterns: Vec<String>,
    pub seed: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            primitive: "not".into(),
            sigmas: vec![0.0, 0.05, 0.1, 0.15, 0.2],
            trials: 1000,
            patterns: vec!["random".into()],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrngSection {
    pub rows: usize,
    pub bits: usize,
    pub probes: usize,
    pub band: [f64; 2],
    pub condition: bool,
}

impl Default for TrngSection {
    fn default() -> Self {
        let t = TrngConfig::default();
        TrngSection {
            rows: t.n_rows,
            bits: t.nbits,
            probes: t.probes,
            band: [t.band.0, t.band.1],
            condition: t.condition,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Mode,
    /// When absent, sweeps use their own small geometry.
    pub geometry: Option<GeometryConfig>,
    pub timing: TimingConfig,
    pub noise: NoiseConfig,
    pub paths: PathsConfig,
    pub sweep: SweepSection,
    pub trng: TrngSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read(path)?).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn geometry(&self) -> ChipGeometry {
        self.geometry.as_ref().map(ChipGeometry::from).unwrap_or_default()
    }

    pub fn noise(&self) -> NoiseModel {
        (&self.noise).into()
    }

    /// A fresh chip with every cell at zero.
    pub fn chip(&self) -> Result<ChipState> {
        Ok(ChipState::new(self.geometry(), self.noise(), DataPattern::AllZeros)?.with_timing((&self.timing).into())?)
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        let s = &self.sweep;
        let primitive: Primitive = s.primitive.parse()?;
        let mut cfg = SweepConfig::new(primitive, s.sigmas.clone(), s.trials);
        cfg.patterns = s.patterns.iter().map(|p| p.parse::<SweepPattern>()).collect::<Result<_, _>>()?;
        cfg.seed = s.seed;
        cfg.offset_sigma = self.noise.offset_sigma;
        cfg.environment_factor = self.noise.environment_factor;
        cfg.geometry = self.geometry.as_ref().map(ChipGeometry::from).unwrap_or_else(sweep_geometry);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn trng_config(&self) -> TrngConfig {
        let t = &self.trng;
        TrngConfig {
            n_rows: t.rows,
            nbits: t.bits,
            probes: t.probes,
            band: (t.band[0], t.band[1]),
            condition: t.condition,
            subarray: 0,
        }
    }
}
