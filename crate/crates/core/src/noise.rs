// SPDX-License-Identifier: Apache-2.0
use crate::error::{Error, Result};

/// Sensing noise applied to every bitline differential right before the
/// sense amplifier resolves it.
///
/// Each sensed column sees `offset[c] + sigma * environment_factor * z` added
/// to its bitline deviation, with `z ~ N(0, 1)` freshly drawn per sensing and
/// `offset[c] ~ N(0, offset_sigma)` drawn once when the chip is created.
/// Voltages are in units of VDD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    pub offset_sigma: f64,
    /// Temperature/voltage stress knob, multiplies `sigma`.
    pub environment_factor: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { sigma: 0.0, offset_sigma: 0.0, environment_factor: 1.0, seed: 0 }
    }
}

impl NoiseModel {
    pub fn noiseless(seed: u64) -> Self {
        NoiseModel { seed, ..Default::default() }
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        NoiseModel { sigma, seed, ..Default::default() }
    }

    pub fn with_offsets(mut self, offset_sigma: f64) -> Self {
        self.offset_sigma = offset_sigma;
        self
    }

    pub fn effective_sigma(&self) -> f64 {
        self.sigma * self.environment_factor
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.sigma) || !ok(self.offset_sigma) || !ok(self.environment_factor) {
            return Err(Error::Config("noise parameters must be finite and non-negative".into()));
        }
        Ok(())
    }
}
