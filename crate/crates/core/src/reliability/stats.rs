// SPDX-License-Identifier: Apache-2.0
//! Frequency (monobit) and runs tests on bit sequences.

use libm::{erfc, sqrt};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamStats {
    pub bits: usize,
    pub ones_fraction: f64,
    pub monobit_p: f64,
    pub runs_p: f64,
}

impl StreamStats {
    pub fn passes(&self, alpha: f64) -> bool {
        self.monobit_p >= alpha && self.runs_p >= alpha
    }
}

pub fn monobit_p(bits: &[bool]) -> f64 {
    if bits.is_empty() {
        return 0.0;
    }
    let n = bits.len() as f64;
    let s: i64 = bits.iter().map(|&b| if b { 1 } else { -1 }).sum();
    erfc((s.unsigned_abs() as f64 / sqrt(n)) / core::f64::consts::SQRT_2)
}

/// Runs test p-value. A stream whose ones fraction is off by `2/sqrt(n)` or
/// more fails the prerequisite frequency check and gets `0.0`.
pub fn runs_p(bits: &[bool]) -> f64 {
    let n = bits.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let pi = bits.iter().filter(|&&b| b).count() as f64 / nf;
    if (pi - 0.5).abs() >= 2.0 / sqrt(nf) {
        return 0.0;
    }
    let v = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let q = pi * (1.0 - pi);
    erfc((v as f64 - 2.0 * nf * q).abs() / (2.0 * sqrt(2.0 * nf) * q))
}

pub fn stat_tests(bits: &[bool]) -> StreamStats {
    let ones = bits.iter().filter(|&&b| b).count();
    StreamStats {
        bits: bits.len(),
        ones_fraction: if bits.is_empty() { 0.0 } else { ones as f64 / bits.len() as f64 },
        monobit_p: monobit_p(bits),
        runs_p: runs_p(bits),
    }
}
