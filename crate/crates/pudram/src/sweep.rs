// SPDX-License-Identifier: Apache-2.0
//! Parallel sweep driver. Each `(sigma, pattern)` cell runs on its own chip
//! inside a rayon task; the table comes back in [`SweepConfig::cells`] order,
//! identical to the sequential sweep.

use rayon::prelude::*;

use pudram_core::reliability::{sweep_cell, SweepConfig, SweepRow};

use crate::error::Result;

pub fn parallel_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let rows = cfg
        .cells()
        .into_par_iter()
        .map(|(sigma, pattern)| sweep_cell(cfg, sigma, pattern))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pudram_core::reliability::{success_rate_sweep, SweepPattern};

    #[test]
    fn matches_the_sequential_sweep() {
        let mut cfg = SweepConfig::new("and4".parse().unwrap(), vec![0.0, 0.05, 0.1], 40);
        cfg.patterns = SweepPattern::ALL.to_vec();
        cfg.seed = 11;
        let par = parallel_sweep(&cfg).unwrap();
        assert_eq!(par, success_rate_sweep(&cfg).unwrap());
        assert_eq!(par.len(), 12);
    }
}
