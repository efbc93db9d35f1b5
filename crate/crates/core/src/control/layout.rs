// SPDX-License-Identifier: Apache-2.0
//! Host-side conversion between element arrays and vertical row images.

use alloc::format;
use alloc::vec::Vec;

use crate::chip::ChipState;
use crate::error::{Error, Result};
use crate::geometry::RowAddr;

fn check_width(width: usize) -> Result<()> {
    if width == 0 || width > 64 {
        return Err(Error::Validation(format!("element width {width} outside 1..=64")));
    }
    Ok(())
}

/// Row `i` of the result holds bit `i` of every element, element `j` in column `j`.
pub fn transpose(elements: &[u64], width: usize) -> Result<Vec<Vec<bool>>> {
    check_width(width)?;
    Ok((0..width).map(|i| elements.iter().map(|e| e >> i & 1 == 1).collect()).collect())
}

/// Inverse of [`transpose`].
pub fn untranspose(rows: &[Vec<bool>]) -> Result<Vec<u64>> {
    check_width(rows.len())?;
    let n = rows[0].len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Validation("row images differ in length".into()));
    }
    Ok((0..n).map(|j| rows.iter().enumerate().fold(0u64, |acc, (i, r)| acc | (r[j] as u64) << i)).collect())
}

/// Host-writes one element per column into rows `base..base + width`.
pub fn store_vertical(chip: &mut ChipState, base: RowAddr, width: usize, per_column: &[u64]) -> Result<()> {
    let rows = transpose(per_column, width)?;
    for (i, r) in rows.iter().enumerate() {
        chip.write_row_logical(RowAddr(base.0 + i as u32), r)?;
    }
    Ok(())
}

/// Reads back one element per column from rows `base..base + width`.
pub fn load_vertical(chip: &ChipState, base: RowAddr, width: usize) -> Result<Vec<u64>> {
    check_width(width)?;
    let rows = (0..width).map(|i| chip.read_row_bits(RowAddr(base.0 + i as u32))).collect::<Result<Vec<_>>>()?;
    untranspose(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for width in [1, 13, 64] {
            let mask = if width == 64 { !0 } else { (1u64 << width) - 1 };
            let v: Vec<u64> = (0..37).map(|_| rng.random::<u64>() & mask).collect();
            let rows = transpose(&v, width).unwrap();
            assert_eq!(rows.len(), width);
            assert_eq!(untranspose(&rows).unwrap(), v);
        }
    }

    #[test]
    fn bit_placement() {
        let rows = transpose(&[0b10, 0b01], 2).unwrap();
        assert_eq!(rows, [[false, true], [true, false]]);
        assert!(transpose(&[1], 0).is_err());
        assert!(untranspose(&[alloc::vec![true], alloc::vec![]]).is_err());
    }
}
