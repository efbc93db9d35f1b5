// SPDX-License-Identifier: Apache-2.0
//! Chip organization: banks, subarrays, mats, rows and columns.
//!
//! Rows are addressed with a flat [`RowAddr`]: subarrays are numbered
//! bank-major, and every subarray owns `rows_per_subarray` consecutive
//! addresses. Sense-amplifier stripes are shared by subarray pairs `(2k, 2k+1)`
//! of the same bank; the even member is side A of the stripe and the odd
//! member side B. A trailing odd subarray faces a dummy reference strip.

use alloc::format;
use core::fmt;
use core::ops::Range;

use crate::error::{Error, Result};

pub const MAX_MATS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChipGeometry {
    pub banks: usize,
    pub subarrays_per_bank: usize,
    pub mats_per_subarray: usize,
    pub rows_per_subarray: usize,
    pub columns_per_mat: usize,
    /// Width of a mat's helper flip-flop group, in bits.
    pub hff_width_bits: usize,
    /// Number of dual-contact rows at the top of every subarray. These rows
    /// can additionally be connected to the bitline-bar through their negation
    /// wordline.
    pub dcc_rows: usize,
}

impl Default for ChipGeometry {
    fn default() -> Self {
        ChipGeometry {
            banks: 1,
            subarrays_per_bank: 2,
            mats_per_subarray: 4,
            rows_per_subarray: 128,
            columns_per_mat: 16,
            hff_width_bits: 4,
            dcc_rows: 2,
        }
    }
}

impl ChipGeometry {
    pub fn new(
        banks: usize,
        subarrays_per_bank: usize,
        mats_per_subarray: usize,
        rows_per_subarray: usize,
        columns_per_mat: usize,
    ) -> Self {
        ChipGeometry {
            banks,
            subarrays_per_bank,
            mats_per_subarray,
            rows_per_subarray,
            columns_per_mat,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("banks", self.banks),
            ("subarrays_per_bank", self.subarrays_per_bank),
            ("mats_per_subarray", self.mats_per_subarray),
            ("rows_per_subarray", self.rows_per_subarray),
            ("columns_per_mat", self.columns_per_mat),
            ("hff_width_bits", self.hff_width_bits),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !self.rows_per_subarray.is_multiple_of(2) {
            return Err(Error::Config(format!("rows_per_subarray must be even, got {}", self.rows_per_subarray)));
        }
        if !self.columns_per_mat.is_multiple_of(self.hff_width_bits) {
            return Err(Error::Config(format!(
                "hff_width_bits {} does not divide columns_per_mat {}",
                self.hff_width_bits, self.columns_per_mat
            )));
        }
        if self.hff_width_bits > 64 {
            return Err(Error::Config("hff_width_bits must be at most 64".into()));
        }
        if self.mats_per_subarray > MAX_MATS {
            return Err(Error::Config(format!("at most {MAX_MATS} mats per subarray are supported")));
        }
        if self.dcc_rows > self.rows_per_subarray {
            return Err(Error::Config("more DCC rows than rows per subarray".into()));
        }
        let total = self.total_subarrays() as u64 * self.rows_per_subarray as u64;
        if total > u32::MAX as u64 {
            return Err(Error::Config("row address space exceeds 32 bits".into()));
        }
        Ok(())
    }

    /// Columns across all mats of one subarray.
    pub fn columns(&self) -> usize {
        self.mats_per_subarray * self.columns_per_mat
    }

    pub fn total_subarrays(&self) -> usize {
        self.banks * self.subarrays_per_bank
    }

    pub fn total_rows(&self) -> usize {
        self.total_subarrays() * self.rows_per_subarray
    }

    pub fn check_row(&self, row: RowAddr) -> Result<()> {
        if (row.0 as usize) < self.total_rows() {
            Ok(())
        } else {
            Err(Error::Address(format!("row {row} out of range (chip has {} rows)", self.total_rows())))
        }
    }

    pub fn subarray_of(&self, row: RowAddr) -> usize {
        row.0 as usize / self.rows_per_subarray
    }

    pub fn local_row(&self, row: RowAddr) -> usize {
        row.0 as usize % self.rows_per_subarray
    }

    pub fn row_addr(&self, subarray: usize, local: usize) -> RowAddr {
        debug_assert!(local < self.rows_per_subarray);
        RowAddr((subarray * self.rows_per_subarray + local) as u32)
    }

    pub fn bank_of(&self, subarray: usize) -> usize {
        subarray / self.subarrays_per_bank
    }

    /// Subarray on the other side of `subarray`'s sense-amplifier stripe, or
    /// `None` when it faces the dummy reference strip.
    pub fn partner(&self, subarray: usize) -> Option<usize> {
        let within = subarray % self.subarrays_per_bank;
        let other = within ^ 1;
        (other < self.subarrays_per_bank).then(|| subarray - within + other)
    }

    /// Index of the sense-amplifier stripe serving `subarray`.
    pub fn stripe_of(&self, subarray: usize) -> usize {
        subarray - (subarray % self.subarrays_per_bank) % 2
    }

    /// True when `subarray` sits on side A (the even side) of its stripe.
    pub fn is_side_a(&self, subarray: usize) -> bool {
        (subarray % self.subarrays_per_bank).is_multiple_of(2)
    }

    pub fn is_dcc(&self, local_row: usize) -> bool {
        local_row >= self.rows_per_subarray - self.dcc_rows
    }

    pub fn mat_of_column(&self, column: usize) -> usize {
        column / self.columns_per_mat
    }

    pub fn mat_columns(&self, mat: usize) -> Range<usize> {
        mat * self.columns_per_mat..(mat + 1) * self.columns_per_mat
    }

    pub fn all_mats(&self) -> MatMask {
        MatMask::range(0, self.mats_per_subarray - 1)
    }
}

/// Flat row address across every bank and subarray of the chip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowAddr(pub u32);

impl fmt::Display for RowAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for RowAddr {
    fn from(v: u32) -> Self {
        RowAddr(v)
    }
}

/// Set of mats within a subarray, bit `m` selecting mat `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MatMask(pub u64);

impl MatMask {
    pub fn single(mat: usize) -> Self {
        MatMask(1 << mat)
    }

    /// Inclusive range `[begin, end]`.
    pub fn range(begin: usize, end: usize) -> Self {
        let mut m = 0u64;
        for i in begin..=end {
            m |= 1 << i;
        }
        MatMask(m)
    }

    pub fn contains(&self, mat: usize) -> bool {
        mat < 64 && self.0 >> mat & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&m| self.contains(m))
    }
}
