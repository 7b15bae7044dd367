//! Self-similar nested lattice pairs and codebook indexing.

use crate::error::LatticeError;
use crate::lattice::Lattice;
use crate::scalar::{norm_sq, Scalar};

/// Tolerance on the fine-basis coordinates of a point claimed to be a
/// fine lattice point.
const COORD_TOL: f64 = 1e-6;

/// Coarse lattice `k·Λ_f` inside the fine lattice `Λ_f`.
///
/// The codebook is the set of fine points in the coarse Voronoi cell,
/// `kⁿ` codewords indexed in mixed radix by their fine coordinates mod `k`.
#[derive(Clone, Debug)]
pub struct NestedPair<T: Scalar> {
    fine: Lattice<T>,
    coarse: Lattice<T>,
    k: u64,
    size: u128,
}

impl<T: Scalar> NestedPair<T> {
    pub fn new(fine: Lattice<T>, k: u64) -> Result<Self, LatticeError> {
        if k < 2 {
            return Err(LatticeError::NestingFactorTooSmall(k));
        }
        let n = fine.dim();
        let size = u32::try_from(n)
            .ok()
            .and_then(|e| (k as u128).checked_pow(e))
            .ok_or(LatticeError::CodebookTooLarge { k, n })?;
        let coarse = fine.scaled(T::lit(k as f64))?;
        Ok(Self { fine, coarse, k, size })
    }

    pub fn fine(&self) -> &Lattice<T> {
        &self.fine
    }

    pub fn coarse(&self) -> &Lattice<T> {
        &self.coarse
    }

    pub fn nesting_factor(&self) -> u64 {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.fine.dim()
    }

    /// Number of codewords, `kⁿ`.
    pub fn codebook_size(&self) -> u128 {
        self.size
    }

    /// Coding rate in bits per dimension, `log₂ k`.
    pub fn rate_bits(&self) -> f64 {
        (self.k as f64).log2()
    }

    /// `(1/n)·log₂(V_coarse / V_fine)`, computed from the cached volumes.
    pub fn rate_from_volumes(&self) -> f64 {
        (self.coarse.volume().as_f64().ln() - self.fine.volume().as_f64().ln())
            / (self.dim() as f64 * std::f64::consts::LN_2)
    }

    /// Every coarse basis vector has integral fine coordinates.
    pub fn verify_nesting(&self) -> bool {
        let n = self.dim();
        let rows = self.coarse.generator_rows();
        rows.chunks(n).all(|row| {
            self.fine
                .coordinates(row)
                .map(|z| z.iter().all(|c| (c.as_f64() - c.as_f64().round()).abs() < 1e-9))
                .unwrap_or(false)
        })
    }

    /// Index of the coset of a fine lattice point in the coarse Voronoi cell.
    ///
    /// Points on the cell boundary are accepted and map to their coset.
    pub fn coset_index(&self, point: &[T]) -> Result<u128, LatticeError> {
        let z = self.fine.coordinates(point)?;
        let mut digits = Vec::with_capacity(z.len());
        for c in z {
            let c = c.as_f64();
            let r = c.round();
            if (c - r).abs() > COORD_TOL * (1.0 + r.abs()) {
                return Err(LatticeError::NotInCodebook);
            }
            digits.push((r as i128).rem_euclid(self.k as i128) as u128);
        }
        if !self.in_closed_cell(point)? {
            return Err(LatticeError::NotInCodebook);
        }
        let k = self.k as u128;
        Ok(digits.iter().rev().fold(0u128, |acc, &d| acc * k + d))
    }

    // Closed coarse cell: no coarse point strictly closer than the origin.
    // Tie-breaking may send a boundary point to a neighbour, so compare
    // distances instead of testing `quantize == 0`.
    fn in_closed_cell(&self, point: &[T]) -> Result<bool, LatticeError> {
        let q = self.coarse.quantize(point)?;
        if q.iter().all(|&c| c == T::zero()) {
            return Ok(true);
        }
        let d0 = norm_sq(point).as_f64();
        let diff: Vec<T> = point.iter().zip(&q).map(|(&a, &b)| a - b).collect();
        let d1 = norm_sq(&diff).as_f64();
        Ok(d0 <= d1 + COORD_TOL * (1.0 + d1))
    }

    /// Representative of coset `index` inside the coarse Voronoi cell.
    pub fn codeword_of_index(&self, index: u128) -> Result<Vec<T>, LatticeError> {
        if index >= self.size {
            return Err(LatticeError::IndexOutOfRange { index, size: self.size });
        }
        let k = self.k as u128;
        let mut rem = index;
        let coords: Vec<T> = (0..self.dim())
            .map(|_| {
                let d = rem % k;
                rem /= k;
                T::lit(d as f64)
            })
            .collect();
        self.coarse.modulo(&self.fine.point(&coords))
    }
}

/// Build the self-similar pair `(k·fine, fine)`.
pub fn make_nested_pair<T: Scalar>(fine: Lattice<T>, k: u64) -> Result<NestedPair<T>, LatticeError> {
    NestedPair::new(fine, k)
}
