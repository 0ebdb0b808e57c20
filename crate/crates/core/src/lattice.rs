//! Truncated Fourier lattice on the periodic box `[0, 2π)³`.
//!
//! Coefficient arrays are stored in FFT-standard order along every axis:
//! index `i < n/2` holds wavenumber `i`, index `i ≥ n/2` holds `i - n`.
//! The flat index of `(i0, i1, i2)` is `(i0 * n + i1) * n + i2`, so axis 2
//! is contiguous.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Lattice {
    n: usize,
    cutoff: usize,
}

impl Lattice {
    pub const MIN_N: usize = 8;
    pub const MAX_N: usize = 512;

    pub fn new(n: usize) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::InvalidGrid {
                n,
                reason: "not a power of two",
            });
        }
        if !(Self::MIN_N..=Self::MAX_N).contains(&n) {
            return Err(Error::InvalidGrid {
                n,
                reason: "outside 8..=512",
            });
        }
        Ok(Lattice { n, cutoff: n / 3 })
    }

    /// Grid points per axis.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points (and coefficients) per component, `n³`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest `|k_j|` retained by the 2/3 rule, `floor(n/3)`.
    #[inline]
    pub fn dealias_cutoff(&self) -> usize {
        self.cutoff
    }

    /// Period of the box; fixed at 2π.
    #[inline]
    pub fn length(&self) -> f64 {
        TAU
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    /// Size of the 3/2-padded grid used for pointwise products.
    #[inline]
    pub fn padded_n(&self) -> usize {
        3 * self.n / 2
    }

    /// Wavenumber stored at array index `i` along one axis.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        signed_wavenumber(i, self.n)
    }

    /// Per-axis wavenumbers in storage order.
    pub fn wavenumbers(&self) -> Vec<i64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// Array index holding wavenumber `k` along one axis, if representable.
    #[inline]
    pub fn axis_index(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n as i64) as usize)
        }
    }

    #[inline]
    pub fn flat(&self, i0: usize, i1: usize, i2: usize) -> usize {
        (i0 * self.n + i1) * self.n + i2
    }

    #[inline]
    pub fn unflat(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        Some(self.flat(
            self.axis_index(k[0])?,
            self.axis_index(k[1])?,
            self.axis_index(k[2])?,
        ))
    }

    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let (i0, i1, i2) = self.unflat(idx);
        [
            self.wavenumber(i0),
            self.wavenumber(i1),
            self.wavenumber(i2),
        ]
    }

    /// Flat index of `-k` (negation modulo n, so the Nyquist plane maps to itself).
    #[inline]
    pub fn neg_index(&self, idx: usize) -> usize {
        let n = self.n;
        let (i0, i1, i2) = self.unflat(idx);
        self.flat((n - i0) % n, (n - i1) % n, (n - i2) % n)
    }

    #[inline]
    pub fn k_squared(&self, idx: usize) -> i64 {
        let [a, b, c] = self.wavevector(idx);
        a * a + b * b + c * c
    }

    /// True when every component of the wavevector lies within the dealiasing cutoff.
    #[inline]
    pub fn is_retained(&self, idx: usize) -> bool {
        let c = self.cutoff as i64;
        self.wavevector(idx).iter().all(|k| k.abs() <= c)
    }

    /// Physical coordinate of grid index `i` along one axis.
    #[inline]
    pub fn coordinate(&self, i: usize) -> f64 {
        TAU * i as f64 / self.n as f64
    }
}

#[inline]
pub(crate) fn signed_wavenumber(i: usize, m: usize) -> i64 {
    if i < m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_cutoffs() {
        let l = Lattice::new(8).unwrap();
        assert_eq!(l.dealias_cutoff(), 2);
        assert_eq!(l.len(), 512);
        assert_eq!(Lattice::new(32).unwrap().dealias_cutoff(), 10);
        assert_eq!(Lattice::new(512).unwrap().padded_n(), 768);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(
            Lattice::new(12),
            Err(Error::InvalidGrid { n: 12, .. })
        ));
        assert!(Lattice::new(4).is_err());
        assert!(Lattice::new(1024).is_err());
        assert!(Lattice::new(0).is_err());
    }

    #[test]
    fn fft_order() {
        let l = Lattice::new(8).unwrap();
        assert_eq!(l.wavenumbers(), vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for k in -4..4 {
            assert_eq!(l.wavenumber(l.axis_index(k).unwrap()), k);
        }
        assert_eq!(l.axis_index(4), None);
    }

    #[test]
    fn negation_closed() {
        let l = Lattice::new(16).unwrap();
        for idx in 0..l.len() {
            let m = l.neg_index(idx);
            assert_eq!(l.neg_index(m), idx);
            let k = l.wavevector(idx);
            let km = l.wavevector(m);
            for j in 0..3 {
                // -(-n/2) aliases back onto -n/2
                assert!(km[j] == -k[j] || (k[j] == -8 && km[j] == -8));
            }
        }
        assert!(l.dealias_cutoff() < l.n() / 2);
    }
}
