//! Periodic-box Fourier lattice.
//!
//! The box is `[0, L)^2` sampled on an `n x n` grid; the dual lattice carries
//! the wavenumbers `xi_k = 2 pi k / L` with integer part `k` in
//! `[-n/2, n/2)`. The Nyquist row/column (`k = -n/2`) has no negation partner
//! on the lattice, so it is flagged and zeroed by every multiplier
//! application.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dual-lattice description of a periodic `n x n` grid of period `length`.
#[derive(Debug, Clone)]
pub struct FourierGrid<T> {
    n: usize,
    length: T,
    /// `2 pi / length`, the wavenumber spacing.
    dxi: T,
    /// Signed integer wavenumber for each storage index `0..n`.
    kint: Arc<[i64]>,
}

impl<T: Real> FourierGrid<T> {
    /// Build the lattice. `n` must be a power of two `>= 8`, `length > 0`.
    pub fn new(n: usize, length: T) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        if length <= T::zero() || !length.is_finite() {
            return Err(Error::NonpositiveLength(length.to_f64().unwrap_or(f64::NAN)));
        }
        let kint: Vec<i64> = (0..n)
            .map(|i| if i < n / 2 { i as i64 } else { i as i64 - n as i64 })
            .collect();
        let dxi = T::of(2.0) * T::PI() / length;
        Ok(Self { n, length, dxi, kint: kint.into() })
    }

    /// Cells per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Box period.
    pub fn length(&self) -> T {
        self.length
    }

    /// Physical grid spacing `L / n`.
    pub fn dx(&self) -> T {
        self.length / T::of_usize(self.n)
    }

    /// Wavenumber spacing `2 pi / L` (also the smallest nonzero `|xi|`).
    pub fn dxi(&self) -> T {
        self.dxi
    }

    /// Signed integer wavenumber at storage index `i`.
    pub fn k_int(&self, i: usize) -> i64 {
        self.kint[i]
    }

    /// One wavenumber component at storage index `i`.
    pub fn xi_1d(&self, i: usize) -> T {
        T::of_i64(self.kint[i]) * self.dxi
    }

    /// Wavenumber vector at storage index `(ix, iy)`.
    pub fn xi(&self, ix: usize, iy: usize) -> [T; 2] {
        [self.xi_1d(ix), self.xi_1d(iy)]
    }

    /// `|xi|` at storage index `(ix, iy)`.
    pub fn xi_abs(&self, ix: usize, iy: usize) -> T {
        let [a, b] = self.xi(ix, iy);
        (a * a + b * b).sqrt()
    }

    /// Whether either component sits on the unpaired Nyquist row/column.
    pub fn is_nyquist(&self, ix: usize, iy: usize) -> bool {
        ix == self.n / 2 || iy == self.n / 2
    }

    /// Centered physical coordinate of sample `(ix, iy)`: both components in
    /// `[-L/2, L/2)`.
    pub fn x_centered(&self, ix: usize, iy: usize) -> [T; 2] {
        let half = self.length * T::of(0.5);
        [
            T::of_usize(ix) * self.dx() - half,
            T::of_usize(iy) * self.dx() - half,
        ]
    }

    /// Physical coordinate in `[0, L)`.
    pub fn x(&self, ix: usize, iy: usize) -> [T; 2] {
        [T::of_usize(ix) * self.dx(), T::of_usize(iy) * self.dx()]
    }

    /// Largest `|xi|` on the lattice away from the Nyquist rows.
    pub fn xi_max(&self) -> T {
        let m = T::of_usize(self.n / 2 - 1) * self.dxi;
        m * T::of(std::f64::consts::SQRT_2)
    }

    /// Storage index of the wavenumber `-k` (Nyquist maps to itself).
    pub fn conj_index(&self, i: usize) -> usize {
        if i == 0 {
            0
        } else {
            self.n - i
        }
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.length != other.length {
            return Err(Error::GridMismatch(self.n, other.n));
        }
        Ok(())
    }

    /// Iterate over all storage index pairs `(ix, iy)`.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |iy| (0..n).map(move |ix| (ix, iy)))
    }
}

impl<T: Real> PartialEq for FourierGrid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_of_period_two_pi() {
        let g: FourierGrid<f64> = FourierGrid::new(8, 2.0 * std::f64::consts::PI).unwrap();
        // 64 lattice points with integer wavenumbers -4..3 scaled by 1.
        assert_eq!(g.n() * g.n(), 64);
        let mut ks: Vec<i64> = (0..8).map(|i| g.k_int(i)).collect();
        ks.sort_unstable();
        assert_eq!(ks, vec![-4, -3, -2, -1, 0, 1, 2, 3]);
        assert!((g.xi_1d(1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn min_nonzero_wavenumber() {
        let g: FourierGrid<f64> = FourierGrid::new(256, 256.0).unwrap();
        let expect = 2.0 * std::f64::consts::PI / 256.0;
        assert!((g.dxi() - expect).abs() < 1e-15);
        assert!((expect - 0.0245).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            FourierGrid::<f64>::new(10, 1.0),
            Err(Error::NotPowerOfTwo(10))
        ));
        assert!(matches!(
            FourierGrid::<f64>::new(4, 1.0),
            Err(Error::NotPowerOfTwo(4))
        ));
        assert!(matches!(
            FourierGrid::<f64>::new(16, 0.0),
            Err(Error::NonpositiveLength(_))
        ));
        assert!(matches!(
            FourierGrid::<f64>::new(16, -2.0),
            Err(Error::NonpositiveLength(_))
        ));
    }

    #[test]
    fn negation_symmetry_except_nyquist() {
        let g: FourierGrid<f64> = FourierGrid::new(16, 3.0).unwrap();
        for i in 0..16 {
            if i == 8 {
                assert!(g.is_nyquist(i, 0));
                continue;
            }
            let j = g.conj_index(i);
            assert_eq!(g.k_int(j), -g.k_int(i));
        }
    }
}
