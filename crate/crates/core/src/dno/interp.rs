//! Spectrally upsampled fields with periodic bicubic interpolation, used to
//! evaluate surface quantities at polar quadrature nodes.

use crate::field::SpectralField;
use crate::grid::FourierGrid;
use crate::scalar::{Cplx, Real};

/// A real field resampled on a `U n x U n` grid by zero-padded inverse FFT,
/// interpolated with the Keys cubic-convolution kernel.
pub struct Upsampled<T> {
    n_up: usize,
    length: f64,
    values: Vec<T>,
}

/// Upsampling factor used by the quadrature patches.
pub const UPSAMPLE: usize = 4;

impl<T: Real> Upsampled<T> {
    pub fn new(f: &SpectralField<T>) -> Self {
        let grid = f.grid();
        let n = grid.n();
        let n_up = n * UPSAMPLE;
        let fine = FourierGrid::<T>::new(n_up, grid.length()).expect("upsampled grid");
        let mut spec = vec![Cplx::new(T::zero(), T::zero()); n_up * n_up];
        for iy in 0..n {
            for ix in 0..n {
                if grid.is_nyquist(ix, iy) {
                    continue;
                }
                let kx = grid.k_int(ix);
                let ky = grid.k_int(iy);
                let jx = if kx >= 0 { kx as usize } else { (kx + n_up as i64) as usize };
                let jy = if ky >= 0 { ky as usize } else { (ky + n_up as i64) as usize };
                spec[jy * n_up + jx] = f.spec()[iy * n + ix];
            }
        }
        let fine_field = SpectralField::from_spec(&fine, spec);
        let values = fine_field.phys().iter().map(|c| c.re).collect();
        Self { n_up, length: grid.length().to_f64().unwrap(), values }
    }

    fn keys(t: f64) -> [f64; 4] {
        // Cubic convolution weights (a = -1/2) for fractional offset t.
        let t2 = t * t;
        let t3 = t2 * t;
        [
            -0.5 * t3 + t2 - 0.5 * t,
            1.5 * t3 - 2.5 * t2 + 1.0,
            -1.5 * t3 + 2.0 * t2 + 0.5 * t,
            0.5 * t3 - 0.5 * t2,
        ]
    }

    /// Interpolate at a physical point (periodic wrap).
    pub fn at(&self, x: f64, y: f64) -> T {
        let h = self.length / self.n_up as f64;
        let fx = x / h;
        let fy = y / h;
        let ix = fx.floor();
        let iy = fy.floor();
        let wx = Self::keys(fx - ix);
        let wy = Self::keys(fy - iy);
        let n = self.n_up as i64;
        let wrap = |i: i64| -> usize {
            let r = i.rem_euclid(n);
            r as usize
        };
        let mut acc = 0.0f64;
        for (dy, wyv) in wy.iter().enumerate() {
            let row = wrap(iy as i64 + dy as i64 - 1) * self.n_up;
            let mut racc = 0.0f64;
            for (dx, wxv) in wx.iter().enumerate() {
                let v = self.values[row + wrap(ix as i64 + dx as i64 - 1)];
                racc += wxv * v.to_f64().unwrap();
            }
            acc += wyv * racc;
        }
        T::of(acc)
    }
}
