//! Complex fields on the periodic box, stored on both sides of the Fourier
//! transform.
//!
//! Coefficients carry the continuum normalization
//! `spec[k] = (L/n)^2 * sum_x phys(x) exp(-i xi_k . x)`, i.e. they approximate
//! the Fourier transform of the box-periodic function at the lattice
//! wavenumber. With this convention Parseval reads
//! `||f||_2^2 = sum_k |spec[k]|^2 / L^2 = sum_x |phys(x)|^2 (L/n)^2`.
//!
//! Fields are immutable values: every operation returns a fresh field with
//! both representations consistent.

use num_complex::Complex;
use rand::Rng;

use crate::error::Result;
use crate::fft::fft2_inplace;
use crate::grid::FourierGrid;
use crate::scalar::{cis, Cplx, Real};

#[derive(Debug, Clone)]
pub struct SpectralField<T> {
    grid: FourierGrid<T>,
    phys: Vec<Cplx<T>>,
    spec: Vec<Cplx<T>>,
}

impl<T: Real> SpectralField<T> {
    /// The zero field.
    pub fn zero(grid: &FourierGrid<T>) -> Self {
        let n2 = grid.n() * grid.n();
        Self {
            grid: grid.clone(),
            phys: vec![Cplx::new(T::zero(), T::zero()); n2],
            spec: vec![Cplx::new(T::zero(), T::zero()); n2],
        }
    }

    /// Build from physical samples (row-major, `iy * n + ix`).
    pub fn from_samples(grid: &FourierGrid<T>, phys: Vec<Cplx<T>>) -> Self {
        assert_eq!(phys.len(), grid.n() * grid.n());
        let mut spec = phys.clone();
        fft2_inplace(&mut spec, grid.n(), true);
        let w = grid.dx() * grid.dx();
        for c in &mut spec {
            *c = c.scale(w);
        }
        Self { grid: grid.clone(), phys, spec }
    }

    /// Build from Fourier coefficients in continuum normalization.
    pub fn from_spec(grid: &FourierGrid<T>, spec: Vec<Cplx<T>>) -> Self {
        assert_eq!(spec.len(), grid.n() * grid.n());
        let mut phys = spec.clone();
        fft2_inplace(&mut phys, grid.n(), false);
        let w = (grid.length() * grid.length()).recip();
        for c in &mut phys {
            *c = c.scale(w);
        }
        Self { grid: grid.clone(), phys, spec }
    }

    /// Sample a function of the physical coordinate in `[0, L)^2`.
    pub fn from_fn(grid: &FourierGrid<T>, f: impl Fn([T; 2]) -> Cplx<T>) -> Self {
        let n = grid.n();
        let mut phys = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                phys.push(f(grid.x(ix, iy)));
            }
        }
        Self::from_samples(grid, phys)
    }

    /// Sample a function of the centered coordinate in `[-L/2, L/2)^2`.
    pub fn from_fn_centered(grid: &FourierGrid<T>, f: impl Fn([T; 2]) -> Cplx<T>) -> Self {
        let n = grid.n();
        let mut phys = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                phys.push(f(grid.x_centered(ix, iy)));
            }
        }
        Self::from_samples(grid, phys)
    }

    /// The exact plane wave `exp(i xi_k . x)` for an integer lattice mode.
    pub fn plane_wave(grid: &FourierGrid<T>, k: [i64; 2]) -> Self {
        let dxi = grid.dxi();
        let kx = T::of_i64(k[0]) * dxi;
        let ky = T::of_i64(k[1]) * dxi;
        Self::from_fn(grid, |x| cis(kx * x[0] + ky * x[1]))
    }

    /// Random band-limited complex field: independent unit-normal-ish
    /// coefficients on modes with `|k_int| <= kmax` per axis (Nyquist-free).
    pub fn random(grid: &FourierGrid<T>, kmax: i64, rng: &mut impl Rng) -> Self {
        let n = grid.n();
        let mut spec = vec![Cplx::new(T::zero(), T::zero()); n * n];
        for iy in 0..n {
            for ix in 0..n {
                let (kx, ky) = (grid.k_int(ix), grid.k_int(iy));
                if kx.abs() <= kmax && ky.abs() <= kmax && !grid.is_nyquist(ix, iy) {
                    let re: f64 = rng.gen_range(-1.0..1.0);
                    let im: f64 = rng.gen_range(-1.0..1.0);
                    spec[iy * n + ix] = Cplx::new(T::of(re), T::of(im));
                }
            }
        }
        Self::from_spec(grid, spec)
    }

    /// Random real-valued band-limited field (Hermitian coefficients).
    pub fn random_real(grid: &FourierGrid<T>, kmax: i64, rng: &mut impl Rng) -> Self {
        let f = Self::random(grid, kmax, rng);
        let phys = f.phys.iter().map(|c| Cplx::new(c.re, T::zero())).collect();
        Self::from_samples(grid, phys)
    }

    pub fn grid(&self) -> &FourierGrid<T> {
        &self.grid
    }

    pub fn phys(&self) -> &[Cplx<T>] {
        &self.phys
    }

    pub fn spec(&self) -> &[Cplx<T>] {
        &self.spec
    }

    pub fn spec_at(&self, ix: usize, iy: usize) -> Cplx<T> {
        self.spec[iy * self.grid.n() + ix]
    }

    /// Mean value over the box (zero mode / L^2).
    pub fn mean(&self) -> Cplx<T> {
        self.spec[0].scale((self.grid.length() * self.grid.length()).recip())
    }

    /// L^2 norm over the box, computed on the spectral side.
    pub fn l2(&self) -> T {
        let s: T = self.spec.iter().map(|c| c.norm_sqr()).sum();
        (s / (self.grid.length() * self.grid.length())).sqrt()
    }

    /// Max modulus over the physical samples.
    pub fn linf(&self) -> T {
        self.phys.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }

    /// Largest deviation from Hermitian symmetry, relative to the size of the
    /// coefficients. Zero for real-valued fields.
    pub fn hermitian_defect(&self) -> T {
        let n = self.grid.n();
        let scale = self.spec.iter().map(|c| c.norm()).fold(T::zero(), T::max);
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        for iy in 0..n {
            for ix in 0..n {
                let jx = self.grid.conj_index(ix);
                let jy = self.grid.conj_index(iy);
                let d = (self.spec[iy * n + ix] - self.spec[jy * n + jx].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }

    /// Largest imaginary part over the physical samples.
    pub fn max_imag(&self) -> T {
        self.phys.iter().map(|c| c.im.abs()).fold(T::zero(), T::max)
    }

    /// Apply a Fourier multiplier `m(xi)`; the Nyquist rows are zeroed
    /// afterwards to keep derivative multipliers symmetric.
    pub fn apply_multiplier(&self, m: impl Fn([T; 2], T) -> Cplx<T>) -> Self {
        let n = self.grid.n();
        let mut spec = self.spec.clone();
        for iy in 0..n {
            for ix in 0..n {
                let idx = iy * n + ix;
                if self.grid.is_nyquist(ix, iy) {
                    spec[idx] = Cplx::new(T::zero(), T::zero());
                } else {
                    let xi = self.grid.xi(ix, iy);
                    spec[idx] *= m(xi, self.grid.xi_abs(ix, iy));
                }
            }
        }
        Self::from_spec(&self.grid, spec)
    }

    /// `Lambda^alpha = |D|^alpha`; the zero mode maps to zero for
    /// `alpha != 0` (homogeneous multiplier convention on the torus).
    pub fn radial(&self, alpha: T) -> Self {
        self.apply_multiplier(|_, r| {
            if r == T::zero() {
                if alpha == T::zero() {
                    Complex::new(T::one(), T::zero())
                } else {
                    Complex::new(T::zero(), T::zero())
                }
            } else {
                Complex::new(r.powf(alpha), T::zero())
            }
        })
    }

    /// Half-wave propagator `exp(i t Lambda^{1/2})`; unitary on L^2.
    pub fn half_wave(&self, t: T) -> Self {
        self.apply_multiplier(|_, r| cis(t * r.sqrt()))
    }

    /// Partial derivative `d^a_x d^b_y`.
    pub fn partial(&self, a: u32, b: u32) -> Self {
        self.apply_multiplier(|xi, _| {
            let i = Cplx::new(T::zero(), T::one());
            (i * xi[0]).powu(a) * (i * xi[1]).powu(b)
        })
    }

    pub fn conj(&self) -> Self {
        let phys = self.phys.iter().map(|c| c.conj()).collect();
        Self::from_samples(&self.grid, phys)
    }

    pub fn real_part(&self) -> Self {
        let phys = self.phys.iter().map(|c| Cplx::new(c.re, T::zero())).collect();
        Self::from_samples(&self.grid, phys)
    }

    pub fn imag_part(&self) -> Self {
        let phys = self.phys.iter().map(|c| Cplx::new(c.im, T::zero())).collect();
        Self::from_samples(&self.grid, phys)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.same_shape(&other.grid)?;
        let spec = self.spec.iter().zip(&other.spec).map(|(a, b)| a + b).collect();
        Ok(Self::from_spec(&self.grid, spec))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.same_shape(&other.grid)?;
        let spec = self.spec.iter().zip(&other.spec).map(|(a, b)| a - b).collect();
        Ok(Self::from_spec(&self.grid, spec))
    }

    pub fn scale(&self, c: Cplx<T>) -> Self {
        let spec = self.spec.iter().map(|a| a * c).collect();
        Self::from_spec(&self.grid, spec)
    }

    pub fn scale_re(&self, c: T) -> Self {
        self.scale(Cplx::new(c, T::zero()))
    }

    /// Raw (aliased) pointwise product. Prefer the de-aliased products in
    /// `pseudo_product` for anything quantitative.
    pub fn mul_pointwise(&self, other: &Self) -> Result<Self> {
        self.grid.same_shape(&other.grid)?;
        let phys = self.phys.iter().zip(&other.phys).map(|(a, b)| a * b).collect();
        Ok(Self::from_samples(&self.grid, phys))
    }

    /// Complex L^2 pairing `int a conj(b) dx` via Parseval.
    pub fn inner(&self, other: &Self) -> Result<Cplx<T>> {
        self.grid.same_shape(&other.grid)?;
        let mut s = Cplx::new(T::zero(), T::zero());
        for (a, b) in self.spec.iter().zip(&other.spec) {
            s += a * b.conj();
        }
        Ok(s.scale((self.grid.length() * self.grid.length()).recip()))
    }

    /// True when any sample or coefficient is non-finite.
    pub fn has_non_finite(&self) -> bool {
        self.phys.iter().any(|c| !c.re.is_finite() || !c.im.is_finite())
            || self.spec.iter().any(|c| !c.re.is_finite() || !c.im.is_finite())
    }

    /// Relative L^2 distance, with the scale set by `self`.
    pub fn rel_l2_error(&self, other: &Self) -> T {
        let d = self.sub(other).expect("grids match").l2();
        let s = self.l2();
        if s == T::zero() {
            d
        } else {
            d / s
        }
    }
}
