//! Periodized power-law kernels on the box lattice.
//!
//! The single-layer machinery needs lattice sums of `|a + mL|^{-p}` (and the
//! vector variants `(a+mL)_c |a+mL|^{-p}`) over the image lattice `m` in Z^2.
//! Images with `|m|_inf <= M` are summed directly; the remainder comes from
//! the closed-form lattice constants
//!
//! ```text
//! sum_{m != 0} |m|^{-p} = 4 zeta(p/2) beta(p/2)
//! ```
//!
//! together with the multipole tail corrections
//!
//! ```text
//! sum_{|m|>M} |a+mL|^{-p}     = S_p + (p^2/4) |a|^2 S_{p+2} + O(|a|^4 S_{p+4})
//! sum_{|m|>M} (a+mL)_c |a+mL|^{-p} = (1 - p/2) a_c S_p + O(|a|^3 S_{p+2})
//! ```
//!
//! where `S_p = sum_{|m|_inf > M} |mL|^{-p}`. With `M = 64` the neglected
//! terms sit below 1e-6 of the kernel scale for every exponent used here.

use rayon::prelude::*;

use crate::field::SpectralField;
use crate::grid::FourierGrid;
use crate::scalar::{Cplx, Real};

/// Images per side kept in the direct sum. The analytic tails keep the
/// truncation error near 1e-5 of the kernel scale at the box edge, well
/// below the quadrature budget of the sweep studies.
pub const IMAGE_RADIUS: i64 = 32;

/// Riemann zeta on `s > 1` by Euler-Maclaurin (double precision).
pub fn zeta(s: f64) -> f64 {
    let n = 64usize;
    let mut sum: f64 = (1..n).map(|k| (k as f64).powf(-s)).sum();
    let nf = n as f64;
    sum += nf.powf(1.0 - s) / (s - 1.0);
    sum += 0.5 * nf.powf(-s);
    // Bernoulli corrections B2/2!, B4/4!, B6/6!
    let mut term = s * nf.powf(-s - 1.0);
    sum += term / 12.0;
    term *= (s + 1.0) * (s + 2.0) / (nf * nf);
    sum -= term / 720.0;
    term *= (s + 3.0) * (s + 4.0) / (nf * nf);
    sum += term / 30240.0;
    sum
}

/// Dirichlet beta on `s > 0` via alternating-series acceleration
/// (Cohen-Rodriguez Villegas-Zagier).
pub fn dirichlet_beta(s: f64) -> f64 {
    let n = 48usize;
    let mut d = (3.0 + 8.0f64.sqrt()).powi(n as i32);
    d = 0.5 * (d + 1.0 / d);
    let mut b = -1.0;
    let mut c = -d;
    let mut sum = 0.0;
    for k in 0..n {
        c = b - c;
        sum += c * (2.0 * k as f64 + 1.0).powf(-s);
        let kf = k as f64;
        b *= (kf + n as f64) * (kf - n as f64) / ((kf + 0.5) * (kf + 1.0));
    }
    sum / d
}

/// `sum_{m in Z^2, m != 0} |m|^{-p}` (Lorenz-Hardy factorization).
pub fn lattice_constant(p: f64) -> f64 {
    4.0 * zeta(p / 2.0) * dirichlet_beta(p / 2.0)
}

/// `S_p(M) = sum_{|m|_inf > M} |m L|^{-p}`.
pub fn tail_constant(p: f64, m_box: i64, length: f64) -> f64 {
    let mut inside = 0.0;
    for my in -m_box..=m_box {
        for mx in -m_box..=m_box {
            if (mx, my) == (0, 0) {
                continue;
            }
            inside += ((mx * mx + my * my) as f64).powf(-p / 2.0);
        }
    }
    (lattice_constant(p) - inside) * length.powf(-p)
}

/// Smooth step: 0 at `t <= 0`, 1 at `t >= 1`, C-infinity in between.
pub fn smooth_step(t: f64) -> f64 {
    let g = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
    let a = g(t);
    let b = g(1.0 - t);
    if a + b == 0.0 {
        return if t > 0.5 { 1.0 } else { 0.0 };
    }
    a / (a + b)
}

/// Radial split of the quadrature: the near patch (full kernel, polar
/// quadrature) lives in `r < r2`; the far part (tabulated, FFT convolution)
/// carries the complement `1 - chi_near = chi_far`.
#[derive(Debug, Clone, Copy)]
pub struct KernelSplit {
    pub r1: f64,
    pub r2: f64,
}

impl KernelSplit {
    /// Transition band: at least 4 grid cells wide so the singular region is
    /// fully handled by the patch, but never smaller than a fixed fraction
    /// of the box (which keeps the far-field expansion ratio
    /// `(2 max|h| / r1)^2` small on fine grids) and never wrapping the box.
    pub fn for_grid<T: Real>(grid: &FourierGrid<T>) -> Self {
        let dx = grid.dx().to_f64().unwrap();
        let l = grid.length().to_f64().unwrap();
        let r2 = (12.0 * dx).max(0.1875 * l).min(0.4 * l);
        Self { r1: r2 / 3.0, r2 }
    }

    /// 1 on the near side (`r <= r1`), 0 on the far side (`r >= r2`).
    pub fn chi_near(&self, r: f64) -> f64 {
        smooth_step((self.r2 - r) / (self.r2 - self.r1))
    }

    pub fn chi_far(&self, r: f64) -> f64 {
        1.0 - self.chi_near(r)
    }
}

/// Which tabulated kernel: `chi_far(a) |a|^{-p}` or its vector companion
/// `chi_far(a) a_c |a|^{-p}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Scalar { p: u32 },
    Vector { p: u32, component: usize },
}

/// Periodized kernel sampled on the offset lattice, stored spectrally so that
/// applying it is one coefficient product (`conv(k, g) = F^{-1}[k^ g^]` in
/// this crate's normalization).
pub struct KernelTable<T> {
    pub kind: KernelKind,
    pub field: SpectralField<T>,
}

fn kernel_value(kind: KernelKind, split: &KernelSplit, length: f64, ax: f64, ay: f64) -> f64 {
    let mut acc = 0.0;
    let m = IMAGE_RADIUS;
    for my in -m..=m {
        for mx in -m..=m {
            let wx = ax + mx as f64 * length;
            let wy = ay + my as f64 * length;
            let r = (wx * wx + wy * wy).sqrt();
            if r < split.r1 {
                continue; // chi_far = 0 there (also guards a = 0)
            }
            let chi = split.chi_far(r);
            if chi == 0.0 {
                continue;
            }
            match kind {
                KernelKind::Scalar { p } => acc += chi * r.powi(-(p as i32)),
                KernelKind::Vector { p, component } => {
                    let w = if component == 0 { wx } else { wy };
                    acc += chi * w * r.powi(-(p as i32));
                }
            }
        }
    }
    // Analytic tails beyond the direct images.
    let a2 = ax * ax + ay * ay;
    match kind {
        KernelKind::Scalar { p } => {
            let pf = p as f64;
            let s_p = tail_constant(pf, m, length);
            let s_p2 = tail_constant(pf + 2.0, m, length);
            acc += s_p + 0.25 * pf * pf * a2 * s_p2;
        }
        KernelKind::Vector { p, component } => {
            let pf = p as f64;
            let s_p = tail_constant(pf, m, length);
            let a = if component == 0 { ax } else { ay };
            acc += (1.0 - 0.5 * pf) * a * s_p;
        }
    }
    acc
}

impl<T: Real> KernelTable<T> {
    pub fn build(grid: &FourierGrid<T>, split: &KernelSplit, kind: KernelKind) -> Self {
        let n = grid.n();
        let dx = grid.dx().to_f64().unwrap();
        let length = grid.length().to_f64().unwrap();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|iy| {
                let ay = centered_offset(iy, n) * dx;
                (0..n)
                    .map(|ix| {
                        let ax = centered_offset(ix, n) * dx;
                        kernel_value(kind, split, length, ax, ay)
                    })
                    .collect()
            })
            .collect();
        let mut phys = Vec::with_capacity(n * n);
        for row in rows {
            for v in row {
                phys.push(Cplx::new(T::of(v), T::zero()));
            }
        }
        Self { kind, field: SpectralField::from_samples(grid, phys) }
    }

    /// `conv(k, g)(x) = sum_y k(x - y) g(y) dx^2`, exact on the lattice.
    pub fn convolve(&self, g: &SpectralField<T>) -> SpectralField<T> {
        let spec: Vec<Cplx<T>> = self
            .field
            .spec()
            .iter()
            .zip(g.spec())
            .map(|(a, b)| a * b)
            .collect();
        SpectralField::from_spec(g.grid(), spec)
    }
}

fn centered_offset(i: usize, n: usize) -> f64 {
    if i < n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}
