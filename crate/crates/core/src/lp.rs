//! Littlewood-Paley projections on the lattice.
//!
//! The annulus bump is built from a single C-infinity cutoff `Phi` with
//! `Phi = 1` on `r <= 1` and `Phi = 0` on `r >= 4/3`:
//!
//! ```text
//! theta(r) = Phi(r / s) - Phi(2 r / s),   s = 7/4,
//! ```
//!
//! so `supp theta = (7/8, 7/3)`, strictly inside the annulus `C(0, 3/4, 8/3)`,
//! and the dyadic sum telescopes exactly: `sum_j theta(r / 2^j) = 1` for every
//! `r > 0`, while the low-pass profile comes out in closed form as
//! `Theta(r) = sum_{j<0} theta(r / 2^j) = Phi(2 r / s)`.

use crate::field::SpectralField;
use crate::grid::FourierGrid;
use crate::scalar::{Cplx, Real};

/// Scale factor of the bump (`s` above).
const BUMP_SCALE: f64 = 1.75;

fn smooth_step<T: Real>(t: T) -> T {
    // g(t) = exp(-1/t) glued at 0; S = g(t) / (g(t) + g(1-t)).
    let g = |x: T| {
        if x <= T::zero() {
            T::zero()
        } else {
            (-x.recip()).exp()
        }
    };
    let a = g(t);
    let b = g(T::one() - t);
    if a == T::zero() && b == T::zero() {
        return if t > T::of(0.5) { T::one() } else { T::zero() };
    }
    a / (a + b)
}

/// C-infinity cutoff: 1 on `r <= 1`, 0 on `r >= 4/3`.
fn phi_cutoff<T: Real>(r: T) -> T {
    let hi = T::of(4.0 / 3.0);
    if r <= T::one() {
        T::one()
    } else if r >= hi {
        T::zero()
    } else {
        smooth_step((hi - r) * T::of(3.0))
    }
}

/// The annulus bump `theta`, supported in `(7/8, 7/3)`.
pub fn theta_bump<T: Real>(r: T) -> T {
    let s = T::of(BUMP_SCALE);
    phi_cutoff(r / s) - phi_cutoff(r * T::of(2.0) / s)
}

/// The low-pass profile `Theta(r) = sum_{j<0} theta(r/2^j) = Phi(2r/s)`,
/// equal to 1 at `r = 0`.
pub fn big_theta<T: Real>(r: T) -> T {
    phi_cutoff(r * T::of(2.0) / T::of(BUMP_SCALE))
}

/// Projection selector: `P_j`, `P_{<j}`, `P_{<=j}`, `P_{>j}`, `P_{>=j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpSelector {
    At(i32),
    Below(i32),
    BelowEq(i32),
    Above(i32),
    AboveEq(i32),
}

/// Dyadic decomposition bound to a grid, with the active scale range implied
/// by the resolution and the box size.
#[derive(Debug, Clone)]
pub struct LittlewoodPaleyBank<T> {
    grid: FourierGrid<T>,
    jmin: i32,
    jmax: i32,
}

impl<T: Real> LittlewoodPaleyBank<T> {
    pub fn new(grid: &FourierGrid<T>) -> Self {
        let ximin = grid.dxi().to_f64().unwrap();
        let ximax = grid.xi_max().to_f64().unwrap();
        // theta(xi/2^j) != 0 requires 2^j in (xi * 3/7, xi * 8/7).
        let jmin = (ximin * 3.0 / 7.0).log2().floor() as i32;
        let jmax = (ximax * 8.0 / 7.0).log2().ceil() as i32;
        Self { grid: grid.clone(), jmin, jmax }
    }

    pub fn grid(&self) -> &FourierGrid<T> {
        &self.grid
    }

    /// Scales on which `P_j` can be nonzero for this lattice.
    pub fn active_scales(&self) -> std::ops::RangeInclusive<i32> {
        self.jmin..=self.jmax
    }

    /// Scalar multiplier value of a selector at radius `r = |xi|`.
    pub fn multiplier(&self, sel: LpSelector, r: T) -> T {
        let dyadic = |j: i32| T::of(2.0f64.powi(j));
        match sel {
            LpSelector::At(j) => theta_bump(r / dyadic(j)),
            LpSelector::Below(j) => big_theta(r / dyadic(j)),
            LpSelector::BelowEq(j) => big_theta(r / dyadic(j + 1)),
            LpSelector::AboveEq(j) => T::one() - big_theta(r / dyadic(j)),
            LpSelector::Above(j) => T::one() - big_theta(r / dyadic(j + 1)),
        }
    }

    /// Apply the selector as a Fourier multiplier.
    pub fn project(&self, f: &SpectralField<T>, sel: LpSelector) -> SpectralField<T> {
        f.apply_multiplier(|_, r| Cplx::new(self.multiplier(sel, r), T::zero()))
    }

    /// Shorthand for `P_j`.
    pub fn p_at(&self, f: &SpectralField<T>, j: i32) -> SpectralField<T> {
        self.project(f, LpSelector::At(j))
    }

    /// Shorthand for `P_{<j}`.
    pub fn p_below(&self, f: &SpectralField<T>, j: i32) -> SpectralField<T> {
        self.project(f, LpSelector::Below(j))
    }

    /// Worst deviation of `sum_j theta(xi/2^j)` from 1 over nonzero lattice
    /// points (Nyquist rows excluded).
    pub fn partition_defect(&self) -> T {
        let n = self.grid.n();
        let mut worst = T::zero();
        for iy in 0..n {
            for ix in 0..n {
                if (ix, iy) == (0, 0) || self.grid.is_nyquist(ix, iy) {
                    continue;
                }
                let r = self.grid.xi_abs(ix, iy);
                let mut s = T::zero();
                for j in self.jmin..=self.jmax {
                    s += self.multiplier(LpSelector::At(j), r);
                }
                worst = worst.max((s - T::one()).abs());
            }
        }
        worst
    }
}
