//! Normal-form objects: the quadratic boundary term produced by the
//! time integration by parts, the homogeneous cutoff splitting, and the
//! weakly-resonant cubic integrands with their norms.
//!
//! The boundary term is
//!
//! ```text
//! g1^(t, xi) = int e^{i t phi(xi,eta)} mu(xi,eta) f^(t,eta) f^(t,xi-eta) deta,
//! mu = m_l / (i phi),
//! ```
//!
//! evaluated as a bilinear pseudo-product with the symbol split into the
//! `chi mu` and `(1-chi) mu` pieces, where `chi` is 0 near `{eta = 0}` and 1
//! near `{xi - eta = 0}` on the sphere.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::pseudo_product::{BilinearOperator, BilinearSymbolFn, TrilinearOperator, TrilinearSymbolFn};
use crate::resonance::{classify_cubic_phase, PhaseStrength};
use crate::scalar::{cis, norm2, sub2, Real};
use crate::symbols::{
    eval_quadratic, normal_form_multiplier, phase2, phase3, Pattern2, Pattern3, QuadSymbol,
};

/// Angular transition of the cutoff, in `theta = arctan(|eta| / |xi-eta|)`:
/// `chi = 0` for `theta <= pi/8`, `1` for `theta >= 3 pi/8`. The width
/// `pi/4 = pi/2 - 2 (pi/8)` makes the swap `eta <-> xi - eta` map `chi` to
/// `1 - chi` exactly.
const CHI_LOW: f64 = std::f64::consts::PI / 8.0;
const CHI_HIGH: f64 = 3.0 * std::f64::consts::PI / 8.0;

/// Homogeneous degree-0 cutoff pair `(chi, 1 - chi)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CutoffPair;

impl CutoffPair {
    /// `chi(xi, eta)`, valued in [0,1], 0 near `{eta=0}`, 1 near
    /// `{xi-eta=0}`.
    pub fn chi<T: Real>(&self, xi: [T; 2], eta: [T; 2]) -> T {
        let num = norm2(eta);
        let den = norm2(sub2(xi, eta));
        if num == T::zero() && den == T::zero() {
            return T::of(0.5);
        }
        let theta = num.atan2(den); // arctan(|eta| / |xi-eta|) in [0, pi/2]
        let t = (theta - T::of(CHI_LOW)) / T::of(CHI_HIGH - CHI_LOW);
        smooth01(t)
    }

    pub fn complement<T: Real>(&self, xi: [T; 2], eta: [T; 2]) -> T {
        T::one() - self.chi(xi, eta)
    }
}

fn smooth01<T: Real>(t: T) -> T {
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

/// Split a bilinear symbol into its `chi` and `1 - chi` pieces.
pub fn chi_split<T: Real>(symbol: BilinearSymbolFn<T>) -> (BilinearSymbolFn<T>, BilinearSymbolFn<T>) {
    let cutoff = CutoffPair;
    let s1 = symbol.clone();
    let near: BilinearSymbolFn<T> = Arc::new(move |xi, eta| {
        let v = s1(xi, eta)?;
        Ok(v.scale(cutoff.chi(xi, eta)))
    });
    let far: BilinearSymbolFn<T> = Arc::new(move |xi, eta| {
        let v = symbol(xi, eta)?;
        Ok(v.scale(cutoff.complement(xi, eta)))
    });
    (near, far)
}

/// The symbol `e^{i t phi} mu chi` (or its complement) as a closure.
fn boundary_symbol<T: Real>(
    l: QuadSymbol,
    pattern: Pattern2,
    t: T,
    use_chi: bool,
) -> BilinearSymbolFn<T> {
    let cutoff = CutoffPair;
    Arc::new(move |xi, eta| {
        let mu = normal_form_multiplier(l, pattern, xi, eta)?;
        let phi = phase2(pattern, xi, eta);
        let w = if use_chi { cutoff.chi(xi, eta) } else { cutoff.complement(xi, eta) };
        Ok(mu * cis(t * phi).scale(w))
    })
}

/// The full quadratic boundary term at one time slice, computed as the sum
/// of the `mu chi` and `mu (1-chi)` pseudo-products of the profile with
/// itself.
pub fn quadratic_boundary_term<T: Real>(
    profile: &SpectralField<T>,
    t: T,
    l: QuadSymbol,
    pattern: Pattern2,
) -> Result<SpectralField<T>> {
    let near = BilinearOperator::general(boundary_symbol(l, pattern, t, true));
    let far = BilinearOperator::general(boundary_symbol(l, pattern, t, false));
    let a = near.apply(profile, profile)?;
    let b = far.apply(profile, profile)?;
    a.add(&b)
}

/// One `chi`-piece only (for the symmetry diagnostics).
pub fn quadratic_boundary_piece<T: Real>(
    profile: &SpectralField<T>,
    t: T,
    l: QuadSymbol,
    pattern: Pattern2,
    use_chi: bool,
) -> Result<SpectralField<T>> {
    let op = BilinearOperator::general(boundary_symbol(l, pattern, t, use_chi));
    op.apply(profile, profile)
}

/// Norms attached to a weakly-resonant cubic slice.
#[derive(Debug, Clone, Copy)]
pub struct IntegrandNorms<T> {
    pub l2: T,
    pub linf: T,
    pub h2: T,
}

/// One time slice of the weakly-resonant cubic integrand: the trilinear
/// pseudo-product with the flag symbol
/// `e^{i s phi3} [m_l(xi,eta) / (i phi2(xi,eta))] m_j(xi-eta, sigma)`.
///
/// Errors on strongly resonant cubic patterns (their treatment is geometric,
/// not a normal form) and propagates the trilinear cost guard.
pub fn weak_cubic_integrand<T: Real>(
    profile: &SpectralField<T>,
    s: T,
    pattern3: Pattern3,
    l: QuadSymbol,
    pattern2: Pattern2,
    j: QuadSymbol,
) -> Result<(SpectralField<T>, IntegrandNorms<T>)> {
    if classify_cubic_phase(pattern3) == PhaseStrength::StronglyResonant {
        return Err(Error::InvalidParameter(format!(
            "pattern {pattern3:?} is strongly resonant; the weak-cubic normal form does not apply"
        )));
    }
    let symbol: TrilinearSymbolFn<T> = Arc::new(move |xi, eta, sigma| {
        let mu = normal_form_multiplier(l, pattern2, xi, eta)?;
        let mj = eval_quadratic(j, sub2(xi, eta), sigma)?;
        let phi = phase3(pattern3, xi, eta, sigma);
        Ok(mu * mj * cis(s * phi))
    });
    let op = TrilinearOperator::general(symbol);
    let field = op.apply(profile, profile, profile)?;
    let norms = IntegrandNorms {
        l2: field.l2(),
        linf: field.linf(),
        h2: crate::norms::sobolev_hn(&field, T::of(2.0)),
    };
    Ok((field, norms))
}
