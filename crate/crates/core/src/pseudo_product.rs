//! Bilinear and trilinear Fourier multipliers, paraproduct decomposition,
//! dyadic model operators and empirical bound probes.
//!
//! Quadrature is the exact discrete convolution on the truncated lattice:
//! 2/3-rule cut for quadratic products, 1/2-rule cut for cubic ones, so the
//! `m = 1` operators reproduce de-aliased pointwise products to roundoff.
//! Symbols are sampled at lattice points; singular-locus hits contribute
//! zero weight (sets of measure zero).
//!
//! Conventions (continuum form):
//!
//! ```text
//! B_m(f1,f2)    = F^{-1} int m(xi,eta) f1^(eta) f2^(xi-eta) deta
//! B_m(f1,f2,f3) = F^{-1} int m(xi,eta,sigma) f1^(sigma) f2^(eta)
//!                                        f3^(xi-eta-sigma) deta dsigma
//! ```
//!
//! with the lattice measure folded in so that `B_1` is exactly the de-aliased
//! product.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lp::LittlewoodPaleyBank;
use crate::scalar::{Cplx, Real};

/// Default trilinear cost-guard cap (O(n^6) above this needs an override).
pub const TRILINEAR_SIZE_CAP: usize = 64;

/// Per-axis 2/3-rule cutoff: keep integer modes `|k| <= cut`.
pub fn quad_cut(n: usize) -> i64 {
    ((n - 1) / 3) as i64
}

/// Per-axis 1/2-rule cutoff for triple products.
pub fn cubic_cut(n: usize) -> i64 {
    ((n - 1) / 4) as i64
}

fn truncate<T: Real>(f: &SpectralField<T>, cut: i64) -> SpectralField<T> {
    let n = f.grid().n();
    let mut spec = f.spec().to_vec();
    for iy in 0..n {
        for ix in 0..n {
            let keep = f.grid().k_int(ix).abs() <= cut && f.grid().k_int(iy).abs() <= cut;
            if !keep {
                spec[iy * n + ix] = Cplx::new(T::zero(), T::zero());
            }
        }
    }
    SpectralField::from_spec(f.grid(), spec)
}

/// 2/3-rule truncation.
pub fn dealias2<T: Real>(f: &SpectralField<T>) -> SpectralField<T> {
    truncate(f, quad_cut(f.grid().n()))
}

/// De-aliased product of two fields: truncate, multiply, truncate. Equal to
/// the exact linear convolution of the truncated spectra on the kept modes.
pub fn mul_dealiased<T: Real>(
    f: &SpectralField<T>,
    g: &SpectralField<T>,
) -> Result<SpectralField<T>> {
    f.grid().same_shape(g.grid())?;
    let cut = quad_cut(f.grid().n());
    let p = truncate(f, cut).mul_pointwise(&truncate(g, cut))?;
    Ok(truncate(&p, cut))
}

/// De-aliased triple product under the 1/2 rule.
pub fn mul_dealiased3<T: Real>(
    f: &SpectralField<T>,
    g: &SpectralField<T>,
    h: &SpectralField<T>,
) -> Result<SpectralField<T>> {
    f.grid().same_shape(g.grid())?;
    f.grid().same_shape(h.grid())?;
    let cut = cubic_cut(f.grid().n());
    let p = truncate(f, cut)
        .mul_pointwise(&truncate(g, cut))?
        .mul_pointwise(&truncate(h, cut))?;
    Ok(truncate(&p, cut))
}

/// A bilinear symbol: closed form on frequency pairs, `Err` on its singular
/// locus (those lattice points contribute zero).
pub type BilinearSymbolFn<T> = Arc<dyn Fn([T; 2], [T; 2]) -> Result<Cplx<T>> + Send + Sync>;

/// A trilinear symbol on `(xi, eta, sigma)`.
pub type TrilinearSymbolFn<T> = Arc<dyn Fn([T; 2], [T; 2], [T; 2]) -> Result<Cplx<T>> + Send + Sync>;

/// Radial-ish factor for separable symbols: a function of one frequency.
pub type MultiplierFn<T> = Arc<dyn Fn([T; 2], T) -> Cplx<T> + Send + Sync>;

pub enum BilinearSymbol<T> {
    /// `m = const` (the de-aliased product).
    Constant(Cplx<T>),
    /// `m(xi,eta) = a(eta) b(xi-eta) c(xi)`: evaluated as
    /// `c(D)[(a(D) f) (b(D) g)]`.
    Separable { a: MultiplierFn<T>, b: MultiplierFn<T>, c: MultiplierFn<T> },
    /// Arbitrary symbol, evaluated by the exact double sum.
    General(BilinearSymbolFn<T>),
}

pub enum TrilinearSymbol<T> {
    Constant(Cplx<T>),
    /// `m = a(sigma) b(eta) c(xi-eta-sigma) d(xi)`.
    Separable {
        a: MultiplierFn<T>,
        b: MultiplierFn<T>,
        c: MultiplierFn<T>,
        d: MultiplierFn<T>,
    },
    General(TrilinearSymbolFn<T>),
}

/// Bilinear pseudo-product operator.
pub struct BilinearOperator<T> {
    pub symbol: BilinearSymbol<T>,
    /// Optional cap on `|eta|` in the quadrature.
    pub truncation: Option<T>,
}

impl<T: Real> BilinearOperator<T> {
    pub fn constant_one() -> Self {
        Self { symbol: BilinearSymbol::Constant(Cplx::new(T::one(), T::zero())), truncation: None }
    }

    pub fn general(f: BilinearSymbolFn<T>) -> Self {
        Self { symbol: BilinearSymbol::General(f), truncation: None }
    }

    pub fn apply(&self, f: &SpectralField<T>, g: &SpectralField<T>) -> Result<SpectralField<T>> {
        f.grid().same_shape(g.grid())?;
        match &self.symbol {
            BilinearSymbol::Constant(c) => Ok(mul_dealiased(f, g)?.scale(*c)),
            BilinearSymbol::Separable { a, b, c } => {
                let fa = f.apply_multiplier(|xi, r| a(xi, r));
                let gb = g.apply_multiplier(|xi, r| b(xi, r));
                Ok(mul_dealiased(&fa, &gb)?.apply_multiplier(|xi, r| c(xi, r)))
            }
            BilinearSymbol::General(m) => self.apply_general(m, f, g),
        }
    }

    fn apply_general(
        &self,
        m: &BilinearSymbolFn<T>,
        f: &SpectralField<T>,
        g: &SpectralField<T>,
    ) -> Result<SpectralField<T>> {
        let grid = f.grid();
        let n = grid.n();
        let cut = quad_cut(n);
        let side = (2 * cut + 1) as usize;
        let dxi = grid.dxi();
        // Dense centered tables of the truncated input spectra.
        let centered = |field: &SpectralField<T>| -> Vec<Cplx<T>> {
            let mut out = vec![Cplx::new(T::zero(), T::zero()); side * side];
            for iy in 0..n {
                for ix in 0..n {
                    let (kx, ky) = (grid.k_int(ix), grid.k_int(iy));
                    if kx.abs() <= cut && ky.abs() <= cut {
                        out[((ky + cut) as usize) * side + (kx + cut) as usize] =
                            field.spec()[iy * n + ix];
                    }
                }
            }
            out
        };
        let fhat = centered(f);
        let ghat = centered(g);
        let l2 = grid.length() * grid.length();
        let rows: Vec<Vec<Cplx<T>>> = (-cut..=cut)
            .into_par_iter()
            .map(|qy| {
                let mut row = vec![Cplx::new(T::zero(), T::zero()); side];
                for qx in -cut..=cut {
                    let xi = [T::of_i64(qx) * dxi, T::of_i64(qy) * dxi];
                    let mut acc = Cplx::new(T::zero(), T::zero());
                    for ky in -cut..=cut {
                        let ry = qy - ky;
                        if ry.abs() > cut {
                            continue;
                        }
                        for kx in -cut..=cut {
                            let rx = qx - kx;
                            if rx.abs() > cut {
                                continue;
                            }
                            let fv = fhat[((ky + cut) as usize) * side + (kx + cut) as usize];
                            if fv.norm_sqr() == T::zero() {
                                continue;
                            }
                            let gv = ghat[((ry + cut) as usize) * side + (rx + cut) as usize];
                            if gv.norm_sqr() == T::zero() {
                                continue;
                            }
                            let eta = [T::of_i64(kx) * dxi, T::of_i64(ky) * dxi];
                            if let Some(rad) = self.truncation {
                                if (eta[0] * eta[0] + eta[1] * eta[1]).sqrt() > rad {
                                    continue;
                                }
                            }
                            if let Ok(mv) = m(xi, eta) {
                                acc += mv * fv * gv;
                            }
                        }
                    }
                    row[(qx + cut) as usize] = acc.scale(l2.recip());
                }
                row
            })
            .collect();
        let mut spec = vec![Cplx::new(T::zero(), T::zero()); n * n];
        for iy in 0..n {
            for ix in 0..n {
                let (kx, ky) = (grid.k_int(ix), grid.k_int(iy));
                if kx.abs() <= cut && ky.abs() <= cut {
                    spec[iy * n + ix] =
                        rows[(ky + cut) as usize][(kx + cut) as usize];
                }
            }
        }
        Ok(SpectralField::from_spec(grid, spec))
    }
}

/// Trilinear pseudo-product operator.
pub struct TrilinearOperator<T> {
    pub symbol: TrilinearSymbol<T>,
    /// Optional cap on `|eta|` and `|sigma|`.
    pub truncation: Option<T>,
    /// Accept grids above [`TRILINEAR_SIZE_CAP`] despite the O(n^6) cost.
    pub allow_large: bool,
}

impl<T: Real> TrilinearOperator<T> {
    pub fn constant_one() -> Self {
        Self {
            symbol: TrilinearSymbol::Constant(Cplx::new(T::one(), T::zero())),
            truncation: None,
            allow_large: false,
        }
    }

    pub fn general(f: TrilinearSymbolFn<T>) -> Self {
        Self { symbol: TrilinearSymbol::General(f), truncation: None, allow_large: false }
    }

    /// `B(f1,f2,f3)` with the Fourier arguments `f1^(sigma) f2^(eta)
    /// f3^(xi-eta-sigma)`.
    pub fn apply(
        &self,
        f1: &SpectralField<T>,
        f2: &SpectralField<T>,
        f3: &SpectralField<T>,
    ) -> Result<SpectralField<T>> {
        f1.grid().same_shape(f2.grid())?;
        f1.grid().same_shape(f3.grid())?;
        match &self.symbol {
            TrilinearSymbol::Constant(c) => Ok(mul_dealiased3(f1, f2, f3)?.scale(*c)),
            TrilinearSymbol::Separable { a, b, c, d } => {
                let fa = f1.apply_multiplier(|xi, r| a(xi, r));
                let gb = f2.apply_multiplier(|xi, r| b(xi, r));
                let hc = f3.apply_multiplier(|xi, r| c(xi, r));
                Ok(mul_dealiased3(&fa, &gb, &hc)?.apply_multiplier(|xi, r| d(xi, r)))
            }
            TrilinearSymbol::General(m) => {
                let n = f1.grid().n();
                if n > TRILINEAR_SIZE_CAP && !self.allow_large {
                    return Err(Error::CostGuard { n, cap: TRILINEAR_SIZE_CAP });
                }
                self.apply_general(m, f1, f2, f3)
            }
        }
    }

    fn apply_general(
        &self,
        m: &TrilinearSymbolFn<T>,
        f1: &SpectralField<T>,
        f2: &SpectralField<T>,
        f3: &SpectralField<T>,
    ) -> Result<SpectralField<T>> {
        let grid = f1.grid();
        let n = grid.n();
        let cut = cubic_cut(n);
        let side = (2 * cut + 1) as usize;
        let dxi = grid.dxi();
        let centered = |field: &SpectralField<T>| -> Vec<Cplx<T>> {
            let mut out = vec![Cplx::new(T::zero(), T::zero()); side * side];
            for iy in 0..n {
                for ix in 0..n {
                    let (kx, ky) = (grid.k_int(ix), grid.k_int(iy));
                    if kx.abs() <= cut && ky.abs() <= cut {
                        out[((ky + cut) as usize) * side + (kx + cut) as usize] =
                            field.spec()[iy * n + ix];
                    }
                }
            }
            out
        };
        let f1hat = centered(f1);
        let f2hat = centered(f2);
        let f3hat = centered(f3);
        let l4 = (grid.length() * grid.length()).powi(2);
        let radius_ok = |v: [T; 2]| match self.truncation {
            Some(rad) => (v[0] * v[0] + v[1] * v[1]).sqrt() <= rad,
            None => true,
        };
        let rows: Vec<Vec<Cplx<T>>> = (-cut..=cut)
            .into_par_iter()
            .map(|qy| {
                let mut row = vec![Cplx::new(T::zero(), T::zero()); side];
                for qx in -cut..=cut {
                    let xi = [T::of_i64(qx) * dxi, T::of_i64(qy) * dxi];
                    let mut acc = Cplx::new(T::zero(), T::zero());
                    for sy in -cut..=cut {
                        for sx in -cut..=cut {
                            let f1v = f1hat[((sy + cut) as usize) * side + (sx + cut) as usize];
                            if f1v.norm_sqr() == T::zero() {
                                continue;
                            }
                            let sigma = [T::of_i64(sx) * dxi, T::of_i64(sy) * dxi];
                            if !radius_ok(sigma) {
                                continue;
                            }
                            for ey in -cut..=cut {
                                let ry = qy - ey - sy;
                                if ry.abs() > cut {
                                    continue;
                                }
                                for ex in -cut..=cut {
                                    let rx = qx - ex - sx;
                                    if rx.abs() > cut {
                                        continue;
                                    }
                                    let f2v = f2hat
                                        [((ey + cut) as usize) * side + (ex + cut) as usize];
                                    if f2v.norm_sqr() == T::zero() {
                                        continue;
                                    }
                                    let f3v = f3hat
                                        [((ry + cut) as usize) * side + (rx + cut) as usize];
                                    if f3v.norm_sqr() == T::zero() {
                                        continue;
                                    }
                                    let eta = [T::of_i64(ex) * dxi, T::of_i64(ey) * dxi];
                                    if !radius_ok(eta) {
                                        continue;
                                    }
                                    if let Ok(mv) = m(xi, eta, sigma) {
                                        acc += mv * f1v * f2v * f3v;
                                    }
                                }
                            }
                        }
                    }
                    row[(qx + cut) as usize] = acc.scale(l4.recip());
                }
                row
            })
            .collect();
        let mut spec = vec![Cplx::new(T::zero(), T::zero()); n * n];
        for iy in 0..n {
            for ix in 0..n {
                let (kx, ky) = (grid.k_int(ix), grid.k_int(iy));
                if kx.abs() <= cut && ky.abs() <= cut {
                    spec[iy * n + ix] = rows[(ky + cut) as usize][(kx + cut) as usize];
                }
            }
        }
        Ok(SpectralField::from_spec(grid, spec))
    }
}

/// The three paraproduct pieces of a pointwise product.
#[derive(Debug, Clone)]
pub struct ParaproductPieces<T> {
    /// `sum_j P_j f P_{<j-1} g`
    pub high_low: SpectralField<T>,
    /// `sum_j P_{<j-1} f P_j g`
    pub low_high: SpectralField<T>,
    /// `sum_{|j-l|<=1} P_j f P_l g`, plus the mean-mean constant so that the
    /// three pieces sum exactly to `f g`.
    pub high_high: SpectralField<T>,
}

impl<T: Real> ParaproductPieces<T> {
    pub fn total(&self) -> SpectralField<T> {
        self.high_low.add(&self.low_high).unwrap().add(&self.high_high).unwrap()
    }
}

/// Paraproduct decomposition over the bank's active scales.
pub fn paraproduct_split<T: Real>(
    bank: &LittlewoodPaleyBank<T>,
    f: &SpectralField<T>,
    g: &SpectralField<T>,
) -> Result<ParaproductPieces<T>> {
    f.grid().same_shape(g.grid())?;
    let grid = f.grid();
    let shells_f: Vec<SpectralField<T>> =
        bank.active_scales().map(|j| bank.p_at(f, j)).collect();
    let shells_g: Vec<SpectralField<T>> =
        bank.active_scales().map(|j| bank.p_at(g, j)).collect();
    let lows_g: Vec<SpectralField<T>> =
        bank.active_scales().map(|j| bank.p_below(g, j - 1)).collect();
    let lows_f: Vec<SpectralField<T>> =
        bank.active_scales().map(|j| bank.p_below(f, j - 1)).collect();

    let mut high_low = SpectralField::zero(grid);
    let mut low_high = SpectralField::zero(grid);
    let mut high_high = SpectralField::zero(grid);
    let scales: Vec<i32> = bank.active_scales().collect();
    for (a, _j) in scales.iter().enumerate() {
        high_low = high_low.add(&shells_f[a].mul_pointwise(&lows_g[a])?)?;
        low_high = low_high.add(&lows_f[a].mul_pointwise(&shells_g[a])?)?;
        for (b, _l) in scales.iter().enumerate() {
            if (scales[a] - scales[b]).abs() <= 1 {
                high_high = high_high.add(&shells_f[a].mul_pointwise(&shells_g[b])?)?;
            }
        }
    }
    let mm = f.mean() * g.mean();
    let constant = SpectralField::from_fn(grid, |_| mm);
    high_high = high_high.add(&constant)?;
    Ok(ParaproductPieces { high_low, low_high, high_high })
}

/// The three dyadic model operators with scale separation `J >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelVariant {
    /// `sum_j P_j(P_{j+J} f P_{j+J} h) P_{<j-1} g`
    One,
    /// `sum_j P_{<j-1}(P_{j+J} f P_{j+J} h) P_j g`
    Two,
    /// `sum_j P_j(P_{j+J} f P_{j+J} h) P_j g`
    Three,
}

pub fn model_operator_apply<T: Real>(
    bank: &LittlewoodPaleyBank<T>,
    variant: ModelVariant,
    j_offset: u32,
    f: &SpectralField<T>,
    g: &SpectralField<T>,
    h: &SpectralField<T>,
) -> Result<SpectralField<T>> {
    f.grid().same_shape(g.grid())?;
    f.grid().same_shape(h.grid())?;
    let mut acc = SpectralField::zero(f.grid());
    let jmax = *bank.active_scales().end();
    for j in bank.active_scales() {
        if j + j_offset as i32 > jmax {
            continue;
        }
        let fj = bank.p_at(f, j + j_offset as i32);
        let hj = bank.p_at(h, j + j_offset as i32);
        let prod = fj.mul_pointwise(&hj)?;
        let term = match variant {
            ModelVariant::One => bank
                .p_at(&prod, j)
                .mul_pointwise(&bank.p_below(g, j - 1))?,
            ModelVariant::Two => bank
                .p_below(&prod, j - 1)
                .mul_pointwise(&bank.p_at(g, j))?,
            ModelVariant::Three => bank.p_at(&prod, j).mul_pointwise(&bank.p_at(g, j))?,
        };
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// Random multi-scale field: superposition of independently rescaled
/// Littlewood-Paley shells of white noise, plus a random mean so the lowest
/// low-pass projections stay nondegenerate on the lattice.
pub fn random_multiscale<T: Real>(
    bank: &LittlewoodPaleyBank<T>,
    kmax: i64,
    rng: &mut impl Rng,
) -> SpectralField<T> {
    let white = SpectralField::random(bank.grid(), kmax, rng);
    let mut acc = SpectralField::zero(bank.grid());
    for j in bank.active_scales() {
        let amp: f64 = rng.gen_range(0.25f64..4.0);
        let shell = bank.p_at(&white, j).scale_re(T::of(amp));
        acc = acc.add(&shell).unwrap();
    }
    let mean = Cplx::new(T::of(rng.gen_range(-1.0f64..1.0)), T::of(rng.gen_range(-1.0f64..1.0)));
    let constant = SpectralField::from_fn(bank.grid(), |_| mean);
    acc.add(&constant).unwrap()
}

/// Result of an empirical Lebesgue-bound probe.
#[derive(Debug, Clone)]
pub struct BoundProbeReport<T> {
    /// `||B(...)||_r / prod ||f_i||_{p_i}` per ensemble member.
    pub ratios: Vec<T>,
    pub exponents: (Vec<T>, T),
}

impl<T: Real> BoundProbeReport<T> {
    pub fn max_ratio(&self) -> T {
        self.ratios.iter().copied().fold(T::zero(), T::max)
    }

    /// Max over the first `k` members (running stabilization check).
    pub fn max_ratio_at(&self, k: usize) -> T {
        self.ratios.iter().take(k).copied().fold(T::zero(), T::max)
    }

    /// Ratio of the full-ensemble max to the first-quarter max; values close
    /// to 1 mean the empirical bound has stabilized (no blow-up trend).
    pub fn stabilization(&self) -> T {
        let quarter = (self.ratios.len() / 4).max(1);
        let early = self.max_ratio_at(quarter);
        if early == T::zero() {
            T::one()
        } else {
            self.max_ratio() / early
        }
    }
}

/// Check the Hoelder relation `sum 1/p_i = 1/r` and probe the ratio
/// `||B(...)||_r / prod ||f_i||_{p_i}` over an ensemble of random multi-scale
/// fields produced by `gen`, applying `apply` to tuples of them.
pub fn bound_probe<T: Real>(
    exponents: (&[T], T),
    ensemble_size: usize,
    mut gen: impl FnMut() -> SpectralField<T>,
    apply: impl Fn(&[SpectralField<T>]) -> Result<SpectralField<T>>,
) -> Result<BoundProbeReport<T>> {
    let (ps, r) = exponents;
    let lhs: T = ps.iter().map(|p| p.recip()).sum();
    if (lhs - r.recip()).abs() > T::of(1e-12) {
        return Err(Error::InvalidParameter(format!(
            "Hoelder relation violated: sum 1/p_i = {lhs} but 1/r = {}",
            r.recip()
        )));
    }
    if ps.iter().any(|p| *p <= T::one()) || r <= T::one() {
        return Err(Error::InvalidParameter("exponents must lie in (1, inf)".into()));
    }
    let mut ratios = Vec::with_capacity(ensemble_size);
    for _ in 0..ensemble_size {
        let fields: Vec<SpectralField<T>> = (0..ps.len()).map(|_| gen()).collect();
        let out = apply(&fields)?;
        let num = crate::norms::lebesgue(&out, r)?;
        let mut den = T::one();
        for (field, p) in fields.iter().zip(ps) {
            den *= crate::norms::lebesgue(field, *p)?;
        }
        if den > T::zero() {
            ratios.push(num / den);
        }
    }
    Ok(BoundProbeReport { ratios, exponents: (ps.to_vec(), r) })
}
