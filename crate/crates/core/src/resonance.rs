//! Sampling and classification of time/space/space-time resonant sets.
//!
//! Sets are *sampled*, never represented analytically: deterministic
//! low-discrepancy seeds on the ambient unit sphere are pushed onto the set
//! by projected gradient descent on the defining residual, and a point is
//! stored only if it passes its kind's threshold. Maps are reproducible
//! run-to-run and serialize to CSV.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{norm2, Real};
use crate::symbols::{
    eval_cubic, eval_quadratic, phase2, phase2_gradient, phase3, phase3_gradient, CubicSymbol,
    FreqVar, Locus, Pattern2, Pattern3, QuadSymbol, Sign,
};

/// Which defining condition a map samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonanceKind {
    /// `phi = 0`
    Time,
    /// `grad_{eta[,sigma]} phi = 0`
    Space,
    /// both
    SpaceTime,
}

/// Quadratic or cubic pattern for a sampled map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnyPattern {
    Quadratic(Pattern2),
    Cubic(Pattern3),
}

/// One sampled point, normalized to the ambient unit sphere.
#[derive(Debug, Clone)]
pub struct ResonancePoint<T> {
    /// `(xi, eta)` or `(xi, eta, sigma)`.
    pub coords: Vec<[T; 2]>,
    pub abs_phi: T,
    pub abs_grad_phi: T,
    /// `m1, m2` evaluated at `(xi, eta)`, then `m3, m4` for cubic patterns.
    /// Lattice hits on a singular locus carry their limiting value 0.
    pub symbols: Vec<T>,
}

/// A sampled resonant set.
#[derive(Debug, Clone)]
pub struct ResonanceMap<T> {
    pub pattern: AnyPattern,
    pub kind: ResonanceKind,
    pub tolerance: T,
    pub points: Vec<ResonancePoint<T>>,
}

/// Strength classification of a cubic phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseStrength {
    WeaklyResonant,
    StronglyResonant,
}

/// A cubic phase is strongly resonant exactly when one sign differs from the
/// other two in the slots `(eta, sigma, xi-eta-sigma)`: the patterns
/// `(-,-,+)`, `(-,+,-)`, `(+,-,-)`.
pub fn classify_cubic_phase(p: Pattern3) -> PhaseStrength {
    let plus_count = [p.0, p.1, p.2].iter().filter(|s| **s == Sign::Plus).count();
    if plus_count == 1 {
        PhaseStrength::StronglyResonant
    } else {
        PhaseStrength::WeaklyResonant
    }
}

/// Hyperplane branches of the quadratic time-resonant set; empty for the
/// `(+,+)` pattern whose phase only vanishes at the origin.
pub fn time_resonant_branches(p: Pattern2) -> Vec<Locus> {
    use Sign::{Minus as M, Plus as P};
    match (p.0, p.1) {
        (M, M) => vec![Locus::Eta, Locus::XiMinusEta],
        (P, M) => vec![Locus::Xi, Locus::Eta],
        (M, P) => vec![Locus::Xi, Locus::XiMinusEta],
        (P, P) => vec![],
    }
}

// ---------------------------------------------------------------------------
// Low-discrepancy seeds on the sphere
// ---------------------------------------------------------------------------

/// Inverse standard-normal CDF (Acklam's rational approximation, |err| < 1e-9).
fn inv_norm_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p = p.clamp(1e-300, 1.0 - 1e-16);
    let plow = 0.02425;
    if p < plow {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - plow {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -inv_norm_cdf(1.0 - p)
    }
}

/// Kronecker (R_d) sequence in `[0,1)^d`; the generator is the generalized
/// golden ratio `x^{d+1} = x + 1`.
fn kronecker_alphas(d: usize) -> Vec<f64> {
    let mut phi = 1.5f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    (1..=d).map(|i| (1.0 / phi).powi(i as i32).fract()).collect()
}

/// Deterministic quasi-uniform points on the unit sphere of `R^d`.
fn sphere_seeds<T: Real>(d: usize, count: usize) -> Vec<Vec<T>> {
    let alphas = kronecker_alphas(d);
    (0..count)
        .map(|n| {
            let mut v: Vec<f64> = alphas
                .iter()
                .map(|a| inv_norm_cdf(((n as f64 + 0.5) * a).fract()))
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            for x in &mut v {
                *x /= norm;
            }
            v.into_iter().map(T::of).collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Projected descent on the defining residual
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
struct Criterion {
    kind: ResonanceKind,
}

fn unpack2<T: Real>(p: &[T]) -> ([T; 2], [T; 2]) {
    ([p[0], p[1]], [p[2], p[3]])
}

fn unpack3<T: Real>(p: &[T]) -> ([T; 2], [T; 2], [T; 2]) {
    ([p[0], p[1]], [p[2], p[3]], [p[4], p[5]])
}

fn grad_norm_quadratic<T: Real>(pat: Pattern2, xi: [T; 2], eta: [T; 2]) -> T {
    match phase2_gradient(pat, FreqVar::Eta, xi, eta) {
        Ok(g) => norm2(g),
        Err(_) => T::infinity(),
    }
}

fn grad_norm_cubic<T: Real>(pat: Pattern3, xi: [T; 2], eta: [T; 2], sigma: [T; 2]) -> T {
    let ge = phase3_gradient(pat, FreqVar::Eta, xi, eta, sigma);
    let gs = phase3_gradient(pat, FreqVar::Sigma, xi, eta, sigma);
    match (ge, gs) {
        (Ok(a), Ok(b)) => (norm2(a) * norm2(a) + norm2(b) * norm2(b)).sqrt(),
        _ => T::infinity(),
    }
}

fn residual<T: Real>(pattern: AnyPattern, crit: Criterion, p: &[T]) -> T {
    let (phi, grad) = match pattern {
        AnyPattern::Quadratic(pat) => {
            let (xi, eta) = unpack2(p);
            (phase2(pat, xi, eta), grad_norm_quadratic(pat, xi, eta))
        }
        AnyPattern::Cubic(pat) => {
            let (xi, eta, sigma) = unpack3(p);
            (phase3(pat, xi, eta, sigma), grad_norm_cubic(pat, xi, eta, sigma))
        }
    };
    match crit.kind {
        ResonanceKind::Time => phi * phi,
        ResonanceKind::Space => {
            if grad.is_finite() {
                grad * grad
            } else {
                T::of(1e6)
            }
        }
        ResonanceKind::SpaceTime => {
            let g2 = if grad.is_finite() { grad * grad } else { T::of(1e6) };
            phi * phi + g2
        }
    }
}

fn normalize<T: Real>(p: &mut [T]) {
    let n = p.iter().map(|x| *x * *x).sum::<T>().sqrt();
    if n > T::zero() {
        for x in p.iter_mut() {
            *x /= n;
        }
    }
}

/// Backtracking projected gradient descent on the sphere; returns the final
/// point (not necessarily converged -- the caller re-checks thresholds).
fn descend<T: Real>(pattern: AnyPattern, crit: Criterion, seed: Vec<T>, target: T) -> Vec<T> {
    let mut p = seed;
    let mut f = residual(pattern, crit, &p);
    let mut step = T::of(0.05);
    let h = T::of(1e-7);
    for _ in 0..300 {
        if f <= target {
            break;
        }
        // numerical gradient, projected onto the tangent space
        let mut g = vec![T::zero(); p.len()];
        for i in 0..p.len() {
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[i] += h;
            lo[i] -= h;
            g[i] = (residual(pattern, crit, &hi) - residual(pattern, crit, &lo)) / (T::of(2.0) * h);
        }
        let dot: T = g.iter().zip(&p).map(|(a, b)| *a * *b).sum();
        for (gi, pi) in g.iter_mut().zip(&p) {
            *gi -= dot * *pi;
        }
        let gn = g.iter().map(|x| *x * *x).sum::<T>().sqrt();
        if gn < T::of(1e-14) || !gn.is_finite() {
            break;
        }
        let mut advanced = false;
        for _ in 0..40 {
            let mut q = p.clone();
            for (qi, gi) in q.iter_mut().zip(&g) {
                *qi -= step * *gi / gn;
            }
            normalize(&mut q);
            let fq = residual(pattern, crit, &q);
            if fq < f {
                p = q;
                f = fq;
                step *= T::of(1.4);
                advanced = true;
                break;
            }
            step *= T::of(0.4);
            if step < T::of(1e-15) {
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    p
}

impl<T: Real> ResonanceMap<T> {
    /// Points passing the threshold, found by projected descent from
    /// `resolution^3` deterministic sphere seeds (at least 16 per dimension).
    pub fn sample(
        pattern: AnyPattern,
        kind: ResonanceKind,
        resolution: usize,
        tol: T,
    ) -> Result<Self> {
        if resolution < 16 {
            return Err(Error::InvalidParameter(format!(
                "resolution must be >= 16 per dimension, got {resolution}"
            )));
        }
        if tol <= T::zero() {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        let d = match pattern {
            AnyPattern::Quadratic(_) => 4,
            AnyPattern::Cubic(_) => 6,
        };
        let crit = Criterion { kind };
        let count = resolution * resolution * resolution;
        let seeds = sphere_seeds::<T>(d, count);
        let quarter = tol * tol * T::of(0.25);
        let points: Vec<ResonancePoint<T>> = seeds
            .into_par_iter()
            .filter_map(|seed| {
                let p = descend(pattern, crit, seed, quarter);
                Self::admit(pattern, kind, &p, tol)
            })
            .collect();
        Ok(Self { pattern, kind, tolerance: tol, points })
    }

    fn admit(pattern: AnyPattern, kind: ResonanceKind, p: &[T], tol: T) -> Option<ResonancePoint<T>> {
        let (phi, grad, coords) = match pattern {
            AnyPattern::Quadratic(pat) => {
                let (xi, eta) = unpack2(p);
                (phase2(pat, xi, eta), grad_norm_quadratic(pat, xi, eta), vec![xi, eta])
            }
            AnyPattern::Cubic(pat) => {
                let (xi, eta, sigma) = unpack3(p);
                (
                    phase3(pat, xi, eta, sigma),
                    grad_norm_cubic(pat, xi, eta, sigma),
                    vec![xi, eta, sigma],
                )
            }
        };
        let ok = match kind {
            ResonanceKind::Time => phi.abs() < tol,
            ResonanceKind::Space => grad < tol,
            ResonanceKind::SpaceTime => phi.abs() < tol && grad < tol,
        };
        if !ok {
            return None;
        }
        let xi = coords[0];
        let eta = coords[1];
        let mut symbols = vec![
            eval_quadratic(QuadSymbol::M1, xi, eta).map(|c| c.norm()).unwrap_or(T::zero()),
            eval_quadratic(QuadSymbol::M2, xi, eta).map(|c| c.norm()).unwrap_or(T::zero()),
        ];
        if coords.len() == 3 {
            let sigma = coords[2];
            symbols.push(eval_cubic(CubicSymbol::M3, xi, eta, sigma).map(|c| c.norm()).unwrap_or(T::zero()));
            symbols.push(eval_cubic(CubicSymbol::M4, xi, eta, sigma).map(|c| c.norm()).unwrap_or(T::zero()));
        }
        Some(ResonancePoint {
            coords,
            abs_phi: phi.abs(),
            abs_grad_phi: if grad.is_finite() { grad } else { T::of(f64::MAX) },
            symbols,
        })
    }

    /// Box-counting dimension estimate of the *sphere-reduced* sample, over
    /// 4 dyadic scales. The resonant sets are cones, so their dimension as
    /// subsets of frequency space is one higher than this estimate (the
    /// diagonal `{xi = eta = sigma}` meets the unit sphere in a circle:
    /// probe ~ 1, cone dimension 2).
    pub fn dimension_probe(&self) -> Result<T> {
        if self.points.len() < 1000 {
            return Err(Error::EmptyMap("dimension probe needs at least 1000 points"));
        }
        let dim = self.points[0].coords.len() * 2;
        let mut series = Vec::new();
        for m in 1..=4u32 {
            let cell = 0.5f64.powi(m as i32);
            let mut boxes = std::collections::HashSet::new();
            for pt in &self.points {
                let mut key = Vec::with_capacity(dim);
                for c in &pt.coords {
                    for comp in c {
                        let v = comp.to_f64().unwrap();
                        key.push((v / cell).floor() as i64);
                    }
                }
                boxes.insert(key);
            }
            series.push((cell, boxes.len() as f64));
        }
        // log N vs log(1/cell): slope is the dimension estimate.
        let fitted: Vec<(T, T)> = series
            .iter()
            .map(|&(c, n)| (T::of(1.0 / c), T::of(n)))
            .collect();
        // decay_fit needs >= 8 samples; do the 4-point fit inline.
        let pts: Vec<(T, T)> = fitted.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
        let n = T::of_usize(pts.len());
        let sx: T = pts.iter().map(|p| p.0).sum();
        let sy: T = pts.iter().map(|p| p.1).sum();
        let sxx: T = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: T = pts.iter().map(|p| p.0 * p.1).sum();
        Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
    }

    /// CSV rows `(coordinates..., abs_phi, abs_grad_phi, m1, m2[, m3, m4])`.
    pub fn write_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        let cubic = matches!(self.pattern, AnyPattern::Cubic(_));
        let mut header = vec!["xi_x", "xi_y", "eta_x", "eta_y"];
        if cubic {
            header.extend_from_slice(&["sigma_x", "sigma_y"]);
        }
        header.extend_from_slice(&["abs_phi", "abs_grad_phi", "m1", "m2"]);
        if cubic {
            header.extend_from_slice(&["m3", "m4"]);
        }
        writeln!(w, "{}", header.join(","))?;
        for pt in &self.points {
            let mut cols: Vec<String> = Vec::new();
            for c in &pt.coords {
                cols.push(format!("{}", c[0]));
                cols.push(format!("{}", c[1]));
            }
            cols.push(format!("{}", pt.abs_phi));
            cols.push(format!("{}", pt.abs_grad_phi));
            for s in &pt.symbols {
                cols.push(format!("{}", s));
            }
            writeln!(w, "{}", cols.join(","))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Null-structure report
// ---------------------------------------------------------------------------

/// Max symbol size and quotient size per locus distance along one branch of
/// the time-resonant set.
#[derive(Debug, Clone)]
pub struct BranchDecay<T> {
    pub locus: Locus,
    /// Rows `(distance, max |m|, max |m / phi|)`.
    pub rows: Vec<(T, T, T)>,
    /// Fitted log-log exponent of `max |m|` vs distance.
    pub exponent: T,
}

/// Null-structure report for a quadratic symbol on a quadratic pattern's
/// time-resonant set. Vacuous (no branches) for `(+,+)`.
#[derive(Debug, Clone)]
pub struct NullStructureReport<T> {
    pub symbol: QuadSymbol,
    pub pattern: Pattern2,
    pub branches: Vec<BranchDecay<T>>,
}

pub fn null_structure_report<T: Real>(
    symbol: QuadSymbol,
    pattern: Pattern2,
    resolution: usize,
) -> Result<NullStructureReport<T>> {
    let branches = time_resonant_branches(pattern)
        .into_iter()
        .map(|locus| {
            let mut rows = Vec::new();
            for k in 2..=14u32 {
                let d = T::of(2.0f64.powi(-(k as i32)));
                let mut max_m = T::zero();
                let mut max_q = T::zero();
                for i in 0..resolution {
                    for a in 0..8 {
                        // base frequency on the unit circle, approach direction swept
                        let tb = T::of(a as f64 * 0.785398163 + 0.37);
                        let base = [tb.cos(), tb.sin()];
                        let td = T::of(i as f64 * 2.0 * std::f64::consts::PI / resolution as f64 + 0.11);
                        let dir = [td.cos(), td.sin()];
                        let (xi, eta) = branch_point(locus, base, dir, d);
                        if let Ok(m) = eval_quadratic(symbol, xi, eta) {
                            max_m = max_m.max(m.norm());
                            let phi = phase2(pattern, xi, eta);
                            if phi.abs() > T::zero() {
                                max_q = max_q.max(m.norm() / phi.abs());
                            }
                        }
                    }
                }
                rows.push((d, max_m, max_q));
            }
            let series: Vec<(T, T)> = rows.iter().map(|&(d, m, _)| (d, m.max(T::of(1e-300)))).collect();
            let exponent = crate::norms::decay_fit(&series).map(|(e, _)| e).unwrap_or(T::nan());
            BranchDecay { locus, rows, exponent }
        })
        .collect();
    Ok(NullStructureReport { symbol, pattern, branches })
}

/// A point at distance `d` from the given branch of the time-resonant set,
/// with the surviving frequencies on the unit circle.
fn branch_point<T: Real>(locus: Locus, base: [T; 2], dir: [T; 2], d: T) -> ([T; 2], [T; 2]) {
    match locus {
        Locus::Eta => (base, [d * dir[0], d * dir[1]]),
        Locus::XiMinusEta => (base, [base[0] - d * dir[0], base[1] - d * dir[1]]),
        Locus::Xi => ([d * dir[0], d * dir[1]], base),
        _ => unreachable!("quadratic branches only"),
    }
}
