//! Closed-form evaluation of the quadratic/cubic multilinear symbols, the
//! oscillatory phases for every sign pattern, their gradients, and the
//! normal-form quotients `m_l / (i phi)`.
//!
//! The symbols:
//!
//! ```text
//! m1(xi,eta)       = (xi.eta - |xi||eta|) / |eta|^{1/2}
//! m2(xi,eta)       = (|xi|^{1/2} / (2 |eta|^{1/2} |xi-eta|^{1/2}))
//!                      (eta.(xi-eta) + |eta||xi-eta|)
//! m3(xi,eta,sigma) = -(|xi|/2) (|w|^{3/2} + |xi||w|^{1/2} - 2|xi-eta||w|^{1/2})
//! m4(xi,eta,sigma) = |xi|^{1/2} |eta|^{1/2} (|w|^{3/2} - |xi-eta||w|^{1/2})
//! ```
//!
//! with `w = xi - eta - sigma`; `m1`, `m2` are homogeneous of degree 3/2 and
//! `m3`, `m4` of degree 5/2. The phases are
//! `phi_{s1,s2} = |xi|^{1/2} + s1 |eta|^{1/2} + s2 |xi-eta|^{1/2}` and the
//! analogous four-term cubic expression.

use crate::error::{Error, Result};
use crate::scalar::{dot2, norm2, scale2, sub2, Cplx, Real};

/// Relative tolerance for singular-locus membership.
const LOCUS_RTOL: f64 = 1e-10;

/// One sign slot of a phase pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Quadratic sign pattern, selecting `phi_{s1, s2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pattern2(pub Sign, pub Sign);

/// Cubic sign pattern, selecting `phi_{s1, s2, s3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pattern3(pub Sign, pub Sign, pub Sign);

impl Pattern2 {
    pub const MM: Self = Pattern2(Sign::Minus, Sign::Minus);
    pub const PP: Self = Pattern2(Sign::Plus, Sign::Plus);
    pub const PM: Self = Pattern2(Sign::Plus, Sign::Minus);
    pub const MP: Self = Pattern2(Sign::Minus, Sign::Plus);

    pub fn all() -> [Self; 4] {
        [Self::PP, Self::PM, Self::MP, Self::MM]
    }
}

impl Pattern3 {
    pub const MMP: Self = Pattern3(Sign::Minus, Sign::Minus, Sign::Plus);
    pub const MPM: Self = Pattern3(Sign::Minus, Sign::Plus, Sign::Minus);
    pub const PMM: Self = Pattern3(Sign::Plus, Sign::Minus, Sign::Minus);
    pub const PPP: Self = Pattern3(Sign::Plus, Sign::Plus, Sign::Plus);
    pub const MMM: Self = Pattern3(Sign::Minus, Sign::Minus, Sign::Minus);

    pub fn all() -> [Self; 8] {
        use Sign::{Minus as M, Plus as P};
        [
            Pattern3(P, P, P),
            Pattern3(P, P, M),
            Pattern3(P, M, P),
            Pattern3(M, P, P),
            Pattern3(P, M, M),
            Pattern3(M, P, M),
            Pattern3(M, M, P),
            Pattern3(M, M, M),
        ]
    }

    /// Permute the three sign slots (they ride on `eta`, `sigma`,
    /// `xi - eta - sigma` respectively).
    pub fn permuted(self, perm: [usize; 3]) -> Self {
        let s = [self.0, self.1, self.2];
        Pattern3(s[perm[0]], s[perm[1]], s[perm[2]])
    }
}

/// Which quadratic symbol rides a normal-form quotient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadSymbol {
    M1,
    M2,
}

/// Which cubic symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CubicSymbol {
    M3,
    M4,
}

/// Coordinate hyperplanes where the symbols lose smoothness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Locus {
    Xi,
    Eta,
    Sigma,
    XiMinusEta,
    XiMinusEtaMinusSigma,
}

/// A named symbol with homogeneity degree and singular-locus metadata.
#[derive(Debug, Clone)]
pub struct SymbolDescriptor {
    pub name: SymbolName,
    pub degree: f64,
    pub singular_locus: Vec<Locus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolName {
    Quadratic(QuadSymbol),
    Cubic(CubicSymbol),
    Phase2(Pattern2),
    Phase3(Pattern3),
    NfMultiplier(QuadSymbol, Pattern2),
}

impl SymbolDescriptor {
    pub fn of(name: SymbolName) -> Self {
        use Locus::*;
        let (degree, singular_locus) = match name {
            SymbolName::Quadratic(QuadSymbol::M1) => (1.5, vec![Xi, Eta]),
            SymbolName::Quadratic(QuadSymbol::M2) => (1.5, vec![Xi, Eta, XiMinusEta]),
            SymbolName::Cubic(CubicSymbol::M3) => (2.5, vec![Xi, XiMinusEta, XiMinusEtaMinusSigma]),
            SymbolName::Cubic(CubicSymbol::M4) => {
                (2.5, vec![Xi, Eta, XiMinusEta, XiMinusEtaMinusSigma])
            }
            SymbolName::Phase2(_) => (0.5, vec![Xi, Eta, XiMinusEta]),
            SymbolName::Phase3(_) => (0.5, vec![Xi, Eta, Sigma, XiMinusEtaMinusSigma]),
            SymbolName::NfMultiplier(..) => (1.0, vec![Xi, Eta, XiMinusEta]),
        };
        Self { name, degree, singular_locus }
    }
}

fn on_locus<T: Real>(v: [T; 2], scale: T) -> bool {
    // `<=` so the exact origin (scale 0) counts as a locus hit.
    norm2(v) <= T::of(LOCUS_RTOL) * scale
}

fn point_scale2<T: Real>(xi: [T; 2], eta: [T; 2]) -> T {
    (dot2(xi, xi) + dot2(eta, eta)).sqrt()
}

fn point_scale3<T: Real>(xi: [T; 2], eta: [T; 2], sigma: [T; 2]) -> T {
    (dot2(xi, xi) + dot2(eta, eta) + dot2(sigma, sigma)).sqrt()
}

/// `m1` or `m2` at a quadratic frequency pair.
pub fn eval_quadratic<T: Real>(which: QuadSymbol, xi: [T; 2], eta: [T; 2]) -> Result<Cplx<T>> {
    let scale = point_scale2(xi, eta);
    let half = T::of(0.5);
    let re = match which {
        QuadSymbol::M1 => {
            if on_locus(eta, scale) {
                return Err(Error::SingularLocus { symbol: "m1", locus: "eta = 0" });
            }
            let aeta = norm2(eta);
            (dot2(xi, eta) - norm2(xi) * aeta) / aeta.sqrt()
        }
        QuadSymbol::M2 => {
            let d = sub2(xi, eta);
            if on_locus(eta, scale) {
                return Err(Error::SingularLocus { symbol: "m2", locus: "eta = 0" });
            }
            if on_locus(d, scale) {
                return Err(Error::SingularLocus { symbol: "m2", locus: "xi - eta = 0" });
            }
            let aeta = norm2(eta);
            let ad = norm2(d);
            half * norm2(xi).sqrt() / (aeta.sqrt() * ad.sqrt()) * (dot2(eta, d) + aeta * ad)
        }
    };
    Ok(Cplx::new(re, T::zero()))
}

/// `m3` or `m4` at a cubic frequency triple.
pub fn eval_cubic<T: Real>(
    which: CubicSymbol,
    xi: [T; 2],
    eta: [T; 2],
    sigma: [T; 2],
) -> Result<Cplx<T>> {
    let w = sub2(sub2(xi, eta), sigma);
    let aw = norm2(w);
    let axi = norm2(xi);
    let axe = norm2(sub2(xi, eta));
    let re = match which {
        CubicSymbol::M3 => {
            -T::of(0.5) * axi * (aw.powf(T::of(1.5)) + axi * aw.sqrt() - T::of(2.0) * axe * aw.sqrt())
        }
        CubicSymbol::M4 => {
            axi.sqrt() * norm2(eta).sqrt() * (aw.powf(T::of(1.5)) - axe * aw.sqrt())
        }
    };
    Ok(Cplx::new(re, T::zero()))
}

/// `phi_{s1,s2}(xi, eta) = |xi|^{1/2} + s1 |eta|^{1/2} + s2 |xi-eta|^{1/2}`.
pub fn phase2<T: Real>(p: Pattern2, xi: [T; 2], eta: [T; 2]) -> T {
    norm2(xi).sqrt() + p.0.value::<T>() * norm2(eta).sqrt() + p.1.value::<T>() * norm2(sub2(xi, eta)).sqrt()
}

/// `phi_{s1,s2,s3}(xi, eta, sigma)`.
pub fn phase3<T: Real>(p: Pattern3, xi: [T; 2], eta: [T; 2], sigma: [T; 2]) -> T {
    let w = sub2(sub2(xi, eta), sigma);
    norm2(xi).sqrt()
        + p.0.value::<T>() * norm2(eta).sqrt()
        + p.1.value::<T>() * norm2(sigma).sqrt()
        + p.2.value::<T>() * norm2(w).sqrt()
}

/// Variable against which a phase gradient is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreqVar {
    Xi,
    Eta,
    Sigma,
}

fn dsqrtabs<T: Real>(v: [T; 2]) -> [T; 2] {
    // gradient of |v|^{1/2} is v / (2 |v|^{3/2})
    let a = norm2(v);
    scale2((T::of(2.0) * a.powf(T::of(1.5))).recip(), v)
}

/// Analytic gradient of a quadratic phase. Errors on the loci where the
/// `v/(2|v|^{3/2})` terms blow up.
pub fn phase2_gradient<T: Real>(
    p: Pattern2,
    var: FreqVar,
    xi: [T; 2],
    eta: [T; 2],
) -> Result<[T; 2]> {
    let scale = point_scale2(xi, eta);
    let d = sub2(xi, eta);
    let check = |v: [T; 2], locus: &'static str| -> Result<()> {
        if on_locus(v, scale) {
            Err(Error::SingularLocus { symbol: "phase gradient", locus })
        } else {
            Ok(())
        }
    };
    match var {
        FreqVar::Xi => {
            check(xi, "xi = 0")?;
            check(d, "xi - eta = 0")?;
            let a = dsqrtabs(xi);
            let b = scale2(p.1.value::<T>(), dsqrtabs(d));
            Ok([a[0] + b[0], a[1] + b[1]])
        }
        FreqVar::Eta => {
            check(eta, "eta = 0")?;
            check(d, "xi - eta = 0")?;
            let a = scale2(p.0.value::<T>(), dsqrtabs(eta));
            let b = scale2(-p.1.value::<T>(), dsqrtabs(d));
            Ok([a[0] + b[0], a[1] + b[1]])
        }
        FreqVar::Sigma => Err(Error::InvalidParameter(
            "sigma gradient undefined for a quadratic phase".into(),
        )),
    }
}

/// Analytic gradient of a cubic phase.
pub fn phase3_gradient<T: Real>(
    p: Pattern3,
    var: FreqVar,
    xi: [T; 2],
    eta: [T; 2],
    sigma: [T; 2],
) -> Result<[T; 2]> {
    let scale = point_scale3(xi, eta, sigma);
    let w = sub2(sub2(xi, eta), sigma);
    let check = |v: [T; 2], locus: &'static str| -> Result<()> {
        if on_locus(v, scale) {
            Err(Error::SingularLocus { symbol: "phase gradient", locus })
        } else {
            Ok(())
        }
    };
    check(w, "xi - eta - sigma = 0")?;
    let wterm = |s: Sign| scale2(s.value::<T>(), dsqrtabs(w));
    match var {
        FreqVar::Xi => {
            check(xi, "xi = 0")?;
            let a = dsqrtabs(xi);
            let b = wterm(p.2);
            Ok([a[0] + b[0], a[1] + b[1]])
        }
        FreqVar::Eta => {
            check(eta, "eta = 0")?;
            let a = scale2(p.0.value::<T>(), dsqrtabs(eta));
            let b = wterm(p.2.flip());
            Ok([a[0] + b[0], a[1] + b[1]])
        }
        FreqVar::Sigma => {
            check(sigma, "sigma = 0")?;
            let a = scale2(p.1.value::<T>(), dsqrtabs(sigma));
            let b = wterm(p.2.flip());
            Ok([a[0] + b[0], a[1] + b[1]])
        }
    }
}

/// Normal-form multiplier `mu = m_l / (i phi_{pattern})`.
///
/// Errors exactly on the zero set of the phase; on the time-resonant locus the
/// quotient's continuous extension exists (null structure) but the formula is
/// 0/0, so callers treat such lattice points as measure-zero.
pub fn normal_form_multiplier<T: Real>(
    l: QuadSymbol,
    pattern: Pattern2,
    xi: [T; 2],
    eta: [T; 2],
) -> Result<Cplx<T>> {
    let scale = point_scale2(xi, eta);
    let phi = phase2(pattern, xi, eta);
    if phi.abs() < T::of(LOCUS_RTOL) * scale.sqrt() {
        return Err(Error::SingularLocus { symbol: "normal-form multiplier", locus: "phi = 0" });
    }
    let m = eval_quadratic(l, xi, eta)?;
    Ok(m / Cplx::new(T::zero(), phi))
}

/// Log-log slope of `|symbol|` along a parametrized approach to a singular
/// locus, sampled at geometric distances `2^{-k}` for `k` in `k_range`.
pub fn vanishing_exponent<T: Real>(
    value_at: impl Fn(T) -> Result<T>,
    k_range: std::ops::RangeInclusive<u32>,
) -> Result<(T, T)> {
    let mut series = Vec::new();
    for k in k_range {
        let d = T::of(2.0f64.powi(-(k as i32)));
        let v = value_at(d)?;
        series.push((d, v.abs()));
    }
    crate::norms::decay_fit(&series)
}

/// Residual of the near-diagonal identity expressing the `xi` gradient of the
/// strongly resonant phase through its `eta` and `sigma` gradients.
#[derive(Debug, Clone, Copy)]
pub struct CatResidual<T> {
    /// RMS least-squares residual over the local cluster.
    pub residual: T,
    /// `|eta - xi| + |sigma - xi|` at the base point.
    pub locus_distance: T,
    /// RMS gradient magnitude over the cluster, for regime classification.
    pub gradient_scale: T,
}

impl<T: Real> CatResidual<T> {
    /// The identity only holds near the diagonal. In regime the residual is
    /// a factor `O(d)` below the gradient scale; once it reaches a few
    /// percent of the gradients the quadratic-smallness region is over.
    pub fn out_of_regime(&self) -> bool {
        self.residual > T::of(0.05) * self.gradient_scale
    }
}

/// Fit, over a tight cluster around `(xi, eta, sigma)`, a constant pair of
/// 2x2 matrices `(A_eta, A_sigma)` minimizing
/// `|grad_xi phi - A_eta grad_eta phi - A_sigma grad_sigma phi|^2`
/// for `phi = phi_{--+}`, and report the RMS residual together with the
/// diagonal distance `d = |eta - xi| + |sigma - xi|`.
pub fn cat_residual<T: Real>(xi: [T; 2], eta: [T; 2], sigma: [T; 2]) -> Result<CatResidual<T>> {
    let pattern = Pattern3::MMP;
    let d = norm2(sub2(eta, xi)) + norm2(sub2(sigma, xi));
    if d == T::zero() {
        // All three gradients vanish on the diagonal.
        return Ok(CatResidual { residual: T::zero(), locus_distance: T::zero(), gradient_scale: T::zero() });
    }
    // Cluster of perturbed offsets at 20% of the base distance.
    let spread = T::of(0.2) * d;
    let mut rows: Vec<[T; 8]> = Vec::new();
    let mut rhs: Vec<T> = Vec::new();
    let mut grad_norm_sq = T::zero();
    let mut count = 0usize;
    for i in 0..12 {
        let a1 = T::of(i as f64 * 0.5236 + 0.21);
        let a2 = T::of(i as f64 * 1.1781 + 1.03);
        let eta_i = [eta[0] + spread * a1.cos(), eta[1] + spread * a1.sin()];
        let sigma_i = [sigma[0] + spread * a2.cos(), sigma[1] + spread * a2.sin()];
        let gx = phase3_gradient(pattern, FreqVar::Xi, xi, eta_i, sigma_i)?;
        let ge = phase3_gradient(pattern, FreqVar::Eta, xi, eta_i, sigma_i)?;
        let gs = phase3_gradient(pattern, FreqVar::Sigma, xi, eta_i, sigma_i)?;
        for c in 0..2 {
            // Row for component c of: gx = A_eta ge + A_sigma gs.
            let mut row = [T::zero(); 8];
            row[2 * c] = ge[0];
            row[2 * c + 1] = ge[1];
            row[4 + 2 * c] = gs[0];
            row[4 + 2 * c + 1] = gs[1];
            rows.push(row);
            rhs.push(gx[c]);
        }
        grad_norm_sq += dot2(gx, gx) + dot2(ge, ge) + dot2(gs, gs);
        count += 3;
    }
    let coeffs = solve_least_squares(&rows, &rhs)?;
    let mut res_sq = T::zero();
    for (row, y) in rows.iter().zip(&rhs) {
        let mut pred = T::zero();
        for (r, c) in row.iter().zip(&coeffs) {
            pred += *r * *c;
        }
        let e = *y - pred;
        res_sq += e * e;
    }
    let residual = (res_sq / T::of_usize(rows.len())).sqrt();
    let gradient_scale = (grad_norm_sq / T::of_usize(count)).sqrt();
    Ok(CatResidual { residual, locus_distance: d, gradient_scale })
}

/// Dense least squares via normal equations and Gaussian elimination.
fn solve_least_squares<T: Real>(rows: &[[T; 8]], rhs: &[T]) -> Result<Vec<T>> {
    const N: usize = 8;
    let mut ata = [[T::zero(); N]; N];
    let mut atb = [T::zero(); N];
    for (row, y) in rows.iter().zip(rhs) {
        for i in 0..N {
            atb[i] += row[i] * *y;
            for j in 0..N {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    // Tikhonov floor keeps rank-deficient clusters solvable.
    let trace: T = (0..N).map(|i| ata[i][i]).sum();
    let reg = T::of(1e-14) * (trace + T::of(1e-300));
    for (i, row) in ata.iter_mut().enumerate() {
        row[i] += reg;
        let _ = i;
    }
    // Gaussian elimination with partial pivoting.
    let mut a = ata;
    let mut b = atb;
    for col in 0..N {
        let mut piv = col;
        for r in (col + 1)..N {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col] == T::zero() {
            return Err(Error::InvalidParameter("singular normal equations".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..N {
            let f = a[r][col] / a[col][col];
            for c in col..N {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    let mut x = vec![T::zero(); N];
    for col in (0..N).rev() {
        let mut s = b[col];
        for c in (col + 1)..N {
            s -= a[col][c] * x[c];
        }
        x[col] = s / a[col][col];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = [f64; 2];

    fn m1(xi: P, eta: P) -> f64 {
        eval_quadratic(QuadSymbol::M1, xi, eta).unwrap().re
    }

    fn ph2(p: Pattern2, xi: P, eta: P) -> f64 {
        phase2(p, xi, eta)
    }

    fn ph3(p: Pattern3, xi: P, eta: P, sigma: P) -> f64 {
        phase3(p, xi, eta, sigma)
    }

    #[test]
    fn m1_vanishes_on_parallel_vectors() {
        for c in [0.3, 1.0, 7.5] {
            let xi = [1.2, -0.7];
            let eta = [c * xi[0], c * xi[1]];
            assert!(m1(xi, eta).abs() < 1e-12);
        }
    }

    #[test]
    fn m1_orthogonal_example() {
        // m1((1,0),(0,1)) = (0 - 1)/1 = -1
        assert!((m1([1.0, 0.0], [0.0, 1.0]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn m2_vanishes_when_xi_minus_eta_antiparallel_to_eta() {
        for c in [0.4, 1.0, 3.0] {
            let eta: P = [0.8, 0.5];
            // xi - eta = -c eta  =>  xi = (1 - c) eta
            let xi: P = [(1.0 - c) * eta[0], (1.0 - c) * eta[1]];
            let v = eval_quadratic(QuadSymbol::M2, xi, eta).unwrap().re;
            assert!(v.abs() < 1e-12, "c={c} v={v}");
        }
    }

    #[test]
    fn m3_vanishes_at_xi_zero_and_m4_on_last_locus() {
        let z = eval_cubic(CubicSymbol::M3, [0.0, 0.0], [0.4, 0.2], [-0.3, 0.9]).unwrap();
        assert_eq!(z.re, 0.0);
        // xi - eta - sigma = 0
        let xi = [1.0, 0.5];
        let eta = [0.3, 0.3];
        let sigma = [xi[0] - eta[0], xi[1] - eta[1]];
        let v = eval_cubic(CubicSymbol::M4, xi, eta, sigma).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn homogeneity_degrees() {
        let pts: Vec<(P, P, P)> = (0..1000)
            .map(|i| {
                let t = i as f64 * 0.7 + 0.1;
                (
                    [t.cos(), (2.0 * t).sin()],
                    [(1.3 * t).sin() + 1.1, (0.4 * t).cos()],
                    [(0.9 * t).cos() - 2.0, (1.7 * t).sin() + 0.2],
                )
            })
            .collect();
        let lam = 2.0;
        for (xi, eta, sigma) in pts {
            let sxi = scale2(lam, xi);
            let seta = scale2(lam, eta);
            let ssigma = scale2(lam, sigma);
            for which in [QuadSymbol::M1, QuadSymbol::M2] {
                if let (Ok(a), Ok(b)) =
                    (eval_quadratic(which, xi, eta), eval_quadratic(which, sxi, seta))
                {
                    assert!(
                        (b - a * lam.powf(1.5)).norm() <= 1e-12 * b.norm().max(1.0),
                        "{which:?}"
                    );
                }
            }
            for which in [CubicSymbol::M3, CubicSymbol::M4] {
                let a = eval_cubic(which, xi, eta, sigma).unwrap();
                let b = eval_cubic(which, sxi, seta, ssigma).unwrap();
                assert!((b - a * lam.powf(2.5)).norm() <= 1e-12 * b.norm().max(1.0), "{which:?}");
            }
            for p in Pattern2::all() {
                let a = ph2(p, xi, eta);
                let b = ph2(p, sxi, seta);
                assert!((b - a * lam.sqrt()).abs() <= 1e-12 * b.abs().max(1.0));
            }
            for p in Pattern3::all() {
                let a = ph3(p, xi, eta, sigma);
                let b = ph3(p, sxi, seta, ssigma);
                assert!((b - a * lam.sqrt()).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn phase_examples_from_resonant_sets() {
        // phi_{--}((1,0),(1,0)) = 1 - 1 - 0 = 0
        assert!(ph2(Pattern2::MM, [1.0, 0.0], [1.0, 0.0]).abs() < 1e-15);
        // phi_{++} > 0 away from the origin
        for i in 0..200 {
            let t = i as f64 * 0.31;
            let xi = [t.cos(), t.sin()];
            let eta = [(3.0 * t).cos() * 0.3, (3.0 * t).sin() * 0.3];
            assert!(ph2(Pattern2::PP, xi, eta) > 0.0);
        }
        // phi_{--+}(xi, xi, xi) = 0
        for xi in [[0.5, 0.0], [1.0, -2.0], [-0.2, 0.7]] {
            assert!(ph3(Pattern3::MMP, xi, xi, xi).abs() < 1e-14);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let xi = [0.9, -0.4];
        let eta = [0.3, 0.55];
        let sigma = [-0.7, 0.25];
        let h = 1e-6;
        for p in Pattern2::all() {
            for var in [FreqVar::Xi, FreqVar::Eta] {
                let g = phase2_gradient(p, var, xi, eta).unwrap();
                for c in 0..2 {
                    let mut hi = [xi, eta];
                    let mut lo = [xi, eta];
                    let idx = if var == FreqVar::Xi { 0 } else { 1 };
                    hi[idx][c] += h;
                    lo[idx][c] -= h;
                    let fd = (ph2(p, hi[0], hi[1]) - ph2(p, lo[0], lo[1])) / (2.0 * h);
                    assert!((g[c] - fd).abs() < 1e-6, "{p:?} {var:?} comp {c}");
                }
            }
        }
        for p in Pattern3::all() {
            for var in [FreqVar::Xi, FreqVar::Eta, FreqVar::Sigma] {
                let g = phase3_gradient(p, var, xi, eta, sigma).unwrap();
                for c in 0..2 {
                    let mut hi = [xi, eta, sigma];
                    let mut lo = [xi, eta, sigma];
                    let idx = match var {
                        FreqVar::Xi => 0,
                        FreqVar::Eta => 1,
                        FreqVar::Sigma => 2,
                    };
                    hi[idx][c] += h;
                    lo[idx][c] -= h;
                    let fd = (ph3(p, hi[0], hi[1], hi[2]) - ph3(p, lo[0], lo[1], lo[2]))
                        / (2.0 * h);
                    assert!((g[c] - fd).abs() < 1e-6, "{p:?} {var:?} comp {c}");
                }
            }
        }
    }

    #[test]
    fn strong_phase_stationary_on_diagonal() {
        let xi = [0.8, 0.3];
        let ge = phase3_gradient(Pattern3::MMP, FreqVar::Eta, xi, xi, xi).unwrap();
        let gs = phase3_gradient(Pattern3::MMP, FreqVar::Sigma, xi, xi, xi).unwrap();
        assert!(norm2(ge) < 1e-14);
        assert!(norm2(gs) < 1e-14);
    }

    #[test]
    fn nf_multiplier_homogeneous_degree_one() {
        let xi: P = [1.1, 0.2];
        let eta: P = [0.4, -0.6];
        for l in [QuadSymbol::M1, QuadSymbol::M2] {
            for p in Pattern2::all() {
                let a = normal_form_multiplier(l, p, xi, eta).unwrap();
                let b =
                    normal_form_multiplier(l, p, scale2(2.0, xi), scale2(2.0, eta)).unwrap();
                assert!((b - a * 2.0).norm() < 1e-12 * b.norm().max(1.0));
            }
        }
    }

    #[test]
    fn nf_multiplier_bounded_along_eta_to_zero() {
        // mu = m1 / (i phi_{--}) stays bounded as eta -> 0 (null structure).
        let xi = [1.0, 0.0];
        let dir = [0.6, 0.8];
        let mut sup: f64 = 0.0;
        for k in 4..=20 {
            let r = 2.0f64.powi(-k);
            let eta = scale2(r, dir);
            let mu = normal_form_multiplier(QuadSymbol::M1, Pattern2::MM, xi, eta).unwrap();
            sup = sup.max(mu.norm());
        }
        assert!(sup.is_finite());
        // Limit value is |xi| (1 - cos angle(xi, dir)) = 1 - 0.6 = 0.4.
        let eta = scale2(2.0f64.powi(-20), dir);
        let mu = normal_form_multiplier(QuadSymbol::M1, Pattern2::MM, xi, eta).unwrap();
        assert!((mu.norm() - 0.4).abs() < 1e-3, "limit {}", mu.norm());
    }

    #[test]
    fn nf_multiplier_pp_direct_arithmetic() {
        let xi = [0.7, -0.2];
        let eta = [-0.3, 0.45];
        let m = eval_quadratic(QuadSymbol::M1, xi, eta).unwrap();
        let phi = ph2(Pattern2::PP, xi, eta);
        let mu = normal_form_multiplier(QuadSymbol::M1, Pattern2::PP, xi, eta).unwrap();
        assert!((mu - m / Cplx::new(0.0, phi)).norm() < 1e-15);
    }

    #[test]
    fn vanishing_exponents_match_printed_expansions() {
        let xi = [1.0, 0.0];
        let dir = [0.6, 0.8];
        // m1 ~ |eta|^{1/2} as eta -> 0
        let (ex, _) = vanishing_exponent(
            |d: f64| Ok(eval_quadratic(QuadSymbol::M1, xi, scale2(d, dir))?.norm()),
            4..=20,
        )
        .unwrap();
        assert!((ex - 0.5).abs() < 0.02, "m1 eta->0 exponent {ex}");
        // m1 ~ |xi - eta|^2 as xi - eta -> 0
        let (ex, _) = vanishing_exponent(
            |d: f64| {
                let eta = sub2(xi, scale2(d, dir));
                Ok(eval_quadratic(QuadSymbol::M1, xi, eta)?.norm())
            },
            4..=20,
        )
        .unwrap();
        assert!((ex - 2.0).abs() < 0.05, "m1 xi-eta->0 exponent {ex}");
        // m2 ~ |xi|^{5/2} as xi -> 0
        let eta = [0.9, 0.1];
        let (ex, _) = vanishing_exponent(
            |d: f64| Ok(eval_quadratic(QuadSymbol::M2, scale2(d, dir), eta)?.norm()),
            4..=20,
        )
        .unwrap();
        assert!((ex - 2.5).abs() < 0.05, "m2 xi->0 exponent {ex}");
    }

    #[test]
    fn cat_residual_zero_on_diagonal() {
        let xi = [1.0, 0.2];
        let r = cat_residual(xi, xi, xi).unwrap();
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.locus_distance, 0.0);
    }

    #[test]
    fn cat_residual_quadratic_scaling() {
        let xi = [1.0, 0.0];
        let mut series = Vec::new();
        for k in 4..=14 {
            let d = 2.0f64.powi(-k);
            let eta = [xi[0] + d * 0.6, xi[1] + d * 0.8];
            let sigma = [xi[0] - d * 0.28, xi[1] + d * 0.96];
            let r = cat_residual(xi, eta, sigma).unwrap();
            assert!(!r.out_of_regime(), "k={k}");
            series.push((r.locus_distance, r.residual.max(1e-300)));
        }
        let (slope, _) = crate::norms::decay_fit(&series).unwrap();
        assert!(slope >= 1.9, "cat residual slope {slope}");
    }

    #[test]
    fn cat_residual_flags_far_from_diagonal() {
        let xi = [1.0, 0.0];
        let eta = [1.3, 0.4];
        let sigma = [0.6, -0.35];
        let r = cat_residual(xi, eta, sigma).unwrap();
        assert!(r.locus_distance > 0.4);
        assert!(r.out_of_regime(), "residual {} scale {}", r.residual, r.gradient_scale);
    }
}
