//! Norms of lattice fields: Lebesgue, Sobolev, Besov, the weighted profile
//! norm and the bootstrap-norm components, plus the log-log decay fitter used
//! by every dispersive probe.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lp::{LittlewoodPaleyBank, LpSelector};
use crate::scalar::{Cplx, Real};

/// Lebesgue exponent; `T::infinity()` selects the sup norm.
pub fn lebesgue<T: Real>(f: &SpectralField<T>, p: T) -> Result<T> {
    if p < T::one() {
        return Err(Error::InvalidParameter(format!(
            "Lebesgue exponent must satisfy p >= 1, got {p}"
        )));
    }
    if p == T::infinity() {
        return Ok(f.linf());
    }
    let dx = f.grid().dx();
    let s: T = f.phys().iter().map(|c| c.norm().powf(p)).sum();
    Ok((s * dx * dx).powf(p.recip()))
}

/// Pointwise modulus of the k-th gradient tensor,
/// `|grad^k f|^2 = sum_{a+b=k} C(k,a) |d_x^a d_y^b f|^2`, returned as a field.
pub fn grad_k_modulus<T: Real>(f: &SpectralField<T>, k: u32) -> SpectralField<T> {
    let n2 = f.phys().len();
    let mut acc = vec![T::zero(); n2];
    for a in 0..=k {
        let b = k - a;
        let coeff = T::of_usize(binomial(k as usize, a as usize));
        let d = f.partial(a, b);
        for (s, c) in acc.iter_mut().zip(d.phys()) {
            *s += coeff * c.norm_sqr();
        }
    }
    let phys = acc.into_iter().map(|v| Cplx::new(v.sqrt(), T::zero())).collect();
    SpectralField::from_samples(f.grid(), phys)
}

fn binomial(n: usize, k: usize) -> usize {
    (1..=k).fold(1usize, |acc, i| acc * (n + 1 - i) / i)
}

/// Inhomogeneous Sobolev norm `||f||_p + ||grad^k f||_p`.
pub fn sobolev_wkp<T: Real>(f: &SpectralField<T>, k: u32, p: T) -> Result<T> {
    Ok(lebesgue(f, p)? + lebesgue(&grad_k_modulus(f, k), p)?)
}

/// `H^N` via the multiplier `(1 + |xi|^2)^{N/2}`.
pub fn sobolev_hn<T: Real>(f: &SpectralField<T>, n_reg: T) -> T {
    let l2 = f.grid().length() * f.grid().length();
    let g = f.grid();
    let nn = g.n();
    let mut s = T::zero();
    for iy in 0..nn {
        for ix in 0..nn {
            let r = g.xi_abs(ix, iy);
            let w = (T::one() + r * r).powf(n_reg);
            s += w * f.spec()[iy * nn + ix].norm_sqr();
        }
    }
    (s / l2).sqrt()
}

/// Besov norm from the dyadic shells. `homogeneous` sums every active scale;
/// the inhomogeneous variant uses `||P_{<0} f||_p` plus scales `j >= 0`.
/// `q = infinity` takes the sup over shells.
pub fn besov<T: Real>(
    bank: &LittlewoodPaleyBank<T>,
    f: &SpectralField<T>,
    s: T,
    p: T,
    q: T,
    homogeneous: bool,
) -> Result<T> {
    let mut shell_terms = Vec::new();
    for j in bank.active_scales() {
        if !homogeneous && j < 0 {
            continue;
        }
        let pj = bank.project(f, LpSelector::At(j));
        let w = T::of(2.0f64.powi(j)).powf(s);
        shell_terms.push(w * lebesgue(&pj, p)?);
    }
    let shells = if q == T::infinity() {
        shell_terms.into_iter().fold(T::zero(), T::max)
    } else {
        let sum: T = shell_terms.into_iter().map(|t| t.powf(q)).sum();
        sum.powf(q.recip())
    };
    if homogeneous {
        Ok(shells)
    } else {
        let low = bank.project(f, LpSelector::Below(0));
        Ok(lebesgue(&low, p)? + shells)
    }
}

/// Weighted norm `||x f||_2` with the centered coordinate, plus the fraction
/// of the weighted mass sitting in the outermost 1/16 of the box (wraparound
/// contamination indicator).
#[derive(Debug, Clone, Copy)]
pub struct WeightedL2<T> {
    pub value: T,
    pub boundary_fraction: T,
}

impl<T: Real> WeightedL2<T> {
    /// Whether more than 1% of the weighted mass touches the box boundary.
    pub fn contaminated(&self) -> bool {
        self.boundary_fraction > T::of(0.01)
    }
}

pub fn weighted_l2<T: Real>(f: &SpectralField<T>) -> WeightedL2<T> {
    let g = f.grid();
    let n = g.n();
    let dx2 = g.dx() * g.dx();
    let margin = g.length() * T::of(0.5 * 7.0 / 8.0);
    let mut total = T::zero();
    let mut boundary = T::zero();
    for iy in 0..n {
        for ix in 0..n {
            let x = g.x_centered(ix, iy);
            let r2 = x[0] * x[0] + x[1] * x[1];
            let m = r2 * f.phys()[iy * n + ix].norm_sqr() * dx2;
            total += m;
            if x[0].abs() > margin || x[1].abs() > margin {
                boundary += m;
            }
        }
    }
    let frac = if total > T::zero() { boundary / total } else { T::zero() };
    WeightedL2 { value: total.sqrt(), boundary_fraction: frac }
}

/// The four components of the bootstrap norm at a fixed time:
/// `t ||u||_{W^{4,inf}}`, `t^{-delta} ||u||_{H^N}`, `t^{-delta} ||x f||_2`,
/// `||u||_2`.
#[derive(Debug, Clone, Copy)]
pub struct XNormComponents<T> {
    pub decay_w4inf: T,
    pub growth_hn: T,
    pub growth_weight: T,
    pub mass: T,
}

impl<T: Real> XNormComponents<T> {
    pub fn total(&self) -> T {
        self.decay_w4inf + self.growth_hn + self.growth_weight + self.mass
    }
}

pub fn x_norm_components<T: Real>(
    u: &SpectralField<T>,
    profile: &SpectralField<T>,
    t: T,
    delta: T,
    n_reg: T,
) -> Result<XNormComponents<T>> {
    let w4 = sobolev_wkp(u, 4, T::infinity())?;
    let hn = sobolev_hn(u, n_reg);
    let xf = weighted_l2(profile).value;
    Ok(XNormComponents {
        decay_w4inf: t * w4,
        growth_hn: t.powf(-delta) * hn,
        growth_weight: t.powf(-delta) * xf,
        mass: u.l2(),
    })
}

/// What [`compute_norms`] should evaluate.
#[derive(Debug, Clone, Default)]
pub struct NormRequest<T> {
    pub lebesgue: Vec<T>,
    /// `(k, p)` pairs for `W^{k,p}`.
    pub sobolev_wkp: Vec<(u32, T)>,
    /// Regularity indices for `H^N`.
    pub sobolev_hn: Vec<T>,
    /// `(s, p, q, homogeneous)` Besov requests (restricted to active scales).
    pub besov: Vec<(T, T, T, bool)>,
    pub weighted: bool,
    /// `(t, delta, N)` for the bootstrap-norm components; the second field
    /// supplies the profile.
    pub x_norm: Option<(T, T, T)>,
}

/// Evaluated norms, keyed by the request that produced them.
#[derive(Debug, Clone)]
pub struct NormReport<T> {
    pub lebesgue: Vec<(T, T)>,
    pub sobolev_wkp: Vec<((u32, T), T)>,
    pub sobolev_hn: Vec<(T, T)>,
    pub besov: Vec<((T, T, T, bool), T)>,
    pub weighted: Option<WeightedL2<T>>,
    pub x_norm_components: Option<XNormComponents<T>>,
}

/// Evaluate a batch of norms on one field (with an optional profile for the
/// weighted bootstrap component).
pub fn compute_norms<T: Real>(
    bank: &LittlewoodPaleyBank<T>,
    field: &SpectralField<T>,
    profile: Option<&SpectralField<T>>,
    request: &NormRequest<T>,
) -> Result<NormReport<T>> {
    let mut rep = NormReport {
        lebesgue: Vec::new(),
        sobolev_wkp: Vec::new(),
        sobolev_hn: Vec::new(),
        besov: Vec::new(),
        weighted: None,
        x_norm_components: None,
    };
    for &p in &request.lebesgue {
        rep.lebesgue.push((p, lebesgue(field, p)?));
    }
    for &(k, p) in &request.sobolev_wkp {
        rep.sobolev_wkp.push(((k, p), sobolev_wkp(field, k, p)?));
    }
    for &n_reg in &request.sobolev_hn {
        rep.sobolev_hn.push((n_reg, sobolev_hn(field, n_reg)));
    }
    for &(s, p, q, homog) in &request.besov {
        rep.besov.push(((s, p, q, homog), besov(bank, field, s, p, q, homog)?));
    }
    if request.weighted {
        rep.weighted = Some(weighted_l2(profile.unwrap_or(field)));
    }
    if let Some((t, delta, n_reg)) = request.x_norm {
        let prof = profile.ok_or_else(|| {
            Error::InvalidParameter("bootstrap-norm components need the profile".into())
        })?;
        rep.x_norm_components = Some(x_norm_components(field, prof, t, delta, n_reg)?);
    }
    Ok(rep)
}

/// Least-squares fit of `log(value) = c + exponent * log(t)`.
/// Returns the exponent and the coefficient of determination.
pub fn decay_fit<T: Real>(series: &[(T, T)]) -> Result<(T, T)> {
    if series.len() < 8 {
        return Err(Error::InvalidParameter(format!(
            "decay fit needs at least 8 samples, got {}",
            series.len()
        )));
    }
    if series.iter().any(|&(t, v)| t <= T::zero() || v <= T::zero()) {
        return Err(Error::InvalidParameter(
            "decay fit requires positive times and values".into(),
        ));
    }
    let pts: Vec<(T, T)> = series.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let n = T::of_usize(pts.len());
    let sx: T = pts.iter().map(|p| p.0).sum();
    let sy: T = pts.iter().map(|p| p.1).sum();
    let sxx: T = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: T = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == T::zero() {
        return Err(Error::InvalidParameter("degenerate abscissae in decay fit".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let ybar = sy / n;
    let mut ss_res = T::zero();
    let mut ss_tot = T::zero();
    for (x, y) in pts {
        let e = y - (intercept + slope * x);
        ss_res += e * e;
        let d = y - ybar;
        ss_tot += d * d;
    }
    let r2 = if ss_tot == T::zero() { T::one() } else { T::one() - ss_res / ss_tot };
    Ok((slope, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FourierGrid;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian_field(n: usize, l: f64) -> SpectralField<f64> {
        let g = FourierGrid::new(n, l).unwrap();
        SpectralField::from_fn_centered(&g, |x| {
            Cplx::new((-0.5 * (x[0] * x[0] + x[1] * x[1])).exp(), 0.0)
        })
    }

    #[test]
    fn gaussian_l2_matches_closed_form() {
        let f = gaussian_field(128, 24.0);
        // ||exp(-|x|^2/2)||_2 = sqrt(pi) on R^2; box tails are negligible.
        let got = lebesgue(&f, 2.0).unwrap();
        assert_relative_eq!(got, std::f64::consts::PI.sqrt(), max_relative = 1e-8);
    }

    #[test]
    fn rejects_p_below_one() {
        let f = gaussian_field(16, 8.0);
        assert!(lebesgue(&f, 0.5).is_err());
    }

    #[test]
    fn besov_b022_comparable_to_l2() {
        let g = FourierGrid::new(32, 2.0 * std::f64::consts::PI).unwrap();
        let bank = LittlewoodPaleyBank::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let f = SpectralField::random(&g, 10, &mut rng);
            // Remove the mean: homogeneous shells never see it.
            let mean = SpectralField::from_fn(&g, |_| f.mean());
            let f = f.sub(&mean).unwrap();
            let b = besov(&bank, &f, 0.0, 2.0, 2.0, true).unwrap();
            let l2 = f.l2();
            let ratio = b / l2;
            // Near-orthogonality of at most 3 overlapping shells.
            assert!((0.5..=1.8).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn hn_two_definitions_equivalent() {
        let g = FourierGrid::new(32, 6.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let f = SpectralField::random(&g, 9, &mut rng);
            let via_multiplier = sobolev_hn(&f, 3.0);
            let via_wkp = sobolev_wkp(&f, 3, 2.0).unwrap();
            let ratio = via_multiplier / via_wkp;
            // Equivalent norms: (1+|xi|^2)^{3/2} vs 1 + |xi|^3 on the lattice.
            assert!((0.3..=3.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn weighted_moment_of_gaussian() {
        let f = gaussian_field(128, 24.0);
        // ||x exp(-|x|^2/2)||_2 = sqrt(pi): int |x|^2 exp(-|x|^2) = pi.
        let w = weighted_l2(&f);
        assert_relative_eq!(w.value, std::f64::consts::PI.sqrt(), max_relative = 1e-6);
        assert!(!w.contaminated());
    }

    #[test]
    fn weighted_norm_of_zero_field() {
        let g = FourierGrid::new(16, 4.0).unwrap();
        let z = SpectralField::zero(&g);
        assert_eq!(weighted_l2(&z).value, 0.0);
    }

    #[test]
    fn weighted_triangle_under_translation() {
        let g = FourierGrid::new(128, 24.0).unwrap();
        let f = gaussian_field(128, 24.0);
        let a = 2.0;
        let shifted = SpectralField::from_fn_centered(&g, |x: [f64; 2]| {
            Cplx::new((-0.5 * ((x[0] - a) * (x[0] - a) + x[1] * x[1])).exp(), 0.0)
        });
        let base = weighted_l2(&f).value;
        let moved = weighted_l2(&shifted).value;
        let mass = f.l2();
        // ||x g(x-a)|| <= ||x g|| + |a| ||g|| and >= ||x g|| - |a| ||g||.
        assert!(moved <= base + a * mass + 1e-8);
        assert!(moved >= (base - a * mass).abs() - 1e-8);
    }

    #[test]
    fn compute_norms_batches_requests() {
        let g = FourierGrid::new(32, 8.0).unwrap();
        let bank = LittlewoodPaleyBank::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = SpectralField::random(&g, 9, &mut rng);
        let profile = f.half_wave(2.0);
        let req = NormRequest {
            lebesgue: vec![2.0, f64::INFINITY],
            sobolev_wkp: vec![(4, f64::INFINITY)],
            sobolev_hn: vec![8.0],
            besov: vec![(0.0, 2.0, 2.0, true)],
            weighted: true,
            x_norm: Some((2.0, 0.01, 8.0)),
        };
        let rep = compute_norms(&bank, &f, Some(&profile), &req).unwrap();
        assert_eq!(rep.lebesgue.len(), 2);
        assert!((rep.lebesgue[0].1 - f.l2()).abs() < 1e-12 * f.l2());
        assert!((rep.lebesgue[1].1 - f.linf()).abs() < 1e-12 * f.linf());
        assert_eq!(rep.sobolev_wkp.len(), 1);
        assert_eq!(rep.sobolev_hn.len(), 1);
        assert_eq!(rep.besov.len(), 1);
        assert!(rep.weighted.is_some());
        let x = rep.x_norm_components.unwrap();
        assert!((x.mass - f.l2()).abs() < 1e-12 * f.l2());
        assert!(x.total() > 0.0);
    }

    #[test]
    fn decay_fit_recovers_exact_power_law() {
        let series: Vec<(f64, f64)> = (1..=12).map(|i| (i as f64 * 1.7, 5.0 / (i as f64 * 1.7))).collect();
        let (ex, r2) = decay_fit(&series).unwrap();
        assert!((ex + 1.0).abs() < 1e-10);
        assert!(r2 > 1.0 - 1e-12);
    }

    #[test]
    fn decay_fit_constant_series() {
        let series: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 3.25)).collect();
        let (ex, _) = decay_fit(&series).unwrap();
        assert!(ex.abs() < 1e-12);
    }

    #[test]
    fn decay_fit_rejects_bad_input() {
        let short: Vec<(f64, f64)> = (1..=5).map(|i| (i as f64, 1.0)).collect();
        assert!(decay_fit(&short).is_err());
        let negative: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, -1.0)).collect();
        assert!(decay_fit(&negative).is_err());
    }
}
