//! Acceptance suite: every exit criterion of the laboratory, one test and
//! one printed pass/fail line per criterion, at the stated tolerances.
//!
//! Run with
//! `cargo test --test acceptance -- --nocapture --test-threads=1`
//! to see the lines in order; the suite also passes under the default
//! parallel harness.

use std::time::Instant;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wwlab_core::dno::{dno_compare, dno_series, DnoWorkspace, SurfaceState};
use wwlab_core::evolution::{
    complex_unknown, conserved_energy, run, step, DnoPath, RunParams, SimState,
};
use wwlab_core::lp::LittlewoodPaleyBank;
use wwlab_core::norms::decay_fit;
use wwlab_core::pseudo_product::{
    bound_probe, cubic_cut, model_operator_apply, mul_dealiased, mul_dealiased3, paraproduct_split,
    quad_cut, random_multiscale, BilinearOperator, ModelVariant, TrilinearOperator,
};
use wwlab_core::resonance::{
    null_structure_report, AnyPattern, ResonanceKind, ResonanceMap,
};
use wwlab_core::scalar::{norm2, scale2, sub2};
use wwlab_core::symbols::{
    cat_residual, eval_cubic, eval_quadratic, normal_form_multiplier, phase2, CubicSymbol, Locus,
    Pattern2, Pattern3, QuadSymbol,
};
use wwlab_core::{Field64, Grid64};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn report(id: u32, name: &str, detail: String, started: Instant, budget_s: f64) {
    let dt = started.elapsed().as_secs_f64();
    println!("criterion {id:02} ({name}): PASS - {detail} [{dt:.1} s]");
    assert!(dt < budget_s, "criterion {id} exceeded its runtime budget: {dt:.1} s >= {budget_s} s");
}

#[test]
fn criterion_01_null_structure_exponents() {
    let t0 = Instant::now();
    let rep = null_structure_report::<f64>(QuadSymbol::M1, Pattern2::MM, 16).unwrap();
    let mut eta_exp = f64::NAN;
    let mut xe_exp = f64::NAN;
    for b in &rep.branches {
        match b.locus {
            Locus::Eta => eta_exp = b.exponent,
            Locus::XiMinusEta => xe_exp = b.exponent,
            _ => {}
        }
    }
    assert!((eta_exp - 0.5).abs() <= 0.05, "eta->0 exponent {eta_exp}");
    assert!((xe_exp - 2.0).abs() <= 0.05, "xi-eta->0 exponent {xe_exp}");
    report(
        1,
        "null structure",
        format!("m1 vanishing exponents: eta->0 {eta_exp:.3} (0.5 +- 0.05), xi-eta->0 {xe_exp:.3} (2.0 +- 0.05)"),
        t0,
        10.0,
    );
}

#[test]
fn criterion_02_resonance_geometry() {
    let t0 = Instant::now();
    let tol = 1e-3;
    let space = ResonanceMap::<f64>::sample(
        AnyPattern::Cubic(Pattern3::MMP),
        ResonanceKind::Space,
        20,
        tol,
    )
    .unwrap();
    assert!(space.points.len() >= 1000, "only {} space-resonant points", space.points.len());
    let inside = space.points.iter().filter(|p| p.abs_phi < 10.0 * tol).count();
    assert_eq!(
        inside,
        space.points.len(),
        "{} of {} sampled space-resonant points left the time-resonant set",
        space.points.len() - inside,
        space.points.len()
    );
    let time_pp = ResonanceMap::<f64>::sample(
        AnyPattern::Quadratic(Pattern2::PP),
        ResonanceKind::Time,
        16,
        tol,
    )
    .unwrap();
    assert!(time_pp.points.is_empty(), "{} spurious (+,+) time resonances", time_pp.points.len());
    report(
        2,
        "resonance geometry",
        format!(
            "all {} sampled S_--+ points satisfy |phi| < 10 tol; (+,+) time set empty at tol 1e-3",
            space.points.len()
        ),
        t0,
        30.0,
    );
}

#[test]
fn criterion_03_gradient_identity_residual() {
    let t0 = Instant::now();
    let xi = [1.0, 0.0];
    let mut series = Vec::new();
    for i in 0..=10u32 {
        // locus distances geometrically spanning [1e-4, 1e-1]
        let d_locus = 0.1 * 1e-3f64.powf(i as f64 / 10.0);
        let d = d_locus / 2.0; // two unit-length offsets
        let eta = [xi[0] + d * 0.6, xi[1] + d * 0.8];
        let sigma = [xi[0] - d * 0.28, xi[1] + d * 0.96];
        let r = cat_residual(xi, eta, sigma).unwrap();
        assert!((r.locus_distance - d_locus).abs() < 1e-12);
        series.push((r.locus_distance, r.residual.max(1e-300)));
    }
    let (slope, _) = decay_fit(&series).unwrap();
    assert!(slope >= 1.9, "gradient-identity residual slope {slope}");
    report(
        3,
        "near-diagonal gradient identity",
        format!("least-squares residual scales with exponent {slope:.3} >= 1.9 over d in [1e-4, 1e-1]"),
        t0,
        10.0,
    );
}

#[test]
fn criterion_04_dno_cross_validation() {
    let t0 = Instant::now();
    let g = Grid64::new(128, TWO_PI).unwrap();
    let h = Field64::from_fn(&g, |x| Complex::new((2.0 * x[0]).cos(), 0.0));
    let psi = Field64::from_fn(&g, |x| Complex::new(x[0].sin() + x[1].cos(), 0.0));
    let unit = SurfaceState::new(h, psi, 2.0).unwrap();
    let mut ws = DnoWorkspace::new(&g);
    let report_rows =
        dno_compare(&mut ws, &unit, &[1, 2, 3], &[0.04, 0.02, 0.01, 0.005]).unwrap();
    let mut detail = String::new();
    for order in [1u32, 2, 3] {
        let e = report_rows.exponent(order).unwrap();
        let expected = (order + 1) as f64;
        assert!(
            (e - expected).abs() <= 0.3,
            "order {order}: amplitude exponent {e} (expected {expected} +- 0.3)"
        );
        detail.push_str(&format!("order {order}: {e:.3} ({expected} +- 0.3); "));
    }
    report(4, "series-vs-boundary-integral", detail, t0, 300.0);
}

#[test]
fn criterion_05_energy_conservation() {
    let t0 = Instant::now();
    // E at series order 2: differs from the conserved series-3 functional by
    // the quartic term, so its drift carries the fourth power of epsilon.
    let drift_and_energy = |eps: f64| {
        let mut p = RunParams::new(128usize, TWO_PI, eps);
        p.carrier = [4, 0];
        p.envelope_width = TWO_PI * 0.1;
        p.dt = 0.05;
        p.t_end = 50.0;
        p.cadence = 20;
        p.energy_path = DnoPath::Series(2);
        let (ledger, outcome) = run(&p).unwrap();
        assert_eq!(outcome, wwlab_core::evolution::RunOutcome::Completed);
        let e0 = ledger.rows[0].energy;
        let drift = ledger
            .rows
            .iter()
            .map(|r| (r.energy - e0).abs())
            .fold(0.0f64, f64::max);
        assert!((ledger.rows.last().unwrap().t - 50.0).abs() < 1.0);
        (drift, e0)
    };
    let (d_02, _) = drift_and_energy(0.02);
    let (d_01, e_01) = drift_and_energy(0.01);
    let (d_005, _) = drift_and_energy(0.005);
    let rel = d_01 / e_01;
    assert!(rel <= 1e-3, "relative drift {rel:e} at eps = 0.01 over t in [2, 50]");
    let pts = [(0.02f64, d_02), (0.01, d_01), (0.005, d_005)];
    let sx: f64 = pts.iter().map(|p| p.0.ln()).sum();
    let sy: f64 = pts.iter().map(|p| p.1.ln()).sum();
    let sxx: f64 = pts.iter().map(|p| p.0.ln().powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.0.ln() * p.1.ln()).sum();
    let slope = (3.0 * sxy - sx * sy) / (3.0 * sxx - sx * sx);
    assert!((slope - 4.0).abs() <= 0.5, "drift-vs-amplitude exponent {slope}");
    report(
        5,
        "energy conservation",
        format!("relative drift {rel:.2e} <= 1e-3 at eps 0.01; drift exponent {slope:.3} (4 +- 0.5)"),
        t0,
        600.0,
    );
}

#[test]
fn criterion_06_dispersive_decay() {
    let t0 = Instant::now();
    // Broadband localized bump: every dyadic shell is past its dispersal
    // time by t = 2, so the sup norm shows the clean 1/t law.
    let n = 512usize;
    let l = 280.0;
    let g = Grid64::new(n, l).unwrap();
    let w0 = 1.6f64;
    let u0 = Field64::from_fn_centered(&g, |x| {
        Complex::new((-(x[0] * x[0] + x[1] * x[1]) / (2.0 * w0 * w0)).exp(), 0.0)
    });
    // no-wraparound check: slowest significant shell travels less than L/2
    let surface = SurfaceState::new(u0.clone(), Field64::zero(&g), 2.0).unwrap();
    let state = SimState::new(surface);
    let mut p = RunParams::new(n, l, 1.0);
    p.envelope_width = w0;
    let horizon = p.wraparound_time(&state);
    let mut series = Vec::new();
    for i in 0..16 {
        let t = 2.0 * (100.0f64 / 2.0).powf(i as f64 / 15.0);
        let u = u0.half_wave(-(t - 2.0));
        let up_re = wwlab_core::dno::interp::Upsampled::new(&u.real_part());
        let up_im = wwlab_core::dno::interp::Upsampled::new(&u.imag_part());
        let nn = n * 2;
        let mut sup: f64 = 0.0;
        for iy in 0..nn {
            for ix in 0..nn {
                let x = ix as f64 * l / nn as f64;
                let y = iy as f64 * l / nn as f64;
                let re = up_re.at(x, y);
                let im = up_im.at(x, y);
                sup = sup.max((re * re + im * im).sqrt());
            }
        }
        series.push((t, sup));
    }
    let (exponent, r2) = decay_fit(&series).unwrap();
    assert!(
        (exponent + 1.0).abs() <= 0.1,
        "sup-norm decay exponent {exponent} (expected -1.0 +- 0.1, r2 {r2})"
    );
    report(
        6,
        "dispersive decay",
        format!("linear sup-norm exponent {exponent:.3} over t in [2, 100] (r2 {r2:.4}, horizon {horizon:.0})"),
        t0,
        120.0,
    );
}

#[test]
fn criterion_07_operator_exactness() {
    let t0 = Instant::now();
    let g = Grid64::new(32, 5.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // m = 1 reproduces de-aliased products
    let f = Field64::random(&g, quad_cut(32), &mut rng);
    let h = Field64::random(&g, quad_cut(32), &mut rng);
    let op = BilinearOperator::general(std::sync::Arc::new(|_, _| Ok(Complex::new(1.0, 0.0))));
    let bi_err = op
        .apply(&f, &h)
        .unwrap()
        .sub(&mul_dealiased(&f, &h).unwrap())
        .unwrap()
        .l2();
    assert!(bi_err < 1e-10, "bilinear unit-symbol error {bi_err:e}");
    let f3 = Field64::random(&g, cubic_cut(32), &mut rng);
    let g3 = Field64::random(&g, cubic_cut(32), &mut rng);
    let h3 = Field64::random(&g, cubic_cut(32), &mut rng);
    let op3 = TrilinearOperator::general(std::sync::Arc::new(|_, _, _| Ok(Complex::new(1.0, 0.0))));
    let tri_err = op3
        .apply(&f3, &g3, &h3)
        .unwrap()
        .sub(&mul_dealiased3(&f3, &g3, &h3).unwrap())
        .unwrap()
        .l2();
    assert!(tri_err < 1e-10, "trilinear unit-symbol error {tri_err:e}");

    // 16^2 brute-force oracle for both cubic symbols
    let gs = Grid64::new(16, 5.0).unwrap();
    let a = Field64::random(&gs, cubic_cut(16), &mut rng);
    let b = Field64::random(&gs, cubic_cut(16), &mut rng);
    let c = Field64::random(&gs, cubic_cut(16), &mut rng);
    let mut worst_oracle: f64 = 0.0;
    for which in [CubicSymbol::M3, CubicSymbol::M4] {
        let op = TrilinearOperator::general(std::sync::Arc::new(move |xi, eta, sigma| {
            eval_cubic(which, xi, eta, sigma)
        }));
        let fast = op.apply(&a, &b, &c).unwrap();
        let brute = brute_force_trilinear(&gs, which, &a, &b, &c);
        worst_oracle = worst_oracle.max(fast.sub(&brute).unwrap().l2() / brute.l2().max(1e-30));
        assert!(
            fast.sub(&brute).unwrap().l2() <= 1e-9 * brute.l2().max(1.0),
            "{which:?} disagrees with the brute-force sum"
        );
    }

    // paraproduct pieces telescope
    let bank = LittlewoodPaleyBank::new(&g);
    let pieces = paraproduct_split(&bank, &f, &h).unwrap();
    let product = f.mul_pointwise(&h).unwrap();
    let para_err = pieces.total().sub(&product).unwrap().l2() / product.l2().max(1e-30);
    assert!(para_err < 1e-10, "paraproduct reconstruction error {para_err:e}");
    report(
        7,
        "operator exactness",
        format!(
            "unit symbols: bilinear {bi_err:.1e}, trilinear {tri_err:.1e}; brute-force m3/m4 rel err {worst_oracle:.1e}; paraproduct {para_err:.1e}"
        ),
        t0,
        60.0,
    );
}

/// Plain six-deep reference sum over raw lattice modes (no truncation-aware
/// shortcuts), independent of the operator implementation. The de-aliased
/// operator contract keeps output modes inside the 1/2-rule ball only, so
/// the reference zeroes the rest.
fn brute_force_trilinear(
    g: &Grid64,
    which: CubicSymbol,
    f1: &Field64,
    f2: &Field64,
    f3: &Field64,
) -> Field64 {
    let n = g.n();
    let l4 = (g.length() * g.length()).powi(2);
    let idx_of = |k: i64| -> Option<usize> {
        (0..n).find(|&i| g.k_int(i) == k)
    };
    let cut = cubic_cut(n);
    let mut spec = vec![Complex::new(0.0, 0.0); n * n];
    for qy in 0..n {
        for qx in 0..n {
            if g.k_int(qx).abs() > cut || g.k_int(qy).abs() > cut {
                continue;
            }
            let mut acc = Complex::new(0.0, 0.0);
            let xi = g.xi(qx, qy);
            for sy in 0..n {
                for sx in 0..n {
                    let c1 = f1.spec()[sy * n + sx];
                    if c1.norm() == 0.0 {
                        continue;
                    }
                    let sigma = g.xi(sx, sy);
                    for ey in 0..n {
                        for ex in 0..n {
                            let c2 = f2.spec()[ey * n + ex];
                            if c2.norm() == 0.0 {
                                continue;
                            }
                            let eta = g.xi(ex, ey);
                            let rx = g.k_int(qx) - g.k_int(ex) - g.k_int(sx);
                            let ry = g.k_int(qy) - g.k_int(ey) - g.k_int(sy);
                            let (ix, iy) = match (idx_of(rx), idx_of(ry)) {
                                (Some(a), Some(b)) => (a, b),
                                _ => continue,
                            };
                            let c3 = f3.spec()[iy * n + ix];
                            if c3.norm() == 0.0 {
                                continue;
                            }
                            let m = eval_cubic(which, xi, eta, sigma).unwrap();
                            acc += m * c1 * c2 * c3;
                        }
                    }
                }
            }
            spec[qy * n + qx] = acc / l4;
        }
    }
    Field64::from_spec(g, spec)
}

#[test]
fn criterion_08_model_operator_uniformity() {
    let t0 = Instant::now();
    // 512 cells give 12 active dyadic scales, so every J in 0..8 leaves
    // usable terms in all three model operators.
    let n = 512usize;
    let g = Grid64::new(n, 512.0).unwrap();
    let bank = LittlewoodPaleyBank::new(&g);
    let kmax = quad_cut(n);
    let scales: Vec<i32> = bank.active_scales().collect();
    let jmax = *scales.last().unwrap();
    let dx2 = (g.length() / n as f64).powi(2);
    let ensemble = 34; // 102 random multi-scale fields
    let norm_p = |phys: &[Complex<f64>], p: f64| -> f64 {
        let s: f64 = phys.iter().map(|c| c.norm().powf(p)).sum();
        (s * dx2).powf(1.0 / p)
    };
    let to_phys = |spec: &[Complex<f64>]| -> Vec<Complex<f64>> {
        let mut buf = spec.to_vec();
        wwlab_core::fft::fft2_inplace(&mut buf, n, false);
        let w = 1.0 / (g.length() * g.length());
        for c in &mut buf {
            *c *= w;
        }
        buf
    };
    let to_spec = |phys: &[Complex<f64>]| -> Vec<Complex<f64>> {
        let mut buf = phys.to_vec();
        wwlab_core::fft::fft2_inplace(&mut buf, n, true);
        for c in &mut buf {
            *c *= dx2;
        }
        buf
    };
    let project = |spec: &[Complex<f64>], sel: wwlab_core::lp::LpSelector| -> Vec<Complex<f64>> {
        let mut out = spec.to_vec();
        for iy in 0..n {
            for ix in 0..n {
                let m = if g.is_nyquist(ix, iy) {
                    0.0
                } else {
                    bank.multiplier(sel, g.xi_abs(ix, iy))
                };
                out[iy * n + ix] *= m;
            }
        }
        out
    };
    use wwlab_core::lp::LpSelector;
    // max ratio per (variant, J) across the ensemble
    let mut maxima = vec![vec![0.0f64; 9]; 3];
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..ensemble {
        let f = random_multiscale(&bank, kmax, &mut rng);
        let gg = random_multiscale(&bank, kmax, &mut rng);
        let h = random_multiscale(&bank, kmax, &mut rng);
        let denom = |field: &Field64| norm_p(field.phys(), 6.0);
        let den = denom(&f) * denom(&gg) * denom(&h);
        if den == 0.0 {
            continue;
        }
        // shared shell data
        let shell_phys: Vec<(Vec<Complex<f64>>, Vec<Complex<f64>>)> = scales
            .iter()
            .map(|&j| {
                (
                    to_phys(&project(f.spec(), LpSelector::At(j))),
                    to_phys(&project(h.spec(), LpSelector::At(j))),
                )
            })
            .collect();
        let g_at: Vec<Vec<Complex<f64>>> = scales
            .iter()
            .map(|&j| to_phys(&project(gg.spec(), LpSelector::At(j))))
            .collect();
        let g_below: Vec<Vec<Complex<f64>>> = scales
            .iter()
            .map(|&j| to_phys(&project(gg.spec(), LpSelector::Below(j - 1))))
            .collect();
        // product shells in spectral form
        let prod_spec: Vec<Vec<Complex<f64>>> = shell_phys
            .iter()
            .map(|(a, b)| {
                let prod: Vec<Complex<f64>> = a.iter().zip(b).map(|(x, y)| x * y).collect();
                to_spec(&prod)
            })
            .collect();
        for big_j in 0..=8usize {
            let mut acc = vec![vec![Complex::new(0.0, 0.0); n * n]; 3];
            for (ji, &j) in scales.iter().enumerate() {
                let jp = j + big_j as i32;
                if jp > jmax {
                    continue;
                }
                let pi = scales.iter().position(|&x| x == jp).unwrap();
                let prod_at_j = to_phys(&project(&prod_spec[pi], LpSelector::At(j)));
                let prod_below = to_phys(&project(&prod_spec[pi], LpSelector::Below(j - 1)));
                for i in 0..n * n {
                    acc[0][i] += prod_at_j[i] * g_below[ji][i];
                    acc[1][i] += prod_below[i] * g_at[ji][i];
                    acc[2][i] += prod_at_j[i] * g_at[ji][i];
                }
            }
            for v in 0..3 {
                let ratio = norm_p(&acc[v], 2.0) / den;
                if ratio > maxima[v][big_j] {
                    maxima[v][big_j] = ratio;
                }
            }
        }
    }
    let mut detail = String::new();
    for (v, row) in maxima.iter().enumerate() {
        assert!(row.iter().all(|r| r.is_finite() && *r > 0.0), "variant {} ratios {row:?}", v + 1);
        // no monotone growth trend in J: least-squares slope of log ratio
        let nn = row.len() as f64;
        let sx: f64 = (0..row.len()).map(|j| j as f64).sum();
        let sy: f64 = row.iter().map(|r| r.ln()).sum();
        let sxx: f64 = (0..row.len()).map(|j| (j as f64).powi(2)).sum();
        let sxy: f64 = row.iter().enumerate().map(|(j, r)| j as f64 * r.ln()).sum();
        let slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
        assert!(
            slope <= 0.05,
            "variant {}: log max-ratio grows with J at slope {slope} (ratios {row:?})",
            v + 1
        );
        detail.push_str(&format!("v{} slope {:+.3} max {:.2e}; ", v + 1, slope, row.iter().cloned().fold(0.0, f64::max)));
    }
    report(
        8,
        "model-operator uniformity",
        format!("{detail}(J in 0..8, 102-field ensemble, no growth trend)"),
        t0,
        300.0,
    );
}

#[test]
fn criterion_09_normal_form_boundedness() {
    let t0 = Instant::now();
    let xi = [1.0, 0.0];
    let mut detail = String::new();
    for l in [QuadSymbol::M1, QuadSymbol::M2] {
        let max_at = |k: i32| -> f64 {
            let mut m: f64 = 0.0;
            for i in 0..512 {
                let th = i as f64 * TWO_PI / 512.0 + 0.003;
                let eta = scale2(2.0f64.powi(-k), [th.cos(), th.sin()]);
                if let Ok(mu) = normal_form_multiplier(l, Pattern2::MM, xi, eta) {
                    m = m.max(mu.norm());
                }
            }
            m
        };
        let mut prev = max_at(6);
        let mut final_ratio = f64::NAN;
        for k in 7..=22 {
            let cur = max_at(k);
            final_ratio = cur / prev;
            prev = cur;
        }
        assert!(
            (final_ratio - 1.0).abs() <= 0.05,
            "{l:?}: refinement ratio {final_ratio} has not stabilized"
        );
        detail.push_str(&format!("{l:?} sup {prev:.4}, ratio {final_ratio:.4}; "));
    }
    report(
        9,
        "normal-form boundedness",
        format!("|m_l / phi_--| stabilizes along eta -> 0: {detail}"),
        t0,
        30.0,
    );
}

#[test]
fn criterion_10_invariant_suite() {
    let t0 = Instant::now();
    let g = Grid64::new(32, TWO_PI).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);

    // unitarity of the half-wave group across |t| <= 100
    let f = Field64::random(&g, 9, &mut rng);
    for i in 0..10 {
        let t = -100.0 + 200.0 * (i as f64) / 9.0;
        let d = (f.half_wave(t).l2() - f.l2()).abs() / f.l2();
        assert!(d < 1e-12, "unitarity defect {d:e} at t = {t}");
    }

    // dyadic partition of unity
    let bank = LittlewoodPaleyBank::new(&g);
    let defect = bank.partition_defect();
    assert!(defect < 1e-10, "partition defect {defect:e}");

    // Hermitian symmetry of real fields
    let hr = Field64::random_real(&g, 9, &mut rng);
    assert!(hr.hermitian_defect() < 1e-12);

    // self-adjointness of both Dirichlet-Neumann paths
    let h = Field64::random_real(&g, 3, &mut rng).scale_re(0.01);
    let psi1 = Field64::random_real(&g, 3, &mut rng);
    let psi2 = Field64::random_real(&g, 3, &mut rng);
    let s1 = SurfaceState::new(h.clone(), psi1.clone(), 2.0).unwrap();
    let s2 = SurfaceState::new(h.clone(), psi2.clone(), 2.0).unwrap();
    for order in 1..=3 {
        let a = dno_series(&s1, order).unwrap().inner(&psi2).unwrap();
        let b = psi1.inner(&dno_series(&s2, order).unwrap()).unwrap();
        assert!((a - b).norm() < 1e-10 * a.norm().max(1.0), "series order {order} asymmetric");
    }
    let mut ws = DnoWorkspace::new(&g);
    let ga = ws.dno_bie(&s1).unwrap().inner(&psi2).unwrap();
    let gb = psi1.inner(&ws.dno_bie(&s2).unwrap()).unwrap();
    assert!((ga - gb).norm() < 1e-6 * ga.norm().max(1.0), "boundary integral asymmetric");

    // reality and mean preservation over a short nonlinear run
    let mut p = RunParams::new(32usize, TWO_PI, 0.02);
    p.envelope_width = TWO_PI * 0.1;
    let mut s = SimState::new(p.initial_state().unwrap());
    let mean0 = s.surface.h.mean().re;
    for _ in 0..40 {
        s = step(&s, 0.05, true).unwrap();
    }
    assert!(s.surface.h.max_imag() < 1e-10 && s.surface.psi.max_imag() < 1e-10);
    assert!((s.surface.h.mean().re - mean0).abs() < 1e-10);
    let rebuilt = complex_unknown(&s.surface.h, &s.surface.psi);
    assert!(rebuilt.sub(&s.u).unwrap().l2() < 1e-12 * s.u.l2());

    // step-order self-convergence (dt halving, error ratio 16 +- 20%)
    let base = SimState::new(p.initial_state().unwrap());
    let advance = |dt: f64| {
        let mut s = base.clone();
        for _ in 0..(0.8 / dt).round() as usize {
            s = step(&s, dt, true).unwrap();
        }
        s
    };
    let (c, m, fine) = (advance(0.2), advance(0.1), advance(0.05));
    let ratio = c.u.sub(&m.u).unwrap().l2() / m.u.sub(&fine.u).unwrap().l2();
    assert!((ratio - 16.0).abs() <= 3.2, "step-order ratio {ratio}");

    // the conserved functional stays flat along the flow
    let e0 = conserved_energy(&base.surface, DnoPath::Series(3), None).unwrap();
    let mut s = base.clone();
    let mut drift: f64 = 0.0;
    for _ in 0..30 {
        s = step(&s, 0.05, true).unwrap();
        let e = conserved_energy(&s.surface, DnoPath::Series(3), None).unwrap();
        drift = drift.max((e - e0).abs() / e0);
    }
    assert!(drift < 1e-7, "series-3 energy drift {drift:e}");

    report(
        10,
        "invariant suite",
        format!(
            "unitarity, partition ({defect:.1e}), Hermitian symmetry, DNO self-adjointness, reality/mean preservation, step order ({ratio:.1}), conserved functional ({drift:.1e})"
        ),
        t0,
        300.0,
    );
}
