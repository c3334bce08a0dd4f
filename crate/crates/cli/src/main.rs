//! Experiment runner: every probe of the laboratory as a subcommand with
//! reproducible CSV artifacts.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical abort (partial
//! ledger flushed).

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use config::{Config, ConfigError};
use wwlab_core::dno::{dno_compare, DnoWorkspace, SurfaceState};
use wwlab_core::evolution::{
    run, write_snapshot, DnoPath, RunOutcome, RunParams, SimState,
};
use wwlab_core::lp::LittlewoodPaleyBank;
use wwlab_core::norms::decay_fit;
use wwlab_core::pseudo_product::{bound_probe, model_operator_apply, random_multiscale, ModelVariant};
use wwlab_core::resonance::{AnyPattern, ResonanceKind, ResonanceMap};
use wwlab_core::scalar::{scale2, sub2};
use wwlab_core::symbols::{eval_quadratic, Pattern2, Pattern3, QuadSymbol, Sign};
use wwlab_core::{C64, Field64, Grid64};

#[derive(Parser)]
#[command(
    name = "wwlab",
    about = "Pseudo-spectral laboratory for the cubic gravity water-wave system",
    version
)]
struct Cli {
    /// Flat key-value config file (TOML subset)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV artifacts
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// RNG seed (fixed seed => byte-identical outputs)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Validate the configuration, print the plan, write nothing
    #[arg(long, global = true)]
    dry_run: bool,
    /// Repeatable KEY=VAL config override
    #[arg(long = "override", global = true, value_name = "KEY=VAL")]
    overrides: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the cubic system and record the diagnostics ledger
    Simulate,
    /// Sample a resonant set and write it as CSV
    ResonanceMap,
    /// Series-vs-boundary-integral amplitude sweep
    DnoVerify,
    /// Linear-flow dispersive decay probe
    DecayStudy,
    /// Vanishing-exponent checks of the multilinear symbols
    SymbolCheck,
    /// Empirical Lebesgue-bound probes of the dyadic model operators
    BoundProbe,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let cfg = Config::load(cli.config.as_deref(), &cli.overrides)?;
    let seed = match cli.seed {
        Some(s) => s,
        None => cfg.u64("seed", 0)?,
    };
    if !cli.dry_run {
        std::fs::create_dir_all(&cli.out)
            .map_err(|e| ConfigError(format!("cannot create {}: {e}", cli.out.display())))?;
    }
    match cli.cmd {
        Cmd::Simulate => cmd_simulate(&cfg, &cli.out, cli.dry_run),
        Cmd::ResonanceMap => cmd_resonance_map(&cfg, &cli.out, cli.dry_run),
        Cmd::DnoVerify => cmd_dno_verify(&cfg, &cli.out, cli.dry_run),
        Cmd::DecayStudy => cmd_decay_study(&cfg, &cli.out, cli.dry_run),
        Cmd::SymbolCheck => cmd_symbol_check(&cfg, &cli.out, cli.dry_run),
        Cmd::BoundProbe => cmd_bound_probe(&cfg, &cli.out, seed, cli.dry_run),
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, ConfigError> {
    let path = out.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))
}

fn run_params(cfg: &Config) -> Result<RunParams<f64>, Box<dyn std::error::Error>> {
    let n = cfg.usize("n", 64)?;
    let length = cfg.f64("length", 2.0 * std::f64::consts::PI)?;
    let amplitude = cfg.f64("amplitude", 0.01)?;
    let mut p = RunParams::new(n, length, amplitude);
    p.carrier = [cfg.i64("carrier_x", 4)?, cfg.i64("carrier_y", 0)?];
    p.envelope_width = cfg.f64("envelope_width", length * 0.1)?;
    p.dt = cfg.f64("dt", 0.05)?;
    p.t_end = cfg.f64("t_end", 20.0)?;
    p.delta = cfg.f64("delta", 0.01)?;
    p.sobolev_n = cfg.usize("sobolev_n", 8)? as u32;
    p.cadence = cfg.usize("cadence", 20)?;
    p.nonlinear = cfg.string("flow", "cubic")? != "linear";
    p.energy_path = match cfg.string("dno", "series2")?.as_str() {
        "series1" => DnoPath::Series(1),
        "series2" => DnoPath::Series(2),
        "series3" => DnoPath::Series(3),
        "bie" => DnoPath::BoundaryIntegral,
        other => return Err(Box::new(ConfigError(format!("unknown dno path '{other}'")))),
    };
    p.validate()?;
    Ok(p)
}

fn cmd_simulate(
    cfg: &Config,
    out: &Path,
    dry: bool,
) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let p = run_params(cfg)?;
    if dry {
        println!(
            "simulate: n={} L={} eps={} dt={} t in [2, {}] dno={:?}\nwould write ledger.csv, probe_pairs.csv, initial_profile.snap to {}",
            p.n, p.length, p.amplitude, p.dt, p.t_end, p.energy_path, out.display()
        );
        if !cfg.render().is_empty() {
            println!("resolved config overrides:\n{}", cfg.render());
        }
        return Ok(ExitCode::SUCCESS);
    }
    let initial = p.initial_state()?;
    if initial.gauge_exceeded() {
        eprintln!(
            "warning: ||h||_W^{{5,3}} = {:.3} exceeds the small-data gauge; the cubic truncation is out of its regime",
            initial.gauge()
        );
    }
    let (ledger, outcome) = run(&p)?;
    ledger.write_csv(&mut create(out, "ledger.csv")?)?;
    ledger.write_probe_csv(&mut create(out, "probe_pairs.csv")?)?;
    // final profile snapshot for downstream tooling
    let final_state = SimState::new(p.initial_state()?);
    write_snapshot(&final_state.f, &mut create(out, "initial_profile.snap")?)?;
    match outcome {
        RunOutcome::Completed => Ok(ExitCode::SUCCESS),
        RunOutcome::NumericalAbort => {
            eprintln!("numerical abort: non-finite values; partial ledger flushed");
            Ok(ExitCode::from(3))
        }
    }
}

fn parse_pattern(raw: &str) -> Result<AnyPattern, ConfigError> {
    let signs: Result<Vec<Sign>, _> = raw
        .chars()
        .map(|c| match c {
            '+' => Ok(Sign::Plus),
            '-' => Ok(Sign::Minus),
            other => Err(ConfigError(format!("bad sign '{other}' in pattern '{raw}'"))),
        })
        .collect();
    let signs = signs?;
    match signs.len() {
        2 => Ok(AnyPattern::Quadratic(Pattern2(signs[0], signs[1]))),
        3 => Ok(AnyPattern::Cubic(Pattern3(signs[0], signs[1], signs[2]))),
        n => Err(ConfigError(format!("pattern '{raw}' has length {n}, need 2 or 3"))),
    }
}

fn cmd_resonance_map(
    cfg: &Config,
    out: &Path,
    dry: bool,
) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let pattern = parse_pattern(&cfg.string("pattern", "--+")?)?;
    let kind = match cfg.string("kind", "space")?.as_str() {
        "time" => ResonanceKind::Time,
        "space" => ResonanceKind::Space,
        "spacetime" => ResonanceKind::SpaceTime,
        other => return Err(Box::new(ConfigError(format!("unknown kind '{other}'")))),
    };
    let resolution = cfg.usize("resolution", 24)?;
    let tol = cfg.f64("tol", 1e-3)?;
    if dry {
        println!(
            "resonance-map: pattern={pattern:?} kind={kind:?} resolution={resolution} tol={tol}\nwould write resonance.csv to {}",
            out.display()
        );
        return Ok(ExitCode::SUCCESS);
    }
    let map = ResonanceMap::<f64>::sample(pattern, kind, resolution, tol)?;
    map.write_csv(&mut create(out, "resonance.csv")?)?;
    println!("sampled {} points", map.points.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_dno_verify(
    cfg: &Config,
    out: &Path,
    dry: bool,
) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let n = cfg.usize("n", 64)?;
    let length = cfg.f64("length", 2.0 * std::f64::consts::PI)?;
    let epsilons = cfg.f64_list("epsilons", &[0.04, 0.02, 0.01, 0.005])?;
    let orders: Vec<u32> = cfg
        .f64_list("orders", &[1.0, 2.0, 3.0])?
        .into_iter()
        .map(|v| v as u32)
        .collect();
    if dry {
        println!(
            "dno-verify: n={n} L={length} epsilons={epsilons:?} orders={orders:?}\nwould write dno_compare.csv to {}",
            out.display()
        );
        return Ok(ExitCode::SUCCESS);
    }
    let grid = Grid64::new(n, length)?;
    let h = Field64::from_fn(&grid, |x| C64::new((2.0 * x[0]).cos(), 0.0));
    let psi = Field64::from_fn(&grid, |x| C64::new(x[0].sin() + x[1].cos(), 0.0));
    let unit = SurfaceState::new(h, psi, 2.0)?;
    let mut ws = DnoWorkspace::new(&grid);
    let report = dno_compare(&mut ws, &unit, &orders, &epsilons)?;
    let mut w = create(out, "dno_compare.csv")?;
    writeln!(w, "epsilon,order,l2_err,linf_err,fitted_exponent")?;
    for (eps, order, l2, linf) in &report.rows {
        let ex = report.exponent(*order).unwrap_or(f64::NAN);
        writeln!(w, "{eps},{order},{l2},{linf},{ex}")?;
    }
    for &(order, ex) in &report.exponents {
        println!("order {order}: fitted exponent {ex}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_decay_study(
    cfg: &Config,
    out: &Path,
    dry: bool,
) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let n = cfg.usize("n", 256)?;
    let length = cfg.f64("length", 140.0)?;
    let t_end = cfg.f64("t_end", 100.0)?;
    let samples = cfg.usize("samples", 40)?;
    let mut p = RunParams::new(n, length, cfg.f64("amplitude", 0.01)?);
    p.carrier = [cfg.i64("carrier_x", 22)?, cfg.i64("carrier_y", 0)?];
    p.envelope_width = cfg.f64("envelope_width", 4.0)?;
    p.t_end = t_end;
    if dry {
        println!(
            "decay-study: n={n} L={length} t in [2, {t_end}], {samples} samples\nwould write decay.csv, decay_fit.csv to {}",
            out.display()
        );
        return Ok(ExitCode::SUCCESS);
    }
    let state0 = SimState::new(p.initial_state()?);
    let horizon = p.wraparound_time(&state0);
    if horizon < t_end {
        eprintln!("warning: wraparound horizon {horizon:.1} before t_end {t_end}; decay law is contaminated past it");
    }
    // linear flow: exact half-wave propagation of u, sampled sup norm
    let series = linear_decay_series(&state0, t_end, samples);
    let mut w = create(out, "decay.csv")?;
    writeln!(w, "t,sup_norm,t_times_sup")?;
    for (t, v) in &series {
        writeln!(w, "{t},{v},{}", t * v)?;
    }
    let (exponent, r2) = decay_fit(&series)?;
    let mut w = create(out, "decay_fit.csv")?;
    writeln!(w, "exponent,r_squared,wraparound_horizon")?;
    writeln!(w, "{exponent},{r2},{horizon}")?;
    println!("sup-norm decay exponent {exponent} (r^2 = {r2})");
    Ok(ExitCode::SUCCESS)
}

/// Sup norm of the linearly propagated unknown, evaluated on a 2x upsampled
/// grid so the moving peak is not under-sampled.
fn linear_decay_series(state0: &SimState<f64>, t_end: f64, samples: usize) -> Vec<(f64, f64)> {
    let mut series = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = 2.0 + (t_end - 2.0) * (i as f64) / (samples.max(2) - 1) as f64;
        let u = state0.u.half_wave(-(t - 2.0));
        let up = wwlab_core::dno::interp::Upsampled::new(&u.real_part());
        let ui = wwlab_core::dno::interp::Upsampled::new(&u.imag_part());
        let g = u.grid();
        let nn = g.n() * 2;
        let mut sup: f64 = 0.0;
        for iy in 0..nn {
            for ix in 0..nn {
                let x = ix as f64 * g.length() / nn as f64;
                let y = iy as f64 * g.length() / nn as f64;
                let re = up.at(x, y);
                let im = ui.at(x, y);
                sup = sup.max((re * re + im * im).sqrt());
            }
        }
        series.push((t, sup));
    }
    series
}

fn cmd_symbol_check(
    cfg: &Config,
    out: &Path,
    dry: bool,
) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let kmin = cfg.usize("k_min", 4)? as u32;
    let kmax = cfg.usize("k_max", 20)? as u32;
    if dry {
        println!("symbol-check: dyadic scales 2^-{kmin}..2^-{kmax}\nwould write symbol_check.csv to {}", out.display());
        return Ok(ExitCode::SUCCESS);
    }
    let xi = [1.0, 0.0];
    let dir = [0.6, 0.8];
    let eta_fixed = [0.9, 0.1];
    let cases: Vec<(&str, &str, f64, Box<dyn Fn(f64) -> f64>)> = vec![
        (
            "m1",
            "eta->0",
            0.5,
            Box::new(move |d| eval_quadratic(QuadSymbol::M1, xi, scale2(d, dir)).unwrap().norm()),
        ),
        (
            "m1",
            "xi-eta->0",
            2.0,
            Box::new(move |d| {
                eval_quadratic(QuadSymbol::M1, xi, sub2(xi, scale2(d, dir))).unwrap().norm()
            }),
        ),
        (
            "m2",
            "xi->0",
            2.5,
            Box::new(move |d| eval_quadratic(QuadSymbol::M2, scale2(d, dir), eta_fixed).unwrap().norm()),
        ),
        (
            "m2",
            "eta->0",
            0.5,
            Box::new(move |d| eval_quadratic(QuadSymbol::M2, xi, scale2(d, dir)).unwrap().norm()),
        ),
        (
            "m2",
            "xi-eta->0",
            0.5,
            Box::new(move |d| {
                eval_quadratic(QuadSymbol::M2, xi, sub2(xi, scale2(d, dir))).unwrap().norm()
            }),
        ),
    ];
    let mut w = create(out, "symbol_check.csv")?;
    writeln!(w, "symbol,path,expected_exponent,fitted_exponent,r_squared")?;
    for (name, path, expected, eval) in cases {
        let series: Vec<(f64, f64)> = (kmin..=kmax)
            .map(|k| {
                let d = 2.0f64.powi(-(k as i32));
                (d, eval(d).max(1e-300))
            })
            .collect();
        let (fitted, r2) = decay_fit(&series)?;
        writeln!(w, "{name},{path},{expected},{fitted},{r2}")?;
        println!("{name} along {path}: fitted {fitted} (expected {expected})");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bound_probe(
    cfg: &Config,
    out: &Path,
    seed: u64,
    dry: bool,
) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let n = cfg.usize("n", 256)?;
    let length = cfg.f64("length", 256.0)?;
    let ensemble = cfg.usize("ensemble", 25)?;
    let j_max = cfg.usize("j_max", 8)? as u32;
    if dry {
        println!(
            "bound-probe: n={n} L={length} ensemble={ensemble} J=0..{j_max}\nwould write bound_probe.csv to {}",
            out.display()
        );
        return Ok(ExitCode::SUCCESS);
    }
    let grid = Grid64::new(n, length)?;
    let bank = LittlewoodPaleyBank::new(&grid);
    let kmax = wwlab_core::pseudo_product::quad_cut(n);
    let mut w = create(out, "bound_probe.csv")?;
    writeln!(w, "variant,j_offset,max_ratio,stabilization")?;
    for (vi, variant) in [ModelVariant::One, ModelVariant::Two, ModelVariant::Three]
        .into_iter()
        .enumerate()
    {
        for j in 0..=j_max {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((vi as u64) << 32 | j as u64));
            let report = bound_probe(
                (&[6.0, 6.0, 6.0], 2.0),
                ensemble,
                || random_multiscale(&bank, kmax, &mut rng),
                |fields| model_operator_apply(&bank, variant, j, &fields[0], &fields[1], &fields[2]),
            )?;
            writeln!(w, "{},{j},{},{}", vi + 1, report.max_ratio(), report.stabilization())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
