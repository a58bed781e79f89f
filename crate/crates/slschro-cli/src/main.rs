//! Batch driver: reads a JSON config, runs one experiment, writes CSV/JSON
//! artifacts (and SLS1 field snapshots) into the output directory.
//!
//! Exit codes: 0 success, 2 config error, 3 validity-window exhaustion,
//! 4 numerical failure (non-finite state), 1 anything else.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use slschro_core::config::{config_digest, Config, Experiment};
use slschro_core::dispersive::{free_dispersive, FreeDispersiveParams};
use slschro_core::duhamel::{
    chain_bound_probe, delta_scaling_at_order, ito_isometry_check, modulated_probe, BoundForm,
    ProbeResult,
};
use slschro_core::ensemble::{fit_decay, run_ensemble, rho_moment, EnsembleParams};
use slschro_core::error::Error;
use slschro_core::field::ComplexField;
use slschro_core::grid::Grid;
use slschro_core::integrator::{evolve, noise_phase_step, strang_step};
use slschro_core::noise::sample_path;
use slschro_core::potential::PotentialSpec;
use slschro_core::scattering::{cauchy_table, CauchyParams};
use slschro_core::spectral::{free_propagate, gaussian_free_evolution, Spectral};

const EXIT_CONFIG: u8 = 2;
const EXIT_VALIDITY: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "slschro",
    about = "Simulation and verification toolkit for the linear Schrödinger equation with small multiplicative noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $SLSCHRO_OUT or ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; changes wall time, never results.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Table format.
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Exact free-flow decay oracle (δ = 0) with slope fit.
    FreeDispersive(RunArgs),
    /// Integrate a single path and write SLS1 snapshots.
    Simulate(RunArgs),
    /// Ensemble mixed-norm estimates and decay fits.
    Decay(RunArgs),
    /// Cauchy table of free-flow pullback differences.
    Scatter(RunArgs),
    /// Duhamel expansion scaling, Itô isometry and bound probes.
    Duhamel(RunArgs),
    /// Built-in property suite.
    Selftest(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::FreeDispersive(a) => ("free-dispersive", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Decay(a) => ("decay", a),
        Command::Scatter(a) => ("scatter", a),
        Command::Duhamel(a) => ("duhamel", a),
        Command::Selftest(a) => ("selftest", a),
    };
    match run(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::Grid(_) | Error::NormSpec(_) | Error::Potential(_) => {
                    EXIT_CONFIG
                }
                Error::ValidityWindow(_) => EXIT_VALIDITY,
                Error::NonFinite { .. } | Error::NonFinitePath { .. } => EXIT_NUMERICAL,
                _ => 1,
            })
        }
    }
}

struct Ctx {
    cfg: Config,
    digest: String,
    seed: u64,
    grid: Grid,
    smallness: Option<f64>,
    out: PathBuf,
    workers: Option<usize>,
    json_tables: bool,
}

impl Ctx {
    fn header(&self) -> String {
        format!(
            "digest={} seed={} smallness={}",
            self.digest,
            self.seed,
            self.smallness
                .map_or("null".to_string(), |s| s.to_string())
        )
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), Error> {
        fs::write(self.out.join(name), contents)?;
        Ok(())
    }

    fn write_table<T: Serialize>(
        &self,
        base: &str,
        csv: String,
        rows: &T,
    ) -> Result<(), Error> {
        if self.json_tables {
            let text = serde_json::to_string_pretty(rows)
                .map_err(|e| Error::Config(format!("serialize: {e}")))?;
            self.write(&format!("{base}.json"), &text)
        } else {
            self.write(&format!("{base}.csv"), &csv)
        }
    }

    fn potential(&self) -> PotentialSpec {
        self.cfg.potential.clone()
    }
}

fn run(subcommand: &str, args: &RunArgs) -> Result<(), Error> {
    let raw = fs::read(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let text = String::from_utf8(raw.clone())
        .map_err(|e| Error::Config(format!("config is not UTF-8: {e}")))?;
    let mut cfg = Config::parse(&text)?;
    let kind = match &cfg.experiment {
        Experiment::FreeDispersive { .. } => "free-dispersive",
        Experiment::Simulate { .. } => "simulate",
        Experiment::Decay { .. } => "decay",
        Experiment::Scatter { .. } => "scatter",
        Experiment::Duhamel { .. } => "duhamel",
        Experiment::Selftest {} => "selftest",
    };
    if kind != subcommand {
        return Err(Error::Config(format!(
            "config describes a `{kind}` experiment but the `{subcommand}` subcommand was invoked"
        )));
    }
    if let Some(seed) = args.seed {
        cfg.noise.master_seed = seed;
    }
    let grid = cfg.grid.build()?;
    let smallness = cfg.potential.smallness(grid.dim()).ok();
    let out = args
        .out
        .clone()
        .or_else(|| std::env::var_os("SLSCHRO_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out)?;
    let ctx = Ctx {
        digest: config_digest(&raw),
        seed: cfg.noise.master_seed,
        grid,
        smallness,
        out,
        workers: args.workers,
        json_tables: args.format == "json",
        cfg,
    };
    match ctx.cfg.experiment.clone() {
        Experiment::FreeDispersive {
            a,
            q,
            times,
            axis_n,
            axis_length,
        } => run_free_dispersive(&ctx, a, q, times, axis_n, axis_length),
        Experiment::Simulate { initial } => run_simulate(&ctx, &initial),
        Experiment::Decay {
            initial,
            bootstrap_check,
            bootstrap_factor,
        } => run_decay(&ctx, &initial, bootstrap_check, bootstrap_factor),
        Experiment::Scatter { initial, pairs } => run_scatter(&ctx, &initial, &pairs),
        Experiment::Duhamel {
            initial,
            expansion,
            isometry,
            probes,
        } => run_duhamel(&ctx, &initial, expansion, isometry, probes),
        Experiment::Selftest {} => run_selftest(&ctx),
    }
}

#[derive(Serialize)]
struct FitReport {
    q: f64,
    rho: f64,
    slope: f64,
    intercept: f64,
    ci95: f64,
    target_alpha: f64,
    bootstrap_range: bool,
    window: (f64, f64),
    n_points: usize,
}

impl From<&slschro_core::ensemble::DecayFit> for FitReport {
    fn from(f: &slschro_core::ensemble::DecayFit) -> Self {
        FitReport {
            q: f.q,
            rho: f.rho,
            slope: f.slope,
            intercept: f.intercept,
            ci95: f.ci95,
            target_alpha: f.target_alpha,
            bootstrap_range: f.bootstrap_range,
            window: f.window,
            n_points: f.n_points,
        }
    }
}

fn run_free_dispersive(
    ctx: &Ctx,
    a: f64,
    qs: Vec<f64>,
    times: Vec<f64>,
    axis_n: usize,
    axis_length: f64,
) -> Result<(), Error> {
    let d = ctx.grid.dim();
    let params = FreeDispersiveParams {
        d,
        a,
        qs: qs.clone(),
        times: times.clone(),
        axis_n,
        axis_length,
        core_fraction: ctx.cfg.ensemble.core_fraction,
        validity_threshold: ctx.cfg.ensemble.validity_threshold,
    };
    let stats = free_dispersive(&params)?;
    ctx.write_table("free_dispersive", stats.to_csv(&ctx.header()), &stats.rows)?;
    let window = (
        times.iter().cloned().fold(f64::INFINITY, f64::min),
        times.iter().cloned().fold(0.0f64, f64::max),
    );
    let fits: Vec<FitReport> = qs
        .iter()
        .map(|&q| fit_decay(&stats, d, q, 2.0, window).map(|f| FitReport::from(&f)))
        .collect::<Result<_, _>>()?;
    let report = serde_json::json!({
        "digest": ctx.digest,
        "seed": ctx.seed,
        "smallness": ctx.smallness,
        "a": a,
        "d": d,
        "fits": fits,
    });
    ctx.write("free_dispersive_fit.json", &pretty(&report)?)?;
    for f in &fits {
        println!(
            "free-dispersive q={}: slope {:.6} (target {:.6}) ± {:.6}",
            f.q, f.slope, -f.target_alpha, f.ci95
        );
    }
    Ok(())
}

fn run_simulate(
    ctx: &Ctx,
    initial: &slschro_core::config::InitialData,
) -> Result<(), Error> {
    let (f, snapped) = initial.build(&ctx.grid)?;
    let record_times = &ctx.cfg.ensemble.record_times;
    if record_times.is_empty() {
        return Err(Error::Config("simulate needs ensemble.record_times".into()));
    }
    let path = sample_path(ctx.seed, 0, ctx.cfg.noise.dt, ctx.cfg.noise.t_final)?;
    let traj = evolve(&f, &ctx.potential(), &path, record_times, true)?;
    let mut mass = Vec::new();
    let mut boundary = Vec::new();
    for (i, field) in traj.fields.iter().enumerate() {
        let name = format!("psi_{:04}.sls1", i);
        let mut buf = Vec::new();
        slschro_core::snapshot::write_field(field, &mut buf)?;
        fs::write(ctx.out.join(name), buf)?;
        mass.push(field.l2_norm());
        boundary.push(field.boundary_mass_fraction(ctx.cfg.ensemble.core_fraction)?);
    }
    let report = serde_json::json!({
        "digest": ctx.digest,
        "seed": ctx.seed,
        "smallness": ctx.smallness,
        "snapped_modulation": snapped,
        "record_times": traj.times,
        "l2_norm": mass,
        "boundary_mass": boundary,
        "mass_drift": traj.mass_drift(),
    });
    ctx.write("simulate_report.json", &pretty(&report)?)?;
    println!(
        "simulate: {} snapshots, mass drift {:.3e}",
        traj.fields.len(),
        traj.mass_drift()
    );
    Ok(())
}

fn run_decay(
    ctx: &Ctx,
    initial: &slschro_core::config::InitialData,
    bootstrap_check: bool,
    bootstrap_factor: f64,
) -> Result<(), Error> {
    let (f, snapped) = initial.build(&ctx.grid)?;
    let params = EnsembleParams {
        master_seed: ctx.seed,
        n_paths: ctx.cfg.noise.n_paths,
        dt: ctx.cfg.noise.dt,
        record_times: ctx.cfg.ensemble.record_times.clone(),
        qs: ctx.cfg.ensemble.q.clone(),
        rhos: ctx.cfg.ensemble.rho.clone(),
        core_fraction: ctx.cfg.ensemble.core_fraction,
        validity_threshold: ctx.cfg.ensemble.validity_threshold,
    };
    let potential = ctx.potential();
    let stats = run_ensemble(&ctx.grid, &potential, &f, &params, ctx.workers)?;
    ctx.write_table("decay", stats.to_csv(&ctx.header()), &stats.rows)?;

    let d = ctx.grid.dim();
    let window = ctx.cfg.fit_window();
    let mut fits = Vec::new();
    for &q in &params.qs {
        for &rho in &params.rhos {
            // q = 2 is conserved mass; fit would be a flat line — still fit
            // so the report shows slope ≈ 0 against target α = 0
            let fit = fit_decay(&stats, d, q, rho, window)?;
            fits.push(FitReport::from(&fit));
        }
    }

    let mut bootstrap = serde_json::Value::Null;
    if bootstrap_check {
        let mut free_potential = potential.clone();
        free_potential.delta = 0.0;
        let free_params = EnsembleParams {
            n_paths: 2,
            ..params.clone()
        };
        let free_stats = run_ensemble(&ctx.grid, &free_potential, &f, &free_params, ctx.workers)?;
        let mut entries = Vec::new();
        for &q in &params.qs {
            for &rho in &params.rhos {
                let alpha = slschro_core::normspec::alpha(d, q);
                let sup = stats.bootstrap_sup(q, rho, alpha);
                let free_sup = free_stats.bootstrap_sup(q, rho, alpha);
                let (ratio, pass) = match (sup, free_sup) {
                    (Some(s), Some(fs)) if fs > 0.0 => {
                        let r = s / fs;
                        (Some(r), Some(r <= bootstrap_factor))
                    }
                    _ => (None, None),
                };
                entries.push(serde_json::json!({
                    "q": q, "rho": rho, "alpha": alpha,
                    "sup_t_alpha_estimate": sup,
                    "free_counterpart": free_sup,
                    "ratio": ratio,
                    "max_factor": bootstrap_factor,
                    "pass": pass,
                }));
            }
        }
        bootstrap = serde_json::Value::Array(entries);
    }

    let report = serde_json::json!({
        "digest": ctx.digest,
        "seed": ctx.seed,
        "smallness": ctx.smallness,
        "snapped_modulation": snapped,
        "window": window,
        "fits": fits,
        "bootstrap": bootstrap,
    });
    ctx.write("decay_fit.json", &pretty(&report)?)?;
    for f in &fits {
        println!(
            "decay q={} rho={}: slope {:.4} (target {:.4}) ± {:.4}",
            f.q, f.rho, f.slope, -f.target_alpha, f.ci95
        );
    }
    Ok(())
}

fn run_scatter(
    ctx: &Ctx,
    initial: &slschro_core::config::InitialData,
    pairs: &[(f64, f64)],
) -> Result<(), Error> {
    let (f, snapped) = initial.build(&ctx.grid)?;
    let params = CauchyParams {
        master_seed: ctx.seed,
        n_paths: ctx.cfg.noise.n_paths,
        dt: ctx.cfg.noise.dt,
        pairs: pairs.to_vec(),
        rhos: ctx.cfg.ensemble.rho.clone(),
        core_fraction: ctx.cfg.ensemble.core_fraction,
        validity_threshold: ctx.cfg.ensemble.validity_threshold,
    };
    let table = cauchy_table(&ctx.grid, &ctx.potential(), &f, &params, ctx.workers)?;
    ctx.write_table("scatter", table.to_csv(&ctx.header()), &table.entries)?;
    let report = serde_json::json!({
        "digest": ctx.digest,
        "seed": ctx.seed,
        "smallness": ctx.smallness,
        "snapped_modulation": snapped,
        "boundary_mass": table.boundary_mass,
    });
    ctx.write("scatter_report.json", &pretty(&report)?)?;
    for e in table.entries.iter().filter(|e| e.rho == params.rhos[0]) {
        println!(
            "scatter ({}, {}): {:.6e} ± {:.1e}",
            e.s, e.t, e.estimate, e.stderr
        );
    }
    Ok(())
}

fn run_duhamel(
    ctx: &Ctx,
    initial: &slschro_core::config::InitialData,
    expansion: Option<slschro_core::config::ExpansionConfig>,
    isometry: Option<slschro_core::config::IsometryConfig>,
    probes: Option<slschro_core::config::ProbesConfig>,
) -> Result<(), Error> {
    let (f, _) = initial.build(&ctx.grid)?;
    let potential = ctx.potential();
    let mut report = serde_json::Map::new();
    report.insert("digest".into(), ctx.digest.clone().into());
    report.insert("seed".into(), ctx.seed.into());
    report.insert(
        "smallness".into(),
        serde_json::to_value(ctx.smallness).unwrap_or(serde_json::Value::Null),
    );

    if let Some(exp) = expansion {
        let scaling = delta_scaling_at_order(
            &potential,
            &f,
            &exp.deltas,
            exp.t,
            ctx.cfg.noise.dt,
            exp.n_paths,
            ctx.seed,
            ctx.workers,
            exp.order,
        )?;
        println!(
            "duhamel scaling (order {}): remainder exponent {:.3} (target {}), first-order exponent {:.3}",
            scaling.order,
            scaling.remainder_exponent,
            scaling.order + 1,
            scaling.first_order_exponent
        );
        report.insert(
            "expansion".into(),
            serde_json::to_value(&scaling).map_err(err_ser)?,
        );
    }
    if let Some(iso) = isometry {
        let check = ito_isometry_check(
            &ctx.grid,
            &potential,
            &f,
            iso.t,
            iso.dt.unwrap_or(ctx.cfg.noise.dt),
            iso.n_paths,
            ctx.seed,
            ctx.workers,
        )?;
        println!(
            "duhamel isometry: relative error {:.4e} (stderr {:.4e})",
            check.relative_error, check.relative_stderr
        );
        report.insert(
            "isometry".into(),
            serde_json::to_value(&check).map_err(err_ser)?,
        );
    }
    if let Some(pr) = probes {
        let mut results: Vec<ProbeResult> = Vec::new();
        for tuple in &pr.chain_tuples {
            let total: f64 = tuple.iter().sum();
            results.push(chain_bound_probe(
                &ctx.grid,
                &potential,
                &f,
                tuple,
                pr.q,
                BoundForm::Exchange,
            )?);
            if total > 1.0 {
                results.push(chain_bound_probe(
                    &ctx.grid,
                    &potential,
                    &f,
                    tuple,
                    pr.q,
                    BoundForm::Strong,
                )?);
            }
        }
        for &(s, t) in &pr.modulated_pairs {
            results.push(modulated_probe(
                &ctx.grid,
                &potential,
                &f,
                s,
                t,
                &pr.xi_set,
                pr.q,
                ctx.cfg.ensemble.rho.first().copied().unwrap_or(2.0),
                ctx.cfg.noise.dt,
                pr.n_paths,
                ctx.seed,
                ctx.workers,
            )?);
        }
        let baseline_of = |probe: &str| -> Option<f64> {
            pr.baselines.as_ref().map(|b| match probe {
                "chain-exchange" => b.chain_exchange,
                "chain-strong" => b.chain_strong,
                _ => b.modulated,
            })
        };
        let mut csv = format!(
            "# {}\nprobe,u,xi,delta,q,ratio,bound,baseline,pass\n",
            ctx.header()
        );
        let mut rows = Vec::new();
        for r in &results {
            let baseline = baseline_of(&r.probe);
            let pass = baseline.map(|b| r.ratio <= pr.baseline_factor * b);
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.probe,
                join(&r.u),
                join(&r.xi),
                r.delta,
                r.q,
                r.ratio,
                r.bound.replace(',', ";"),
                baseline.map_or(String::new(), |b| b.to_string()),
                pass.map_or(String::new(), |p| p.to_string()),
            ));
            rows.push(serde_json::json!({
                "probe": r.probe, "u": r.u, "xi": r.xi, "delta": r.delta,
                "q": r.q, "ratio": r.ratio, "bound": r.bound,
                "baseline": baseline, "pass": pass,
            }));
        }
        ctx.write_table("duhamel_probes", csv, &rows)?;
        let failed = rows
            .iter()
            .filter(|r| r["pass"] == serde_json::Value::Bool(false))
            .count();
        println!(
            "duhamel probes: {} ratios computed, {} outside baseline envelope",
            results.len(),
            failed
        );
        report.insert("probes".into(), serde_json::Value::Array(rows));
    }
    ctx.write(
        "duhamel_report.json",
        &pretty(&serde_json::Value::Object(report))?,
    )?;
    Ok(())
}

fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn err_ser(e: serde_json::Error) -> Error {
    Error::Config(format!("serialize: {e}"))
}

fn pretty(v: &serde_json::Value) -> Result<String, Error> {
    serde_json::to_string_pretty(v).map_err(err_ser)
}

/// Quick in-process property suite; prints one line per check.
fn run_selftest(ctx: &Ctx) -> Result<(), Error> {
    use slschro_core::noise::Xoshiro256pp;
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    let grid = Grid::new(1, 128, 32.0).unwrap();
    let mut rng = Xoshiro256pp::new(ctx.seed);
    let mut worst_unit = 0.0f64;
    let mut worst_group = 0.0f64;
    for _ in 0..1000 {
        let values: Vec<Complex64> = (0..grid.len())
            .map(|_| Complex64::new(rng.next_open01() - 0.5, rng.next_open01() - 0.5))
            .collect();
        let f = ComplexField::new(grid.clone(), values).unwrap();
        let t = 20.0 * rng.next_open01() - 10.0;
        let s = 4.0 * rng.next_open01() - 2.0;
        let n0 = f.l2_norm();
        let g = free_propagate(&f, t)?;
        worst_unit = worst_unit.max((g.l2_norm() - n0).abs() / n0);
        let h1 = free_propagate(&free_propagate(&f, s)?, t)?;
        let h2 = free_propagate(&f, s + t)?;
        worst_group = worst_group.max(h1.l2_distance(&h2) / n0);
    }
    check(
        "free-propagator unitarity (1000 random fields)",
        worst_unit < 1e-12,
        format!("worst defect {worst_unit:.2e}"),
    );
    check(
        "free-propagator group law",
        worst_group < 1e-12,
        format!("worst defect {worst_group:.2e}"),
    );

    let spectral = Spectral::new(&grid);
    let f = ComplexField::gaussian_isotropic(grid.clone(), 0.5);
    let mut v = f.values().to_vec();
    spectral.forward(&mut v, false);
    spectral.inverse(&mut v, false);
    let rt = ComplexField::new(grid.clone(), v).unwrap().l2_distance(&f) / f.l2_norm();
    check(
        "spectral round trip",
        rt < 1e-13,
        format!("relative error {rt:.2e}"),
    );

    let exact = gaussian_free_evolution(&grid, 0.5, 0.75);
    let num = free_propagate(&f, 0.75)?;
    let gauss_err = num.max_abs_diff(&exact);
    check(
        "analytic Gaussian evolution",
        gauss_err < 1e-8,
        format!("max pointwise error {gauss_err:.2e}"),
    );

    let pot = PotentialSpec::gaussian_isotropic(1, 1.0, 1.5, 0.1);
    let vf = pot.sample(&grid)?;
    let stepped = noise_phase_step(&f, &vf, 0.1, 0.7)?;
    let mass_defect = (stepped.l2_norm() - f.l2_norm()).abs() / f.l2_norm();
    check(
        "noise flow unitarity",
        mass_defect < 1e-13,
        format!("relative defect {mass_defect:.2e}"),
    );

    let path = sample_path(ctx.seed, 0, 0.01, 1.0)?;
    let traj = evolve(&f, &pot, &path, &[1.0], false)?;
    let drift = {
        let end = traj.fields[0].l2_norm();
        (end - f.l2_norm()).abs() / f.l2_norm()
    };
    check(
        "pathwise mass conservation (100 steps)",
        drift < 1e-12,
        format!("relative drift {drift:.2e}"),
    );

    let c = 0.9;
    let cpot = PotentialSpec::constant(c, 0.2);
    let ctraj = evolve(&f, &cpot, &path, &[1.0], false)?;
    let mut expect = free_propagate(&f, 1.0)?;
    expect.scale(Complex64::from_polar(1.0, -0.2 * c * path.terminal_value()));
    let const_err = ctraj.fields[0].max_abs_diff(&expect);
    check(
        "constant-potential oracle",
        const_err < 1e-10,
        format!("max pointwise error {const_err:.2e}"),
    );

    let one_step = strang_step(&f, 0.01, path.increments[0], &vf, 0.1)?;
    let traj1 = evolve(&f, &pot, &path, &[0.01], false)?;
    let split_err = one_step.l2_distance(&traj1.fields[0]) / f.l2_norm();
    check(
        "strang step consistency",
        split_err < 1e-13,
        format!("relative error {split_err:.2e}"),
    );

    let refined = path.refine();
    let mut worst_pair = 0.0f64;
    for (k, &db) in path.increments.iter().enumerate() {
        let a = refined.increments[2 * k];
        let b = refined.increments[2 * k + 1];
        let tol = f64::EPSILON * a.abs().max(b.abs()).max(1e-300);
        worst_pair = worst_pair.max(((a + b) - db).abs() / tol);
    }
    check(
        "bridge refinement reconstructs increments",
        worst_pair <= 1.0,
        format!("worst defect {worst_pair:.2} ulp-equivalents"),
    );

    let samples: Vec<f64> = (0..500).map(|_| rng.next_open01() + 0.2).collect();
    let mut prev = 0.0;
    let mut monotone = true;
    for rho in [1.0, 2.0, 4.0, 8.0] {
        let (est, _) = rho_moment(&samples, rho).unwrap();
        monotone &= est >= prev - 1e-12;
        prev = est;
    }
    check("ρ-moment monotonicity", monotone, "power-mean ordering".into());

    let iso = ito_isometry_check(&grid, &pot, &f, 0.5, 0.025, 200, ctx.seed, ctx.workers)?;
    check(
        "Itô isometry (ρ = 2)",
        iso.relative_error < 3.0 * iso.relative_stderr + 0.05,
        format!(
            "relative error {:.3e}, stderr {:.3e}",
            iso.relative_error, iso.relative_stderr
        ),
    );

    let report = serde_json::json!({
        "digest": ctx.digest,
        "seed": ctx.seed,
        "failures": failures,
    });
    ctx.write("selftest_report.json", &pretty(&report)?)?;
    if failures > 0 {
        return Err(Error::Fit(format!("{failures} selftest checks failed")));
    }
    println!("selftest: all checks passed");
    Ok(())
}
