//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured quantities. Run with `--nocapture` to see them.
//!
//! `SLSCHRO_ACCEPT_FAST=1` shrinks the Monte Carlo sizes for quick local
//! iteration; the printed line then carries a `[reduced]` marker and the run
//! does not constitute the acceptance gate.

use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64;

use slschro_core::dispersive::{free_dispersive, log_spaced, FreeDispersiveParams};
use slschro_core::duhamel::{
    chain_bound_probe, delta_scaling, ito_isometry_check, modulated_probe, BoundForm,
};
use slschro_core::ensemble::{fit_decay, run_ensemble, EnsembleParams};
use slschro_core::field::ComplexField;
use slschro_core::grid::Grid;
use slschro_core::integrator::{evolve, strong_error};
use slschro_core::noise::{sample_path, Xoshiro256pp};
use slschro_core::potential::PotentialSpec;
use slschro_core::scattering::{cauchy_table, CauchyParams};
use slschro_core::spectral::free_propagate;
use slschro_core::stats;

/// Serializes the heavyweight ensemble criteria so they do not contend for
/// the two cores.
static HEAVY: Mutex<()> = Mutex::new(());

fn fast() -> bool {
    std::env::var("SLSCHRO_ACCEPT_FAST").map_or(false, |v| v == "1")
}

fn scale_paths(full: usize) -> usize {
    if fast() {
        (full / 10).max(8)
    } else {
        full
    }
}

fn marker() -> &'static str {
    if fast() {
        " [reduced: not gate-valid]"
    } else {
        ""
    }
}

fn workers() -> Option<usize> {
    Some(2)
}

#[test]
fn acceptance_01_pathwise_mass_conservation() {
    // d = 3, n = 48, dt = 0.01, 10³ steps, Gaussian V, δ = 0.1:
    // relative L² drift < 1e-11, under 10 s for the path.
    let _guard = HEAVY.lock().unwrap();
    let grid = Grid::new(3, 48, 16.0).unwrap();
    let potential = PotentialSpec::gaussian_isotropic(3, 1.0, 1.0, 0.1);
    let f = ComplexField::gaussian_isotropic(grid.clone(), 0.5);
    let path = sample_path(20260808, 0, 0.01, 10.0).unwrap();
    let start = Instant::now();
    let traj = evolve(&f, &potential, &path, &[2.5, 5.0, 7.5, 10.0], true).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let drift = traj.mass_drift();
    println!(
        "criterion 1: {} — mass drift {drift:.3e} (< 1e-11), {elapsed:.1} s/path (< 10 s)",
        if drift < 1e-11 && elapsed < 10.0 { "PASS" } else { "FAIL" }
    );
    assert!(drift < 1e-11, "mass drift {drift}");
    assert!(elapsed < 10.0, "runtime {elapsed} s");
}

#[test]
fn acceptance_02_free_dispersive_slope() {
    // δ = 0 Gaussian data, q ∈ {4, 8}, one decade of t inside the validity
    // window: |slope + α| < 0.03 with α = 3(1/2 - 1/q). The free flow of
    // product data factorizes axis-by-axis, so the d = 3 norms are computed
    // exactly on a long 1-D grid; a direct 3-D grid covering a decade would
    // need ≥ ~1300 points per axis.
    let _guard = HEAVY.lock().unwrap();
    let start = Instant::now();
    let params = FreeDispersiveParams {
        d: 3,
        a: 0.5,
        qs: vec![4.0, 8.0],
        times: log_spaced(7.0, 70.0, 9),
        axis_n: 16384,
        axis_length: 4096.0,
        core_fraction: 0.5,
        validity_threshold: 1e-8,
    };
    let stats = free_dispersive(&params).unwrap();
    assert!(stats.rows.iter().all(|r| r.valid), "decade outside validity");
    let mut ok = true;
    let mut detail = String::new();
    for &q in &[4.0f64, 8.0] {
        let fit = fit_decay(&stats, 3, q, 2.0, (7.0, 70.0)).unwrap();
        let alpha = 3.0 * (0.5 - 1.0 / q);
        let dev = (fit.slope + alpha).abs();
        ok &= dev < 0.03;
        detail.push_str(&format!("q={q}: slope {:.4} dev {:.4}; ", fit.slope, dev));
    }

    // the 3-D spectral machinery agrees with the factorized values while the
    // packet is still contained
    let grid3 = Grid::new(3, 64, 20.0).unwrap();
    let f3 = ComplexField::gaussian_isotropic(grid3, 0.5);
    for t in [0.5, 1.0] {
        let direct = free_propagate(&f3, t).unwrap().lp_norm(8.0).unwrap();
        let tensor = slschro_core::spectral::gaussian_free_lq_norm(3, 0.5, t, 8.0);
        let rel = (direct - tensor).abs() / tensor;
        ok &= rel < 5e-3;
        detail.push_str(&format!("3d-consistency t={t}: {rel:.1e}; "));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 60.0;
    println!(
        "criterion 2: {} — {detail}runtime {elapsed:.1} s (< 60 s)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "{detail}");
}

#[test]
fn acceptance_03_constant_potential_oracle() {
    // V ≡ c: the integrated state must equal e^{itΔ}f · e^{-iδcB_t} to
    // better than 1e-10 pointwise at every record.
    let grid = Grid::new(3, 32, 16.0).unwrap();
    let c = 0.9;
    let delta = 0.2;
    let potential = PotentialSpec::constant(c, delta);
    let f = ComplexField::gaussian_isotropic(grid.clone(), 0.5);
    let path = sample_path(4242, 7, 0.005, 2.0).unwrap();
    let traj = evolve(&f, &potential, &path, &[1.0, 2.0], false).unwrap();
    let mut worst = 0.0f64;
    for (i, &t) in traj.times.iter().enumerate() {
        let steps = (t / path.dt).round() as usize;
        let phase = Complex64::from_polar(1.0, -delta * c * path.value_at_step(steps));
        let mut expect = free_propagate(&f, t).unwrap();
        expect.scale(phase);
        worst = worst.max(traj.fields[i].max_abs_diff(&expect));
    }
    println!(
        "criterion 3: {} — max pointwise error {worst:.3e} (< 1e-10)",
        if worst < 1e-10 { "PASS" } else { "FAIL" }
    );
    assert!(worst < 1e-10, "pointwise error {worst}");
}

#[test]
fn acceptance_04_ito_isometry() {
    // ρ = 2 Burkholder degenerates to the exact Itô isometry: M = 2000 paths
    // must reproduce the deterministic quadrature within 3 standard errors
    // and 5% absolutely.
    let _guard = HEAVY.lock().unwrap();
    let grid = Grid::new(3, 32, 16.0).unwrap();
    let potential = PotentialSpec::gaussian_isotropic(3, 1.0, 1.5, 0.1);
    let f = ComplexField::gaussian_isotropic(grid.clone(), 0.5);
    let m = scale_paths(2000).max(100);
    let check =
        ito_isometry_check(&grid, &potential, &f, 2.0, 0.02, m, 20260808, workers()).unwrap();
    let ok = check.relative_error < 3.0 * check.relative_stderr && check.relative_error < 0.05;
    println!(
        "criterion 4: {} — relative error {:.4e} vs 3·stderr {:.4e}, abs bound 5%, M={}{}",
        if ok { "PASS" } else { "FAIL" },
        check.relative_error,
        3.0 * check.relative_stderr,
        m,
        marker()
    );
    assert!(ok, "{check:?}");
}

#[test]
fn acceptance_05_duhamel_remainder_scaling() {
    // δ ∈ {0.2, 0.1, 0.05} on common paths: remainder L²_ω exponent
    // 2.0 ± 0.3 (leading term is the double stochastic integral), explicit
    // first-order term exponent 1.0 ± 0.1.
    let _guard = HEAVY.lock().unwrap();
    let grid = Grid::new(3, 32, 16.0).unwrap();
    let shape = PotentialSpec::gaussian_isotropic(3, 1.0, 1.5, 1.0);
    let f = ComplexField::gaussian_isotropic(grid.clone(), 0.5);
    let m = scale_paths(32).max(8);
    let scaling = delta_scaling(
        &shape,
        &f,
        &[0.2, 0.1, 0.05],
        1.0,
        0.005,
        m,
        20260808,
        workers(),
    )
    .unwrap();
    let ok_rem = (scaling.remainder_exponent - 2.0).abs() < 0.3;
    let ok_first = (scaling.first_order_exponent - 1.0).abs() < 0.1;
    println!(
        "criterion 5: {} — remainder exponent {:.3} (2.0 ± 0.3), first-order {:.3} (1.0 ± 0.1), M={}{}",
        if ok_rem && ok_first { "PASS" } else { "FAIL" },
        scaling.remainder_exponent,
        scaling.first_order_exponent,
        m,
        marker()
    );
    assert!(ok_rem && ok_first, "{scaling:?}");
}

#[test]
fn acceptance_06_stochastic_decay() {
    // d = 3, q = 8 (α = 9/8 > 1), ρ = 2, δ = 0.05, M ≥ 500: fitted slope
    // within 0.15 of -9/8 over the validity window, and the bootstrap
    // quantity sup_t t^α·estimate stays within 2× of its δ = 0 counterpart.
    let _guard = HEAVY.lock().unwrap();
    let start = Instant::now();
    let grid = Grid::new(3, 64, 128.0).unwrap();
    let potential = PotentialSpec::gaussian_isotropic(3, 1.0, 6.0, 0.05);
    let f = ComplexField::gaussian_isotropic(grid.clone(), 0.22);
    let m = scale_paths(500);
    let params = EnsembleParams {
        master_seed: 20260808,
        n_paths: m,
        dt: 0.05,
        record_times: vec![2.4, 3.0, 3.8, 4.8, 6.05, 7.6, 9.6],
        qs: vec![2.0, 8.0],
        rhos: vec![2.0],
        core_fraction: 0.5,
        validity_threshold: 5e-3,
    };
    let stats = run_ensemble(&grid, &potential, &f, &params, workers()).unwrap();
    let fit = fit_decay(&stats, 3, 8.0, 2.0, (2.0, 9.6)).unwrap();
    let alpha = 9.0 / 8.0;
    let dev = (fit.slope + alpha).abs();

    // mass column sanity: ρ = q = 2 must sit at ‖f‖₂
    let mass = f.l2_norm();
    let mass_row = stats.row(2.4, 2.0, 2.0).unwrap();
    assert!((mass_row.estimate - mass).abs() / mass < 1e-10);

    let mut free_potential = potential.clone();
    free_potential.delta = 0.0;
    let free_params = EnsembleParams {
        n_paths: 2,
        ..params.clone()
    };
    let free_stats = run_ensemble(&grid, &free_potential, &f, &free_params, workers()).unwrap();
    let sup = stats.bootstrap_sup(8.0, 2.0, alpha).unwrap();
    let free_sup = free_stats.bootstrap_sup(8.0, 2.0, alpha).unwrap();
    let ratio = sup / free_sup;
    let elapsed = start.elapsed().as_secs_f64();
    let ok = dev < 0.15 && ratio <= 2.0 && elapsed < 1800.0;
    println!(
        "criterion 6: {} — slope {:.4} vs -9/8 (dev {dev:.4} < 0.15), bootstrap ratio {ratio:.3} (≤ 2), M={m}, {elapsed:.0} s (< 1800){}",
        if ok { "PASS" } else { "FAIL" },
        fit.slope,
        marker()
    );
    assert!(dev < 0.15, "slope {} (dev {dev})", fit.slope);
    assert!(ratio <= 2.0, "bootstrap ratio {ratio}");
    assert!(elapsed < 1800.0, "runtime {elapsed} s");
}

#[test]
fn acceptance_07_scattering_cauchy_decrease() {
    // Dyadic pullback differences at δ = 0.05 decrease (within 3 stderr)
    // with the final entry below a fifth of the first; the constant-V
    // control shows no decrease.
    let _guard = HEAVY.lock().unwrap();
    let grid = Grid::with_axes(&[256, 64, 64], &[128.0, 32.0, 32.0]).unwrap();
    let potential = PotentialSpec::gaussian_isotropic(3, 1.0, 1.5, 0.05);
    let f = ComplexField::gaussian(grid.clone(), &[0.5, 0.1, 0.1], &[0.0, 0.0, 0.0]).unwrap();
    // moving packet: it crosses the potential and disperses, the scattering
    // mechanism the Cauchy property measures
    let xi = grid.snap_frequency(&[3.0, 0.0, 0.0]).unwrap();
    let f = f.modulate(&xi).unwrap();
    let m = scale_paths(64);
    let params = CauchyParams {
        master_seed: 20260808,
        n_paths: m,
        dt: 0.025,
        pairs: vec![(0.25, 0.5), (0.5, 1.0), (1.0, 2.0)],
        rhos: vec![2.0],
        core_fraction: 0.5,
        validity_threshold: 1e-3,
    };
    let table = cauchy_table(&grid, &potential, &f, &params, workers()).unwrap();
    let entries: Vec<_> = table.entries.iter().filter(|e| e.rho == 2.0).collect();
    assert_eq!(entries.len(), 3);
    let mut nonincreasing = true;
    for w in entries.windows(2) {
        if w[1].estimate > w[0].estimate + 3.0 * (w[0].stderr + w[1].stderr) {
            nonincreasing = false;
        }
    }
    let drop_ok = entries[2].estimate < entries[0].estimate / 5.0;

    // control: constant V only dephases globally; the pullback difference is
    // |e^{-iδcB_t} - e^{-iδcB_s}|‖f‖₂, growing with the pair gap
    let cgrid = Grid::new(1, 64, 32.0).unwrap();
    let cf = ComplexField::gaussian_isotropic(cgrid.clone(), 0.5);
    let cparams = CauchyParams {
        master_seed: 20260808,
        n_paths: 64,
        dt: 0.025,
        pairs: vec![(0.25, 0.5), (0.5, 1.0), (1.0, 2.0)],
        rhos: vec![2.0],
        core_fraction: 0.5,
        validity_threshold: 0.5,
    };
    let control = cauchy_table(&cgrid, &PotentialSpec::constant(1.0, 0.05), &cf, &cparams, workers())
        .unwrap();
    let ce: Vec<_> = control.entries.iter().collect();
    let control_no_decrease = ce[2].estimate + 3.0 * (ce[0].stderr + ce[2].stderr)
        >= ce[0].estimate
        && ce[2].estimate >= ce[0].estimate / 5.0;

    let ok = nonincreasing && drop_ok && control_no_decrease;
    println!(
        "criterion 7: {} — entries [{:.3e}, {:.3e}, {:.3e}], final/first {:.3} (< 0.2), control final/first {:.2} (no decrease), M={m}{}",
        if ok { "PASS" } else { "FAIL" },
        entries[0].estimate,
        entries[1].estimate,
        entries[2].estimate,
        entries[2].estimate / entries[0].estimate,
        ce[2].estimate / ce[0].estimate,
        marker()
    );
    assert!(nonincreasing, "entries increase beyond 3 stderr");
    assert!(drop_ok, "final/first = {}", entries[2].estimate / entries[0].estimate);
    assert!(control_no_decrease, "constant-V control shows a decrease");
}

#[test]
fn acceptance_08_strong_self_convergence() {
    // Bridge-refined self-convergence ‖Ψ_dt(T) - Ψ_{dt/2}(T)‖₂ over halved
    // meshes: fitted strong order ≥ 0.9.
    let _guard = HEAVY.lock().unwrap();
    let grid = Grid::new(3, 32, 16.0).unwrap();
    let potential = PotentialSpec::gaussian_isotropic(3, 1.0, 1.5, 0.2);
    let f = ComplexField::gaussian_isotropic(grid.clone(), 0.5);
    let dts = [0.1, 0.05, 0.025, 0.0125];
    let m = scale_paths(8).min(8);
    let mut errors = Vec::new();
    for &dt in &dts {
        let per_path: Vec<f64> = (0..m as u64)
            .map(|i| {
                let path = sample_path(314159, i, dt, 1.0).unwrap();
                strong_error(&f, &potential, &path, 1.0).unwrap().powi(2)
            })
            .collect();
        errors.push(stats::mean(&per_path).sqrt());
    }
    let x: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let fit = stats::weighted_line_fit(&x, &y, &vec![0.0; 4]).unwrap();
    let ok = fit.slope >= 0.9;
    println!(
        "criterion 8: {} — fitted strong order {:.3} (≥ 0.9), errors {:?}{}",
        if ok { "PASS" } else { "FAIL" },
        fit.slope,
        errors,
        marker()
    );
    assert!(ok, "strong order {}", fit.slope);
}

/// Frozen calibration constants for the bound probes: maxima measured on the
/// designated baseline run (seed 20260808, the grids and tuple sampler
/// below). Criterion 9 asserts the live values stay within 1.5× of these.
const FROZEN_CHAIN_EXCHANGE_MAX: f64 = 0.0335;
const FROZEN_CHAIN_STRONG_MAX: f64 = 0.0051;
const FROZEN_MODULATED_MAX: f64 = 0.0441;

#[test]
fn acceptance_09_probe_stability() {
    // ≥ 100 sampled tuples: chain-bound and modulated-probe ratios change
    // < 10% between n = 32 and n = 48 grids and stay ≤ 1.5× the frozen
    // baselines.
    let _guard = HEAVY.lock().unwrap();
    let coarse = Grid::new(3, 32, 16.0).unwrap();
    let fine = Grid::new(3, 48, 16.0).unwrap();
    let potential = PotentialSpec::gaussian_isotropic(3, 1.0, 1.5, 0.05);
    let q = 8.0;

    let mut rng = Xoshiro256pp::new(20260808);
    let mut tuples: Vec<Vec<f64>> = Vec::new();
    for _ in 0..40 {
        tuples.push(vec![
            0.1 + 1.4 * rng.next_open01(),
            0.1 + 1.4 * rng.next_open01(),
        ]);
    }
    for _ in 0..40 {
        tuples.push(vec![
            0.1 + 1.4 * rng.next_open01(),
            0.1 + 1.4 * rng.next_open01(),
            0.1 + 1.4 * rng.next_open01(),
        ]);
    }
    // the statement-level shape of the small-first-time lemma: u₁ < 1 and
    // Σu_j > 2
    for _ in 0..24 {
        let u1 = 0.1 + 0.8 * rng.next_open01();
        let rest = 2.05 - u1 + 0.9 * rng.next_open01();
        tuples.push(vec![u1, rest / 2.0, rest / 2.0]);
    }
    assert!(tuples.len() >= 100);

    let mut worst_rel = 0.0f64;
    let mut max_exchange = 0.0f64;
    let mut max_strong = 0.0f64;
    let mut checked = 0usize;
    for tuple in &tuples {
        let total: f64 = tuple.iter().sum();
        let fc = ComplexField::gaussian_isotropic(coarse.clone(), 0.5);
        let ff = ComplexField::gaussian_isotropic(fine.clone(), 0.5);
        let a = chain_bound_probe(&coarse, &potential, &fc, tuple, q, BoundForm::Exchange).unwrap();
        let b = chain_bound_probe(&fine, &potential, &ff, tuple, q, BoundForm::Exchange).unwrap();
        worst_rel = worst_rel.max((a.ratio - b.ratio).abs() / b.ratio);
        max_exchange = max_exchange.max(b.ratio);
        checked += 1;
        if total > 1.0 {
            let a = chain_bound_probe(&coarse, &potential, &fc, tuple, q, BoundForm::Strong).unwrap();
            let b = chain_bound_probe(&fine, &potential, &ff, tuple, q, BoundForm::Strong).unwrap();
            worst_rel = worst_rel.max((a.ratio - b.ratio).abs() / b.ratio);
            max_strong = max_strong.max(b.ratio);
        }
    }

    // modulated probes on both grids, δ = 0 calibration next to δ = 0.05
    let dk = 2.0 * std::f64::consts::PI / 16.0;
    let xi_set: Vec<Vec<f64>> = vec![
        vec![0.0, 0.0, 0.0],
        vec![dk, 0.0, 0.0],
        vec![-dk, 0.0, 0.0],
        vec![0.0, dk, 0.0],
        vec![dk, dk, 0.0],
        vec![0.0, 0.0, -2.0 * dk],
        vec![2.0 * dk, 0.0, 0.0],
    ];
    let mut live_max = [0.0f64; 2];
    for (gi, (grid, label)) in [(&coarse, "n32"), (&fine, "n48")].into_iter().enumerate() {
        let f = ComplexField::gaussian_isotropic(grid.clone(), 0.5);
        for &(s, t) in &[(0.25, 0.75), (0.5, 1.5)] {
            let mut free_potential = potential.clone();
            free_potential.delta = 0.0;
            let base = modulated_probe(
                grid, &free_potential, &f, s, t, &xi_set, q, 2.0, 0.0125, 8, 20260808, workers(),
            )
            .unwrap();
            let live = modulated_probe(
                grid, &potential, &f, s, t, &xi_set, q, 2.0, 0.0125, 8, 20260808, workers(),
            )
            .unwrap();
            live_max[gi] = live_max[gi].max(live.ratio);
            assert!(
                live.ratio <= 1.5 * base.ratio,
                "{label} ({s},{t}): live {} vs calibrated baseline {}",
                live.ratio,
                base.ratio
            );
        }
    }
    // grid stability of the modulated maxima
    worst_rel = worst_rel.max((live_max[0] - live_max[1]).abs() / live_max[1]);
    let max_modulated = live_max[1];

    let frozen_ok = max_exchange <= 1.5 * FROZEN_CHAIN_EXCHANGE_MAX
        && max_strong <= 1.5 * FROZEN_CHAIN_STRONG_MAX
        && max_modulated <= 1.5 * FROZEN_MODULATED_MAX;
    let ok = worst_rel < 0.10 && frozen_ok;
    println!(
        "criterion 9: {} — {checked} tuples, worst grid shift {:.3}% (< 10%), maxima exchange {max_exchange:.4} strong {max_strong:.4} modulated {max_modulated:.4} vs frozen [{FROZEN_CHAIN_EXCHANGE_MAX}, {FROZEN_CHAIN_STRONG_MAX}, {FROZEN_MODULATED_MAX}]",
        if ok { "PASS" } else { "FAIL" },
        100.0 * worst_rel
    );
    assert!(worst_rel < 0.10, "grid shift {worst_rel}");
    assert!(frozen_ok, "ratios left the frozen calibration envelope");
}

#[test]
fn acceptance_10_cli_determinism() {
    // `decay` run twice with --workers 1 and --workers 8 produces
    // byte-identical table and fit report.
    let dir = std::env::temp_dir().join(format!("slschro-acc10-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("decay.json");
    fs::write(
        &cfg,
        r#"{
            "grid": {"d": 1, "n": 64, "box_length": 64.0},
            "potential": {"shape": "gaussian", "amplitude": 1.0, "sigma": [3.0], "center": [0.0], "delta": 0.05},
            "noise": {"master_seed": 99, "n_paths": 12, "dt": 0.05, "t_final": 4.0},
            "ensemble": {"q": [2.0, 4.0], "rho": [2.0], "record_times": [0.5, 0.8, 1.2, 1.8, 2.6, 4.0], "fit_window": [0.5, 4.0], "validity_threshold": 0.01},
            "experiment": {"kind": "decay", "initial": {"a": 0.5}, "bootstrap_check": true}
        }"#,
    )
    .unwrap();
    let run_with = |workers: &str, sub: &str| -> (Vec<u8>, Vec<u8>) {
        let out: PathBuf = dir.join(format!("out-{workers}"));
        let o = Command::new(env!("CARGO_BIN_EXE_slschro"))
            .args([
                "decay",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--workers",
                workers,
            ])
            .output()
            .unwrap();
        assert!(o.status.success(), "{sub} failed: {o:?}");
        (
            fs::read(out.join("decay.csv")).unwrap(),
            fs::read(out.join("decay_fit.json")).unwrap(),
        )
    };
    let (csv1, fit1) = run_with("1", "first");
    let (csv8, fit8) = run_with("8", "second");
    let ok = csv1 == csv8 && fit1 == fit8;
    println!(
        "criterion 10: {} — decay outputs byte-identical across --workers 1 and --workers 8 ({} bytes)",
        if ok { "PASS" } else { "FAIL" },
        csv1.len()
    );
    assert_eq!(csv1, csv8, "CSV bytes differ across worker counts");
    assert_eq!(fit1, fit8, "fit JSON bytes differ across worker counts");
}
