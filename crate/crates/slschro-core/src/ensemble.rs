//! Monte Carlo estimation of `‖Ψ(t)‖_{L^ρ_ω L^q_x}` and power-law decay
//! fits.
//!
//! Reproducibility: per-path results are collected in path-index order and
//! reduced with pairwise summation, so the output bytes are independent of
//! the worker count and of scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::integrator::Evolver;
use crate::noise::sample_path;
use crate::normspec;
use crate::potential::PotentialSpec;
use crate::special::z_for_confidence;
use crate::stats;

/// Runtime parameters of one ensemble run.
#[derive(Debug, Clone)]
pub struct EnsembleParams {
    pub master_seed: u64,
    pub n_paths: usize,
    pub dt: f64,
    pub record_times: Vec<f64>,
    pub qs: Vec<f64>,
    pub rhos: Vec<f64>,
    /// Relative side of the core box monitored for wrap-around mass.
    pub core_fraction: f64,
    /// A record time is validity-flagged while the worst-case boundary mass
    /// fraction stays below this threshold.
    pub validity_threshold: f64,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        EnsembleParams {
            master_seed: 0,
            n_paths: 1000,
            dt: 0.01,
            record_times: vec![],
            qs: vec![2.0, 4.0, 8.0],
            rhos: vec![2.0, 4.0],
            core_fraction: 0.5,
            validity_threshold: 1e-6,
        }
    }
}

/// One `(t, q, ρ)` cell of the mixed-norm table.
#[derive(Debug, Clone, Serialize)]
pub struct NormEstimate {
    pub t: f64,
    pub q: f64,
    pub rho: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub valid: bool,
    pub boundary_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleStats {
    pub rows: Vec<NormEstimate>,
    pub record_times: Vec<f64>,
    pub qs: Vec<f64>,
    pub rhos: Vec<f64>,
    pub core_fraction: f64,
    pub validity_threshold: f64,
    pub n_paths: usize,
}

impl EnsembleStats {
    pub fn row(&self, t: f64, q: f64, rho: f64) -> Option<&NormEstimate> {
        self.rows
            .iter()
            .find(|r| r.t == t && r.q == q && r.rho == rho)
    }

    /// Fixed-format CSV of the table; identical strings for identical runs.
    pub fn to_csv(&self, header_comment: &str) -> String {
        let mut out = String::new();
        if !header_comment.is_empty() {
            out.push_str("# ");
            out.push_str(header_comment);
            out.push('\n');
        }
        out.push_str("t,q,rho,estimate,stderr,n_paths,valid,boundary_mass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.t, r.q, r.rho, r.estimate, r.stderr, r.n_paths, r.valid, r.boundary_mass
            ));
        }
        out
    }

    /// `sup_t t^α · estimate` over validity-flagged rows of one `(q, ρ)`.
    pub fn bootstrap_sup(&self, q: f64, rho: f64, alpha: f64) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.q == q && r.rho == rho && r.valid && r.t > 0.0)
            .map(|r| r.t.powf(alpha) * r.estimate)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}

/// `(E x^ρ)^{1/ρ}` with its delta-method standard error. For fewer than two
/// samples the standard error is unavailable (`None`).
pub fn rho_moment(samples: &[f64], rho: f64) -> Result<(f64, Option<f64>)> {
    if samples.is_empty() {
        return Err(Error::Fit("ρ-moment of an empty sample".into()));
    }
    if !(rho >= 1.0) || !rho.is_finite() {
        return Err(Error::Fit(format!("ρ must be finite and ≥ 1, got {rho}")));
    }
    if samples.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::Fit("ρ-moment needs nonnegative samples".into()));
    }
    // a degenerate sample (all values identical, e.g. a δ = 0 ensemble) has
    // the value itself as the ρ-moment with exactly zero error
    if samples.windows(2).all(|w| w[0] == w[1]) {
        let se = if samples.len() < 2 { None } else { Some(0.0) };
        return Ok((samples[0], se));
    }
    let m = samples.len() as f64;
    let powered: Vec<f64> = samples.iter().map(|&x| x.powf(rho)).collect();
    let s = stats::pairwise_sum(&powered) / m;
    let estimate = s.powf(1.0 / rho);
    if samples.len() < 2 {
        return Ok((estimate, None));
    }
    let var_s = stats::sample_variance(&powered) / m;
    let stderr = if s > 0.0 {
        s.powf(1.0 / rho - 1.0) / rho * var_s.sqrt()
    } else {
        0.0
    };
    Ok((estimate, Some(stderr)))
}

/// Run `f` over path indices `0..n_paths` on a dedicated pool, preserving
/// index order in the output. Worker count changes wall time only.
pub fn map_paths<T: Send>(
    n_paths: usize,
    workers: Option<usize>,
    f: impl Fn(u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let threads = workers.unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| {
        (0..n_paths as u64)
            .into_par_iter()
            .map(&f)
            .collect::<Result<Vec<T>>>()
    })
}

struct PathObs {
    /// `norms[record][q_idx]`
    norms: Vec<Vec<f64>>,
    /// boundary mass fraction per record
    bmf: Vec<f64>,
}

/// Estimate the mixed norms of the solution over a seeded path ensemble.
pub fn run_ensemble(
    grid: &Grid,
    potential: &PotentialSpec,
    initial: &ComplexField,
    params: &EnsembleParams,
    workers: Option<usize>,
) -> Result<EnsembleStats> {
    if params.n_paths < 2 {
        return Err(Error::Config("ensemble needs at least 2 paths".into()));
    }
    if params.record_times.is_empty() {
        return Err(Error::Config("no record times requested".into()));
    }
    let horizon = params
        .record_times
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    let evolver = Evolver::new(grid, potential, params.dt, false)?;
    let probe_path = sample_path(params.master_seed, 0, params.dt, horizon)?;
    let record_steps = evolver.record_steps(&params.record_times, &probe_path)?;

    let qs = params.qs.clone();
    let core = params.core_fraction;
    let observations: Vec<PathObs> = map_paths(params.n_paths, workers, |index| {
        let path = sample_path(params.master_seed, index, params.dt, horizon)?;
        let mut norms = Vec::with_capacity(record_steps.len());
        let mut bmf = Vec::with_capacity(record_steps.len());
        evolver
            .run(initial, &path, &record_steps, |_, _, field| {
                let row: Result<Vec<f64>> = qs.iter().map(|&q| field.lp_norm(q)).collect();
                norms.push(row?);
                bmf.push(field.boundary_mass_fraction(core)?);
                Ok(())
            })
            .map_err(|e| match e {
                Error::NonFinite { step, t } => Error::NonFinitePath {
                    path_index: index,
                    step,
                    t,
                },
                other => other,
            })?;
        Ok(PathObs { norms, bmf })
    })?;

    let mut rows = Vec::new();
    for (ri, &t) in params.record_times.iter().enumerate() {
        let worst_bmf = observations
            .iter()
            .map(|o| o.bmf[ri])
            .fold(0.0f64, f64::max);
        let valid = worst_bmf < params.validity_threshold;
        for (qi, &q) in params.qs.iter().enumerate() {
            let samples: Vec<f64> = observations.iter().map(|o| o.norms[ri][qi]).collect();
            let mut prev: Option<f64> = None;
            for &rho in &params.rhos {
                let (estimate, stderr) = rho_moment(&samples, rho)?;
                let stderr = stderr.unwrap_or(0.0);
                // power-mean monotonicity in ρ, checked on every run
                if let Some(p) = prev {
                    if estimate < p * (1.0 - 1e-10) {
                        return Err(Error::Fit(format!(
                            "ρ-moment monotonicity violated at t={t}, q={q}: {estimate} < {p}"
                        )));
                    }
                }
                prev = Some(estimate);
                rows.push(NormEstimate {
                    t,
                    q,
                    rho,
                    estimate,
                    stderr,
                    n_paths: params.n_paths,
                    valid,
                    boundary_mass: worst_bmf,
                });
            }
        }
    }
    Ok(EnsembleStats {
        rows,
        record_times: params.record_times.clone(),
        qs: params.qs.clone(),
        rhos: params.rhos.clone(),
        core_fraction: params.core_fraction,
        validity_threshold: params.validity_threshold,
        n_paths: params.n_paths,
    })
}

/// Power-law fit of one `(q, ρ)` column of the table.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence half-width of the slope.
    pub ci95: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    pub q: f64,
    pub rho: f64,
    /// The decay exponent the theory predicts: slope target is `-α`.
    pub target_alpha: f64,
    /// Whether `α > 1` (the range the bootstrap argument needs).
    pub bootstrap_range: bool,
}

/// Relative-stderr floor used in the fit weights. Monte Carlo error is not
/// the only uncertainty a point carries: splitting and band-limiting biases
/// are at the 1e-3 relative scale, so a near-deterministic early record
/// (stderr ~ 1e-16 before the noise has differentiated paths) must not
/// receive a ~1e32 weight and dominate the slope.
pub const FIT_REL_SE_FLOOR: f64 = 1e-3;

/// Weighted log-log fit of `estimate(t)` over validity-flagged points in
/// `window`, weights `1/max(stderr/estimate, floor)²`. Refuses to fit on
/// fewer than 6 points or a span under 4× in t.
pub fn fit_decay(
    stats: &EnsembleStats,
    d: usize,
    q: f64,
    rho: f64,
    window: (f64, f64),
) -> Result<DecayFit> {
    let rows: Vec<&NormEstimate> = stats
        .rows
        .iter()
        .filter(|r| {
            r.q == q && r.rho == rho && r.t >= window.0 && r.t <= window.1 && r.valid
        })
        .collect();
    if rows.len() < 6 {
        return Err(Error::ValidityWindow(format!(
            "only {} validity-flagged points for q={q}, ρ={rho} in [{}, {}] (need ≥ 6)",
            rows.len(),
            window.0,
            window.1
        )));
    }
    let t_min = rows.iter().map(|r| r.t).fold(f64::INFINITY, f64::min);
    let t_max = rows.iter().map(|r| r.t).fold(0.0f64, f64::max);
    if t_max < 4.0 * t_min * (1.0 - 1e-9) {
        return Err(Error::ValidityWindow(format!(
            "fit window [{t_min}, {t_max}] spans less than a factor of 4 in t"
        )));
    }
    if rows.iter().any(|r| !(r.estimate > 0.0)) {
        return Err(Error::Fit("nonpositive estimate in fit window".into()));
    }
    let x: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.estimate.ln()).collect();
    // inverse squared relative stderr, floored (see FIT_REL_SE_FLOOR); a
    // fully degenerate table (every stderr zero, e.g. δ = 0) falls back to
    // the unweighted fit inside weighted_line_fit
    let degenerate = rows.iter().all(|r| r.stderr == 0.0);
    let w: Vec<f64> = rows
        .iter()
        .map(|r| {
            if degenerate {
                0.0
            } else {
                let rel = (r.stderr / r.estimate).max(FIT_REL_SE_FLOOR);
                1.0 / (rel * rel)
            }
        })
        .collect();
    let fit = stats::weighted_line_fit(&x, &y, &w)
        .ok_or_else(|| Error::Fit("degenerate fit input".into()))?;
    let alpha = normspec::alpha(d, q);
    Ok(DecayFit {
        slope: fit.slope,
        intercept: fit.intercept,
        ci95: z_for_confidence(0.95) * fit.slope_se,
        window: (t_min, t_max),
        n_points: rows.len(),
        q,
        rho,
        target_alpha: alpha,
        bootstrap_range: alpha > 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::gaussian_free_lq_norm;

    #[test]
    fn rho_moment_two_samples() {
        let (est, se) = rho_moment(&[3.0, 4.0], 2.0).unwrap();
        assert!((est - 12.5f64.sqrt()).abs() < 1e-14);
        assert!(se.is_some());
    }

    #[test]
    fn rho_moment_constant_samples() {
        let (est, se) = rho_moment(&[2.5; 40], 4.0).unwrap();
        assert!((est - 2.5).abs() < 1e-13);
        assert_eq!(se.unwrap(), 0.0);
    }

    #[test]
    fn rho_moment_single_sample_has_no_stderr() {
        let (est, se) = rho_moment(&[1.7], 2.0).unwrap();
        assert!((est - 1.7).abs() < 1e-15);
        assert!(se.is_none());
    }

    #[test]
    fn rho_moment_matches_lognormal_closed_form() {
        // X = e^Z, Z ~ N(0, s²): (E X^ρ)^{1/ρ} = e^{ρ s²/2}
        let s = 0.4;
        let rho = 2.0;
        let m = 10_000;
        let mut rng = crate::noise::Xoshiro256pp::new(99);
        let samples: Vec<f64> = (0..m)
            .map(|_| (s * rng.next_standard_normal()).exp())
            .collect();
        let (est, se) = rho_moment(&samples, rho).unwrap();
        let expect = (rho * s * s / 2.0).exp();
        let se = se.unwrap();
        assert!(
            (est - expect).abs() < 4.0 * se,
            "estimate {est}, expect {expect}, se {se}"
        );
    }

    #[test]
    fn rho_moment_is_monotone_in_rho() {
        let mut rng = crate::noise::Xoshiro256pp::new(7);
        let samples: Vec<f64> = (0..200).map(|_| rng.next_open01() + 0.1).collect();
        let mut prev = 0.0;
        for rho in [1.0, 2.0, 3.0, 4.0, 8.0] {
            let (est, _) = rho_moment(&samples, rho).unwrap();
            assert!(est >= prev - 1e-12, "ρ={rho}: {est} < {prev}");
            prev = est;
        }
    }

    #[test]
    fn fit_recovers_exact_power_law() {
        // synthetic table: estimate = c · t^{-9/8}
        let times: Vec<f64> = (0..8).map(|i| 2.0f64 * 1.5f64.powi(i)).collect();
        let rows: Vec<NormEstimate> = times
            .iter()
            .map(|&t| NormEstimate {
                t,
                q: 8.0,
                rho: 2.0,
                estimate: 3.7 * t.powf(-1.125),
                stderr: 0.0,
                n_paths: 16,
                valid: true,
                boundary_mass: 0.0,
            })
            .collect();
        let stats = EnsembleStats {
            rows,
            record_times: times,
            qs: vec![8.0],
            rhos: vec![2.0],
            core_fraction: 0.5,
            validity_threshold: 1e-6,
            n_paths: 16,
        };
        let fit = fit_decay(&stats, 3, 8.0, 2.0, (1.0, 100.0)).unwrap();
        assert!((fit.slope + 1.125).abs() < 1e-12, "slope {}", fit.slope);
        assert!(fit.ci95 < 1e-10);
        assert!((fit.target_alpha - 1.125).abs() < 1e-15);
        assert!(fit.bootstrap_range);
    }

    #[test]
    fn fit_refuses_thin_windows() {
        let times: Vec<f64> = (0..8).map(|i| 2.0 + 0.1 * i as f64).collect();
        let rows: Vec<NormEstimate> = times
            .iter()
            .map(|&t| NormEstimate {
                t,
                q: 4.0,
                rho: 2.0,
                estimate: t.powf(-0.75),
                stderr: 0.0,
                n_paths: 4,
                valid: true,
                boundary_mass: 0.0,
            })
            .collect();
        let stats = EnsembleStats {
            rows,
            record_times: times,
            qs: vec![4.0],
            rhos: vec![2.0],
            core_fraction: 0.5,
            validity_threshold: 1e-6,
            n_paths: 4,
        };
        assert!(matches!(
            fit_decay(&stats, 3, 4.0, 2.0, (0.0, 10.0)),
            Err(Error::ValidityWindow(_))
        ));
    }

    #[test]
    fn free_ensemble_is_degenerate_and_matches_free_norms() {
        // δ = 0: all paths identical, stderr 0, norms equal the free ones;
        // ρ = q = 2 must return ‖f‖₂ at every t (pathwise conservation).
        let grid = Grid::new(1, 128, 64.0).unwrap();
        let a = 0.5;
        let f = ComplexField::gaussian_isotropic(grid.clone(), a);
        let pot = PotentialSpec::gaussian_isotropic(1, 1.0, 2.0, 0.0);
        let params = EnsembleParams {
            master_seed: 5,
            n_paths: 3,
            dt: 0.05,
            record_times: vec![0.5, 1.0],
            qs: vec![2.0, 4.0],
            rhos: vec![2.0, 4.0],
            core_fraction: 0.5,
            validity_threshold: 1e-6,
        };
        let stats = run_ensemble(&grid, &pot, &f, &params, Some(2)).unwrap();
        let mass = f.l2_norm();
        for row in &stats.rows {
            assert_eq!(row.stderr, 0.0, "degenerate ensemble must have zero stderr");
            if row.q == 2.0 {
                assert!(
                    (row.estimate - mass).abs() / mass < 1e-10,
                    "mass mismatch at t={}",
                    row.t
                );
            }
            if row.q == 4.0 && row.rho == 2.0 {
                let expect = gaussian_free_lq_norm(1, a, row.t, 4.0);
                assert!(
                    (row.estimate - expect).abs() / expect < 1e-3,
                    "free L⁴ norm at t={}: {} vs {}",
                    row.t,
                    row.estimate,
                    expect
                );
            }
        }
    }

    #[test]
    fn constant_potential_norms_equal_free_norms_pathwise() {
        let grid = Grid::new(1, 64, 32.0).unwrap();
        let f = ComplexField::gaussian_isotropic(grid.clone(), 0.5);
        let pot = PotentialSpec::constant(1.3, 0.2);
        let params = EnsembleParams {
            master_seed: 11,
            n_paths: 4,
            dt: 0.05,
            record_times: vec![0.25, 0.5],
            qs: vec![4.0],
            rhos: vec![2.0],
            core_fraction: 0.5,
            validity_threshold: 1e-3,
        };
        let stats = run_ensemble(&grid, &pot, &f, &params, Some(1)).unwrap();
        let free = run_ensemble(
            &grid,
            &PotentialSpec::gaussian_isotropic(1, 1.0, 2.0, 0.0),
            &f,
            &params,
            Some(1),
        )
        .unwrap();
        for (a, b) in stats.rows.iter().zip(free.rows.iter()) {
            assert!(a.stderr < 1e-12 * a.estimate.max(1.0));
            assert!(
                (a.estimate - b.estimate).abs() / b.estimate < 1e-10,
                "global phase must not change norms"
            );
        }
    }

    #[test]
    fn worker_count_does_not_change_bytes() {
        let grid = Grid::new(1, 64, 32.0).unwrap();
        let f = ComplexField::gaussian_isotropic(grid.clone(), 0.5);
        let pot = PotentialSpec::gaussian_isotropic(1, 1.0, 2.0, 0.08);
        let params = EnsembleParams {
            master_seed: 31,
            n_paths: 6,
            dt: 0.05,
            record_times: vec![0.25, 0.5],
            qs: vec![2.0, 8.0],
            rhos: vec![2.0, 4.0],
            core_fraction: 0.5,
            validity_threshold: 1e-3,
        };
        let a = run_ensemble(&grid, &pot, &f, &params, Some(1)).unwrap();
        let b = run_ensemble(&grid, &pot, &f, &params, Some(4)).unwrap();
        assert_eq!(a.to_csv("x"), b.to_csv("x"));
    }
}
