//! Structural verification of the Duhamel expansion machinery.
//!
//! The solution satisfies
//! `Ψ(t) = e^{itΔ}f - iδ∫₀ᵗ e^{i(t-s)Δ} V e^{isΔ}f dB_s
//!        - (δ²/2)∫₀ᵗ e^{i(t-s)Δ} V² e^{isΔ}f ds + R(t)`,
//! with the remainder `R` collecting every term of order δ² and higher
//! (its leading part is the double stochastic integral with coefficient
//! `-δ²`). Stochastic integrals are discretized as left-endpoint Itô sums on
//! the path mesh — the convention the equation itself is posed in; midpoint
//! sums would converge to the wrong (Stratonovich) object.

use num_complex::Complex64;
use serde::Serialize;

use crate::ensemble::{map_paths, rho_moment};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::integrator::evolve;
use crate::noise::{sample_path, BrownianPath};
use crate::normspec::alpha;
use crate::potential::PotentialSpec;
use crate::spectral::{free_propagate_with, Spectral};
use crate::stats;

/// First-line Duhamel terms plus the defined-by-subtraction remainder.
#[derive(Debug, Clone)]
pub struct DuhamelTerms {
    pub t: f64,
    pub free: ComplexField,
    /// `-iδ ∫₀ᵗ e^{i(t-s)Δ} V e^{isΔ}f dB_s` (left-endpoint Itô sum).
    pub stochastic: ComplexField,
    /// `-(δ²/2) ∫₀ᵗ e^{i(t-s)Δ} V² e^{isΔ}f ds` (left-endpoint sum).
    pub drift: ComplexField,
    /// `Ψ(t) - free - stochastic - drift`.
    pub remainder: ComplexField,
    pub psi: ComplexField,
}

/// Expansion truncated at a configurable order: `explicit` holds the named
/// iterated-integral terms, and `remainder = Ψ(t) - Σ explicit` collects
/// everything of order `δ^(order+1)` and higher.
#[derive(Debug, Clone)]
pub struct DuhamelExpansion {
    pub t: f64,
    pub order: usize,
    pub explicit: Vec<(&'static str, ComplexField)>,
    pub remainder: ComplexField,
    pub psi: ComplexField,
}

/// Compute the explicit first-line terms on the path mesh and reconstruct
/// the remainder from the integrated solution on the same path.
pub fn duhamel_terms(
    f: &ComplexField,
    potential: &PotentialSpec,
    path: &BrownianPath,
    t: f64,
) -> Result<DuhamelTerms> {
    let exp = duhamel_expansion(f, potential, path, t, 1)?;
    let mut terms = exp.explicit.into_iter();
    let free = terms.next().expect("free term").1;
    let stochastic = terms.next().expect("stochastic term").1;
    let drift = terms.next().expect("drift term").1;
    Ok(DuhamelTerms {
        t: exp.t,
        free,
        stochastic,
        drift,
        remainder: exp.remainder,
        psi: exp.psi,
    })
}

/// Iterated Duhamel expansion of the solution about the free flow,
/// truncated at `order` ∈ {1, 2}. Order 1 subtracts the first-line terms
/// (remainder of order δ²); order 2 additionally subtracts the four
/// iterated double integrals (remainder of order δ³, led by the triple
/// stochastic integral). All stochastic integrals are left-endpoint Itô
/// sums on the path mesh.
pub fn duhamel_expansion(
    f: &ComplexField,
    potential: &PotentialSpec,
    path: &BrownianPath,
    t: f64,
    order: usize,
) -> Result<DuhamelExpansion> {
    if !(1..=2).contains(&order) {
        return Err(Error::Config(format!(
            "expansion order must be 1 or 2, got {order}"
        )));
    }
    let grid = f.grid().clone();
    let dt = path.dt;
    let steps_f = t / dt;
    let steps = steps_f.round() as usize;
    if (steps_f - steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::Noise(format!("t = {t} is not on the path mesh {dt}")));
    }
    if steps > path.len() {
        return Err(Error::Noise(format!(
            "t = {t} beyond the path horizon {}",
            path.horizon
        )));
    }
    let delta = potential.delta;
    let v = potential.sample(&grid)?;
    let spectral = Spectral::new(&grid);
    let n = grid.len();
    let zero = vec![Complex64::new(0.0, 0.0); n];

    // k-space free state ĝ(s_k), running phase e^{+i|k|²s_k}; accumulators
    // are kept coefficient-free and scaled at the end.
    let mut g_hat = f.values().to_vec();
    spectral.forward(&mut g_hat, false);
    let free_hat = g_hat.clone();
    let kick = spectral.free_multiplier_table(dt);
    let unkick: Vec<Complex64> = kick.iter().map(|c| c.conj()).collect();
    let mut phase = vec![Complex64::new(1.0, 0.0); n];
    let mut s1 = zero.clone(); // Σ e^{+i|k|²r} F(V g_r) ΔB_r
    let mut d1 = zero.clone(); // Σ e^{+i|k|²r} F(V² g_r) dr
    // second-order outer sums over the inner partial sums (r < s strictly)
    let mut s2 = zero.clone(); // V ∘ inner-dB, outer dB
    let mut m2 = zero.clone(); // V² ∘ inner-dB, outer ds   (term II)
    let mut m1 = zero.clone(); // V ∘ inner-ds, outer dB    (term III)
    let mut d2 = zero.clone(); // V² ∘ inner-ds, outer ds   (term I)
    let mut g_x = zero.clone();
    let mut work = zero.clone();
    let mut inner = zero.clone();

    for k in 0..steps {
        let db = path.increments[k];
        if order == 2 {
            // inner convolutions at s_k from the strictly-earlier partial
            // sums: A(s) = e^{-is·(-Δ)-hat} applied to the running sums
            for (src, outer_db, outer_ds) in
                [(&s1, &mut s2, &mut m2), (&d1, &mut m1, &mut d2)]
            {
                inner.copy_from_slice(src);
                for (a, ph) in inner.iter_mut().zip(phase.iter()) {
                    // e^{-i|k|²s_k} = conj(running phase)
                    *a *= ph.conj();
                }
                spectral.inverse(&mut inner, false);
                // V·A and V²·A, pushed into the outer sums
                for (w, (av, vv)) in work.iter_mut().zip(inner.iter().zip(v.values().iter())) {
                    *w = av * vv.re;
                }
                spectral.forward(&mut work, false);
                for ((acc, w), ph) in outer_db.iter_mut().zip(work.iter()).zip(phase.iter()) {
                    *acc += w * ph * db;
                }
                for (w, (av, vv)) in work.iter_mut().zip(inner.iter().zip(v.values().iter())) {
                    *w = av * (vv.re * vv.re);
                }
                spectral.forward(&mut work, false);
                for ((acc, w), ph) in outer_ds.iter_mut().zip(work.iter()).zip(phase.iter()) {
                    *acc += w * ph * dt;
                }
            }
        }

        g_x.copy_from_slice(&g_hat);
        spectral.inverse(&mut g_x, false);
        // V · g(s_k)
        for (w, (gv, vv)) in work.iter_mut().zip(g_x.iter().zip(v.values().iter())) {
            *w = gv * vv.re;
        }
        spectral.forward(&mut work, false);
        for ((acc, w), ph) in s1.iter_mut().zip(work.iter()).zip(phase.iter()) {
            *acc += w * ph * db;
        }
        // V² · g(s_k)
        for (w, (gv, vv)) in work.iter_mut().zip(g_x.iter().zip(v.values().iter())) {
            *w = gv * (vv.re * vv.re);
        }
        spectral.forward(&mut work, false);
        for ((acc, w), ph) in d1.iter_mut().zip(work.iter()).zip(phase.iter()) {
            *acc += w * ph * dt;
        }
        // advance the free state and the pull-back phase
        for ((g, m), (ph, um)) in g_hat
            .iter_mut()
            .zip(kick.iter())
            .zip(phase.iter_mut().zip(unkick.iter()))
        {
            *g *= m;
            *ph *= um;
        }
    }

    let final_kick = spectral.free_multiplier_table(t);
    let finish = |hat: &[Complex64], coef: Complex64| -> Result<ComplexField> {
        let mut out: Vec<Complex64> = hat.to_vec();
        for (h, m) in out.iter_mut().zip(final_kick.iter()) {
            *h = *h * m * coef;
        }
        spectral.inverse(&mut out, false);
        ComplexField::new(grid.clone(), out)
    };

    let minus_i_delta = Complex64::new(0.0, -delta);
    let half_delta_sq = Complex64::new(-delta * delta / 2.0, 0.0);
    let mut explicit: Vec<(&'static str, ComplexField)> = vec![
        ("free", finish(&free_hat, Complex64::new(1.0, 0.0))?),
        ("stochastic", finish(&s1, minus_i_delta)?),
        ("drift", finish(&d1, half_delta_sq)?),
    ];
    if order == 2 {
        explicit.push(("IV", finish(&s2, minus_i_delta * minus_i_delta)?));
        explicit.push(("III", finish(&m1, minus_i_delta * half_delta_sq)?));
        explicit.push(("II", finish(&m2, half_delta_sq * minus_i_delta)?));
        explicit.push(("I", finish(&d2, half_delta_sq * half_delta_sq)?));
    }

    let traj = evolve(f, potential, path, &[t], false)?;
    let psi = traj.fields.into_iter().next().expect("one record");

    let mut remainder = psi.clone();
    for (_, term) in &explicit {
        remainder.axpy(Complex64::new(-1.0, 0.0), term);
    }

    Ok(DuhamelExpansion {
        t,
        order,
        explicit,
        remainder,
        psi,
    })
}

/// δ-scaling of the expansion: `L²_ω` norms of the remainder and of the
/// first-order stochastic term across couplings, with fitted exponents.
/// The same paths drive every δ (common random numbers). The remainder
/// exponent target is `order + 1`.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaScaling {
    pub deltas: Vec<f64>,
    pub order: usize,
    pub remainder_norms: Vec<f64>,
    pub first_order_norms: Vec<f64>,
    pub remainder_exponent: f64,
    pub first_order_exponent: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn delta_scaling(
    potential_shape: &PotentialSpec,
    f: &ComplexField,
    deltas: &[f64],
    t: f64,
    dt: f64,
    n_paths: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<DeltaScaling> {
    delta_scaling_at_order(
        potential_shape,
        f,
        deltas,
        t,
        dt,
        n_paths,
        master_seed,
        workers,
        1,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn delta_scaling_at_order(
    potential_shape: &PotentialSpec,
    f: &ComplexField,
    deltas: &[f64],
    t: f64,
    dt: f64,
    n_paths: usize,
    master_seed: u64,
    workers: Option<usize>,
    order: usize,
) -> Result<DeltaScaling> {
    if deltas.len() < 2 || deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Config("need ≥ 2 positive couplings".into()));
    }
    let mut remainder_norms = Vec::with_capacity(deltas.len());
    let mut first_order_norms = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let mut pot = potential_shape.clone();
        pot.delta = delta;
        let per_path: Vec<(f64, f64)> = map_paths(n_paths, workers, |index| {
            let path = sample_path(master_seed, index, dt, t)?;
            let exp = duhamel_expansion(f, &pot, &path, t, order)?;
            let stochastic = &exp.explicit[1].1;
            Ok((
                exp.remainder.l2_norm().powi(2),
                stochastic.l2_norm().powi(2),
            ))
        })?;
        let rem: Vec<f64> = per_path.iter().map(|p| p.0).collect();
        let fo: Vec<f64> = per_path.iter().map(|p| p.1).collect();
        remainder_norms.push(stats::mean(&rem).sqrt());
        first_order_norms.push(stats::mean(&fo).sqrt());
    }
    let x: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let fit_exp = |ys: &[f64]| -> Result<f64> {
        let y: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
        stats::weighted_line_fit(&x, &y, &vec![0.0; x.len()])
            .map(|f| f.slope)
            .ok_or_else(|| Error::Fit("degenerate δ-scaling fit".into()))
    };
    Ok(DeltaScaling {
        deltas: deltas.to_vec(),
        order,
        remainder_exponent: fit_exp(&remainder_norms)?,
        first_order_exponent: fit_exp(&first_order_norms)?,
        remainder_norms,
        first_order_norms,
    })
}

/// Itô isometry at ρ = 2 for the stochastic convolution with deterministic
/// integrand `Φ(s) = V e^{isΔ}f`:
/// `E‖Σ_k e^{i(t-s_k)Δ}Φ(s_k)ΔB_k‖₂² = Σ_k ‖Φ(s_k)‖₂² dt` exactly in law.
#[derive(Debug, Clone, Serialize)]
pub struct IsometryCheck {
    pub mc_second_moment: f64,
    pub quadrature: f64,
    pub relative_error: f64,
    /// Standard error of the Monte Carlo side, relative to the quadrature.
    pub relative_stderr: f64,
    pub n_paths: usize,
}

pub fn ito_isometry_check(
    grid: &Grid,
    potential: &PotentialSpec,
    f: &ComplexField,
    t: f64,
    dt: f64,
    n_paths: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<IsometryCheck> {
    if n_paths < 100 {
        return Err(Error::Config("isometry check needs ≥ 100 paths".into()));
    }
    let steps_f = t / dt;
    let steps = steps_f.round() as usize;
    if (steps_f - steps as f64).abs() > 1e-9 * steps_f.max(1.0) || steps == 0 {
        return Err(Error::Noise(format!("t = {t} not a positive multiple of dt = {dt}")));
    }
    let v = potential.sample(grid)?;
    let spectral = Spectral::new(grid);
    let n = grid.len();

    // Φ̂(s_k) with the pull-back phase folded in; the final unimodular
    // e^{-i|k|²t} cannot change L² norms and is omitted.
    let mut g_hat = f.values().to_vec();
    spectral.forward(&mut g_hat, false);
    let kick = spectral.free_multiplier_table(dt);
    let unkick: Vec<Complex64> = kick.iter().map(|c| c.conj()).collect();
    let mut phase = vec![Complex64::new(1.0, 0.0); n];
    let mut kernels: Vec<Vec<Complex64>> = Vec::with_capacity(steps);
    let mut quadrature = Vec::with_capacity(steps);
    let mut g_x = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..steps {
        g_x.copy_from_slice(&g_hat);
        spectral.inverse(&mut g_x, false);
        let mut work: Vec<Complex64> = g_x
            .iter()
            .zip(v.values().iter())
            .map(|(g, vv)| g * vv.re)
            .collect();
        let phi_norm_sq: f64 =
            stats::pairwise_sum_by(&work, |c| c.norm_sqr()) * grid.cell_volume();
        quadrature.push(phi_norm_sq * dt);
        spectral.forward(&mut work, false);
        for (w, ph) in work.iter_mut().zip(phase.iter()) {
            *w *= ph;
        }
        kernels.push(work);
        for ((g, m), (ph, um)) in g_hat
            .iter_mut()
            .zip(kick.iter())
            .zip(phase.iter_mut().zip(unkick.iter()))
        {
            *g *= m;
            *ph *= um;
        }
    }
    let quadrature = stats::pairwise_sum(&quadrature);

    let second_moments: Vec<f64> = map_paths(n_paths, workers, |index| {
        let path = sample_path(master_seed, index, dt, t)?;
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        for (k, kernel) in kernels.iter().enumerate() {
            let db = path.increments[k];
            for (a, w) in acc.iter_mut().zip(kernel.iter()) {
                *a += w * db;
            }
        }
        Ok(spectral.l2_norm_hat(&acc).powi(2))
    })?;

    let mc = stats::mean(&second_moments);
    let se = stats::standard_error(&second_moments);
    let relative_error = if quadrature > 0.0 {
        (mc - quadrature).abs() / quadrature
    } else {
        mc.abs()
    };
    let relative_stderr = if quadrature > 0.0 { se / quadrature } else { se };
    Ok(IsometryCheck {
        mc_second_moment: mc,
        quadrature,
        relative_error,
        relative_stderr,
        n_paths,
    })
}

/// One measured ratio against a closed-form bound expression.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeResult {
    pub probe: String,
    /// Chain times `u_j` (or `[s, t]` for the modulated probe).
    pub u: Vec<f64>,
    /// Modulation frequency actually used (snapped to the lattice).
    pub xi: Vec<f64>,
    pub delta: f64,
    pub q: f64,
    pub ratio: f64,
    pub bound: String,
}

/// Estimate of the Gronwall functional
/// `F_t(s) = sup_ξ ‖e^{i(t-s)Δ} e^{i⟨ξ,·⟩} Ψ(s)‖_{L^ρ_ω L^q_x}`
/// over a finite lattice ξ-set, divided by
/// `t^{-α} ‖f‖_p exp(c₁ s + c₂ s²)` with `c₁ = δ²‖V̂‖₁²`, `c₂ = δ⁴‖V̂‖₁⁴`
/// (absolute constants are calibration-time quantities, not asserted here).
#[allow(clippy::too_many_arguments)]
pub fn modulated_probe(
    grid: &Grid,
    potential: &PotentialSpec,
    f: &ComplexField,
    s: f64,
    t: f64,
    xi_set: &[Vec<f64>],
    q: f64,
    rho: f64,
    dt: f64,
    n_paths: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<ProbeResult> {
    if !(s <= t) || s < 0.0 {
        return Err(Error::Config(format!("need 0 ≤ s ≤ t, got s={s}, t={t}")));
    }
    if xi_set.is_empty() {
        return Err(Error::Config("empty modulation set".into()));
    }
    let d = grid.dim();
    let spectral = Spectral::new(grid);
    // Ψ(s) per path
    let fields: Vec<ComplexField> = map_paths(n_paths, workers, |index| {
        let path = sample_path(master_seed, index, dt, if s > 0.0 { s } else { dt })?;
        if s == 0.0 {
            return Ok(f.clone());
        }
        let traj = evolve(f, potential, &path, &[s], false)?;
        Ok(traj.fields.into_iter().next().expect("one record"))
    })?;

    let mut best: Option<(f64, Vec<f64>)> = None;
    for xi in xi_set {
        let snapped = grid.snap_frequency(xi)?;
        let norms: Vec<f64> = fields
            .iter()
            .map(|psi| {
                let modulated = psi.modulate(&snapped)?;
                let propagated = free_propagate_with(&spectral, &modulated, t - s, false)?;
                propagated.lp_norm(q)
            })
            .collect::<Result<Vec<f64>>>()?;
        let (estimate, _) = rho_moment(&norms, rho)?;
        if best.as_ref().is_none_or(|(b, _)| estimate > *b) {
            best = Some((estimate, snapped));
        }
    }
    let (sup_norm, xi_star) = best.expect("nonempty ξ set");

    let a = alpha(d, q);
    let p = q / (q - 1.0);
    let f_p = f.lp_norm(p)?;
    let vhat = potential.fourier_l1_norm(d)?;
    let delta = potential.delta;
    let c1 = delta.powi(2) * vhat.powi(2);
    let c2 = delta.powi(4) * vhat.powi(4);
    let bound = t.powf(-a) * f_p * (c1 * s + c2 * s * s).exp();
    Ok(ProbeResult {
        probe: "modulated".into(),
        u: vec![s, t],
        xi: xi_star,
        delta,
        q,
        ratio: sup_norm / bound,
        bound: "t^-alpha * |f|_p * exp(d^2|Vh|^2 s + d^4|Vh|^4 s^2)".into(),
    })
}

/// Which closed-form denominator the chain probe divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundForm {
    /// `|Σ u_j|^{-α} ∏‖V̂‖₁ ‖f‖_p` — valid for any nonzero time sum.
    Exchange,
    /// `∏⟨u_j⟩^{-α} ∏(‖V̂‖₁ + ‖V‖_{pq/(q-p)}) ‖f‖_p` — needs `|Σ u_j| > 1`.
    Strong,
}

/// Apply `e^{iu_mΔ} V e^{iu_{m-1}Δ} ⋯ V e^{iu_1Δ}` to `f` and compare the
/// `L^q` norm against the requested bound.
pub fn chain_bound_probe(
    grid: &Grid,
    potential: &PotentialSpec,
    f: &ComplexField,
    u: &[f64],
    q: f64,
    form: BoundForm,
) -> Result<ProbeResult> {
    let m = u.len();
    if !(2..=3).contains(&m) {
        return Err(Error::Config(format!("chain length must be 2 or 3, got {m}")));
    }
    if u.iter().any(|&x| x < 0.0) {
        return Err(Error::Config("chain times must be nonnegative".into()));
    }
    let total: f64 = u.iter().sum();
    match form {
        BoundForm::Exchange => {
            if total.abs() < 1e-9 {
                return Err(Error::Config("exchange bound needs Σu ≠ 0".into()));
            }
        }
        BoundForm::Strong => {
            if total <= 1.0 {
                return Err(Error::Config("strong bound needs Σu > 1".into()));
            }
        }
    }
    let d = grid.dim();
    let spectral = Spectral::new(grid);
    let v = potential.sample(grid)?;
    let mut w = f.clone();
    for (j, &uj) in u.iter().enumerate() {
        w = free_propagate_with(&spectral, &w, uj, false)?;
        if j + 1 < m {
            for (x, vv) in w.values_mut().iter_mut().zip(v.values().iter()) {
                *x *= vv.re;
            }
        }
    }
    let norm_q = w.lp_norm(q)?;
    let a = alpha(d, q);
    let p = q / (q - 1.0);
    let f_p = f.lp_norm(p)?;
    let vhat = potential.fourier_l1_norm(d)?;
    let factors = (m - 1) as i32;
    let (bound, desc) = match form {
        BoundForm::Exchange => (
            total.abs().powf(-a) * vhat.powi(factors) * f_p,
            "|sum u|^-alpha * |Vh|^(m-1) * |f|_p",
        ),
        BoundForm::Strong => {
            let r = if (q - p).abs() < 1e-12 {
                f64::INFINITY
            } else {
                p * q / (q - p)
            };
            let v_lr = potential.lr_norm(d, r)?;
            let japanese: f64 = u.iter().map(|&x| (1.0 + x.abs()).powf(-a)).product();
            (
                japanese * (vhat + v_lr).powi(factors) * f_p,
                "prod <u_j>^-alpha * (|Vh| + |V|_pq/(q-p))^(m-1) * |f|_p",
            )
        }
    };
    if !(bound > 0.0) {
        return Err(Error::Fit("vanishing bound denominator".into()));
    }
    Ok(ProbeResult {
        probe: match form {
            BoundForm::Exchange => "chain-exchange".into(),
            BoundForm::Strong => "chain-strong".into(),
        },
        u: u.to_vec(),
        xi: vec![],
        delta: potential.delta,
        q,
        ratio: norm_q / bound,
        bound: desc.into(),
    })
}
