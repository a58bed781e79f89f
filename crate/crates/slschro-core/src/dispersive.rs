//! Free dispersive decay oracle.
//!
//! For product data the free flow factorizes across axes:
//! `e^{itΔ}(u⊗u⊗u) = (e^{it∂²}u)^{⊗3}` and `‖u^{⊗d}‖_{L^q(ℝ^d)} =
//! ‖u‖_{L^q(ℝ)}^d`, so the d-dimensional free norms of Gaussian data are
//! computed exactly from a single well-resolved 1-D axis grid. That is the
//! only way to cover a full decade of decay inside the boundary-validity
//! window at `d = 3`: a direct 3-D grid would need ≥ ~1300 points per axis
//! (the packet grows linearly in `t` while the Nyquist range must hold the
//! initial momentum content), far beyond desk memory.

use serde::Serialize;

use crate::ensemble::{EnsembleStats, NormEstimate};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::spectral::{free_propagate_with, Spectral};

#[derive(Debug, Clone, Serialize)]
pub struct FreeDispersiveParams {
    /// Target dimension of the product norms.
    pub d: usize,
    /// Gaussian exponent: data is `e^{-a|x|²}`.
    pub a: f64,
    pub qs: Vec<f64>,
    pub times: Vec<f64>,
    /// Per-axis 1-D grid resolution.
    pub axis_n: usize,
    pub axis_length: f64,
    pub core_fraction: f64,
    pub validity_threshold: f64,
}

impl Default for FreeDispersiveParams {
    fn default() -> Self {
        FreeDispersiveParams {
            d: 3,
            a: 0.5,
            qs: vec![4.0, 8.0],
            times: log_spaced(7.0, 70.0, 9),
            axis_n: 16384,
            axis_length: 4096.0,
            core_fraction: 0.5,
            validity_threshold: 1e-8,
        }
    }
}

/// Log-spaced sample times.
pub fn log_spaced(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && t0 > 0.0 && t1 > t0);
    let step = (t1 / t0).ln() / (n - 1) as f64;
    (0..n).map(|i| t0 * (step * i as f64).exp()).collect()
}

/// Exact free `L^q(ℝ^d)` norms of Gaussian data over `times`, computed on a
/// per-axis grid. Output rows carry `ρ = 2` with zero standard error (the
/// free flow is deterministic) so the decay-fit machinery applies directly.
pub fn free_dispersive(params: &FreeDispersiveParams) -> Result<EnsembleStats> {
    if params.d == 0 || params.d > crate::grid::MAX_DIM {
        return Err(Error::Config(format!("dimension {} out of range", params.d)));
    }
    if !(params.a > 0.0) {
        return Err(Error::Config("gaussian exponent a must be positive".into()));
    }
    let axis = Grid::new(1, params.axis_n, params.axis_length)?;
    let spectral = Spectral::new(&axis);
    let f = ComplexField::gaussian_isotropic(axis.clone(), params.a);
    let d = params.d as i32;
    let mut rows = Vec::new();
    for &t in &params.times {
        let u = free_propagate_with(&spectral, &f, t, false)?;
        let bmf_axis = u.boundary_mass_fraction(params.core_fraction)?;
        // d-dimensional boundary fraction of the product state
        let boundary = 1.0 - (1.0 - bmf_axis).powi(d);
        let valid = boundary < params.validity_threshold;
        for &q in &params.qs {
            let axis_norm = u.lp_norm(q)?;
            rows.push(NormEstimate {
                t,
                q,
                rho: 2.0,
                estimate: axis_norm.powi(d),
                stderr: 0.0,
                n_paths: 1,
                valid,
                boundary_mass: boundary,
            });
        }
    }
    Ok(EnsembleStats {
        rows,
        record_times: params.times.clone(),
        qs: params.qs.clone(),
        rhos: vec![2.0],
        core_fraction: params.core_fraction,
        validity_threshold: params.validity_threshold,
        n_paths: 1,
    })
}
