//! Discrete Fourier transforms and the exact free propagator `e^{itΔ}`.
//!
//! Transforms are the unnormalized forward DFT and its inverse scaled by
//! `1/N`. Since every axis length is a power of two, the normalization is
//! exact in floating point. On the frequency lattice the Laplacian is the
//! multiplier `-|k|²`, so the free flow is the unimodular multiplier
//! `e^{-i|k|²t}` — unitary and exact on grid modes for any `t`, negative
//! times included.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::field::ComplexField;
use crate::grid::Grid;

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// Per-grid transform plans plus the frequency tables used by multipliers.
pub struct Spectral {
    grid: Grid,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
    /// `|k|²` per flat index, row-major.
    ksq: Vec<f64>,
    inv_scale: f64,
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let d = grid.dim();
        let fwd = (0..d).map(|a| plan(grid.dims()[a], false)).collect();
        let inv = (0..d).map(|a| plan(grid.dims()[a], true)).collect();
        let ksq = build_ksq(grid);
        let inv_scale = 1.0 / grid.len() as f64;
        Spectral {
            grid: grid.clone(),
            fwd,
            inv,
            ksq,
            inv_scale,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ksq(&self) -> &[f64] {
        &self.ksq
    }

    /// In-place forward DFT over all axes.
    pub fn forward(&self, values: &mut [Complex64], parallel: bool) {
        debug_assert_eq!(values.len(), self.grid.len());
        for axis in (0..self.grid.dim()).rev() {
            self.transform_axis(values, axis, &self.fwd[axis], parallel);
        }
    }

    /// In-place inverse DFT over all axes (includes the exact `1/N` scale).
    pub fn inverse(&self, values: &mut [Complex64], parallel: bool) {
        debug_assert_eq!(values.len(), self.grid.len());
        for axis in (0..self.grid.dim()).rev() {
            self.transform_axis(values, axis, &self.inv[axis], parallel);
        }
        let s = self.inv_scale;
        for v in values.iter_mut() {
            *v *= s;
        }
    }

    fn transform_axis(
        &self,
        values: &mut [Complex64],
        axis: usize,
        fft: &Arc<dyn Fft<f64>>,
        parallel: bool,
    ) {
        let d = self.grid.dim();
        let n = self.grid.dims()[axis];
        if axis == d - 1 {
            // contiguous lines
            if parallel {
                values.par_chunks_exact_mut(n).for_each(|line| {
                    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                    fft.process_with_scratch(line, &mut scratch);
                });
            } else {
                let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                for line in values.chunks_exact_mut(n) {
                    fft.process_with_scratch(line, &mut scratch);
                }
            }
            return;
        }
        // strided lines: gather, transform, scatter
        let strides = self.grid.strides();
        let stride = strides[axis];
        let total = self.grid.len();
        let lines = total / n;
        let line_starts: Vec<usize> = (0..lines)
            .map(|l| {
                let outer = l / stride;
                let inner = l % stride;
                outer * stride * n + inner
            })
            .collect();
        let ptr = SendPtr(values.as_mut_ptr());
        let work = |start: usize, buf: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>| {
            let p = ptr;
            buf.clear();
            for i in 0..n {
                buf.push(unsafe { *p.0.add(start + i * stride) });
            }
            fft.process_with_scratch(buf, scratch);
            for (i, &b) in buf.iter().enumerate() {
                unsafe {
                    *p.0.add(start + i * stride) = b;
                }
            }
        };
        if parallel {
            line_starts.par_iter().for_each_init(
                || {
                    (
                        Vec::with_capacity(n),
                        vec![Complex64::default(); fft.get_inplace_scratch_len()],
                    )
                },
                |(buf, scratch), &start| work(start, buf, scratch),
            );
        } else {
            let mut buf = Vec::with_capacity(n);
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            for &start in &line_starts {
                work(start, &mut buf, &mut scratch);
            }
        }
    }

    /// Multiply the spectrum by `e^{-i|k|²t}` in place (state in k-space).
    pub fn apply_free_multiplier(&self, hat: &mut [Complex64], t: f64) {
        for (v, &k2) in hat.iter_mut().zip(self.ksq.iter()) {
            let (s, c) = (-k2 * t).sin_cos();
            *v *= Complex64::new(c, s);
        }
    }

    /// Precomputed kick table `e^{-i|k|²t}`.
    pub fn free_multiplier_table(&self, t: f64) -> Vec<Complex64> {
        self.ksq
            .iter()
            .map(|&k2| {
                let (s, c) = (-k2 * t).sin_cos();
                Complex64::new(c, s)
            })
            .collect()
    }

    /// `‖ψ‖₂` computed from the k-space representation (Parseval:
    /// `h^d Σ|ψ|² = h^d/N · Σ|ψ̂|²`).
    pub fn l2_norm_hat(&self, hat: &[Complex64]) -> f64 {
        let s = crate::stats::pairwise_sum_by(hat, |v| v.norm_sqr());
        (s * self.grid.cell_volume() * self.inv_scale).sqrt()
    }
}

/// Raw-pointer wrapper for the disjoint strided line writes above.
#[derive(Clone, Copy)]
struct SendPtr(*mut Complex64);
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}

fn build_ksq(grid: &Grid) -> Vec<f64> {
    let d = grid.dim();
    let axis_ksq: Vec<Vec<f64>> = (0..d)
        .map(|a| grid.freqs(a).iter().map(|k| k * k).collect())
        .collect();
    let strides = grid.strides();
    let mut out = vec![0.0f64; grid.len()];
    for (flat, v) in out.iter_mut().enumerate() {
        let mut rem = flat;
        let mut s = 0.0;
        for a in 0..d {
            let i = rem / strides[a];
            rem %= strides[a];
            s += axis_ksq[a][i];
        }
        *v = s;
    }
    out
}

/// Exact free flow `e^{itΔ}` on the grid. Negative `t` is the inverse flow.
pub fn free_propagate(field: &ComplexField, t: f64) -> Result<ComplexField> {
    let spectral = Spectral::new(field.grid());
    free_propagate_with(&spectral, field, t, false)
}

pub fn free_propagate_with(
    spectral: &Spectral,
    field: &ComplexField,
    t: f64,
    parallel: bool,
) -> Result<ComplexField> {
    let mut values = field.values().to_vec();
    spectral.forward(&mut values, parallel);
    spectral.apply_free_multiplier(&mut values, t);
    spectral.inverse(&mut values, parallel);
    ComplexField::new(field.grid().clone(), values)
}

/// Analytic free evolution of the centered isotropic Gaussian
/// `f = e^{-a|x|²}`:
/// `u(t,x) = (1+4iat)^{-d/2} exp(-a|x|²/(1+4iat))`.
pub fn gaussian_free_evolution(grid: &Grid, a: f64, t: f64) -> ComplexField {
    let d = grid.dim() as f64;
    let denom = Complex64::new(1.0, 4.0 * a * t);
    let prefactor = denom.powf(-d / 2.0);
    let coef = -a / denom;
    ComplexField::from_fn(grid.clone(), move |x| {
        let r2: f64 = x.iter().map(|&xi| xi * xi).sum();
        prefactor * (coef * r2).exp()
    })
}

/// `L^q(ℝ^d)` norm of the free Gaussian evolution above:
/// `‖u(t)‖_q = (π/(qa))^{d/(2q)} (1+16a²t²)^{-d/4 + d/(2q)}`.
pub fn gaussian_free_lq_norm(d: usize, a: f64, t: f64, q: f64) -> f64 {
    let d = d as f64;
    let s = 1.0 + 16.0 * a * a * t * t;
    (std::f64::consts::PI / (q * a)).powf(d / (2.0 * q)) * s.powf(-d / 4.0 + d / (2.0 * q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let grid = Grid::new(2, 16, 6.0).unwrap();
        let f = ComplexField::from_fn(grid.clone(), |x| {
            Complex64::new((x[0] * 1.3).sin(), (x[1] - 0.2).cos())
        });
        let spectral = Spectral::new(&grid);
        let mut v = f.values().to_vec();
        spectral.forward(&mut v, false);
        spectral.inverse(&mut v, false);
        let g = ComplexField::new(grid, v).unwrap();
        let rel = g.l2_distance(&f) / f.l2_norm();
        assert!(rel < 1e-13, "round trip error {rel}");
    }

    #[test]
    fn propagator_at_zero_is_identity() {
        let grid = Grid::new(1, 64, 16.0).unwrap();
        let f = ComplexField::gaussian_isotropic(grid, 0.5);
        let g = free_propagate(&f, 0.0).unwrap();
        assert!(g.l2_distance(&f) / f.l2_norm() < 1e-13);
    }

    #[test]
    fn plane_wave_is_an_eigenfunction() {
        let grid = Grid::new(1, 32, 8.0).unwrap();
        let k = 3.0 * grid.freq_spacing(0);
        let f = ComplexField::from_fn(grid.clone(), |x| Complex64::from_polar(1.0, k * x[0]));
        let t = 0.37;
        let g = free_propagate(&f, t).unwrap();
        let mut expect = f.clone();
        expect.scale(Complex64::from_polar(1.0, -k * k * t));
        assert!(g.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn modulated_plane_wave_picks_up_shifted_phase() {
        let grid = Grid::new(1, 32, 8.0).unwrap();
        let dk = grid.freq_spacing(0);
        let k = 2.0 * dk;
        let xi = 3.0 * dk;
        let f = ComplexField::from_fn(grid.clone(), |x| Complex64::from_polar(1.0, k * x[0]));
        let t = 0.21;
        let g = free_propagate(&f.modulate(&[xi]).unwrap(), t).unwrap();
        let kp = k + xi;
        let expect = ComplexField::from_fn(grid, move |x| {
            Complex64::from_polar(1.0, kp * x[0] - kp * kp * t)
        });
        assert!(g.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn gaussian_matches_analytic_evolution() {
        // d = 1 on a wide well-resolved grid: pointwise error < 1e-8 while
        // the evolved state is still far from the boundary.
        let grid = Grid::new(1, 512, 64.0).unwrap();
        let a = 0.5;
        let f = ComplexField::gaussian_isotropic(grid.clone(), a);
        for t in [0.25, 1.0, 2.0, -1.5] {
            let num = free_propagate(&f, t).unwrap();
            let exact = gaussian_free_evolution(&grid, a, t);
            assert!(exact.boundary_mass_fraction(0.9).unwrap() < 1e-10);
            let err = num.max_abs_diff(&exact);
            assert!(err < 1e-8, "t={t}: pointwise error {err}");
        }
    }

    #[test]
    fn gaussian_matches_analytic_evolution_3d() {
        let grid = Grid::new(3, 64, 20.0).unwrap();
        let a = 0.5;
        let f = ComplexField::gaussian_isotropic(grid.clone(), a);
        let t = 0.5;
        let num = free_propagate(&f, t).unwrap();
        let exact = gaussian_free_evolution(&grid, a, t);
        let err = num.max_abs_diff(&exact);
        assert!(err < 1e-8, "pointwise error {err}");
    }

    #[test]
    fn unitarity_and_group_law() {
        let grid = Grid::new(2, 32, 12.0).unwrap();
        let f = ComplexField::from_fn(grid.clone(), |x| {
            Complex64::new((-0.3 * (x[0] * x[0] + 2.0 * x[1] * x[1])).exp(), 0.1 * x[0])
        });
        let n0 = f.l2_norm();
        let s = 0.8;
        let t = -2.3;
        let a = free_propagate(&free_propagate(&f, s).unwrap(), t).unwrap();
        let b = free_propagate(&f, s + t).unwrap();
        assert!((a.l2_norm() - n0).abs() / n0 < 1e-13);
        assert!(a.l2_distance(&b) / n0 < 1e-12);
    }

    #[test]
    fn parallel_transform_bits_match_serial() {
        let grid = Grid::new(3, 16, 5.0).unwrap();
        let f = ComplexField::from_fn(grid.clone(), |x| {
            Complex64::new(x[0] + 0.5 * x[1], (x[2] * 0.9).sin())
        });
        let spectral = Spectral::new(&grid);
        let mut a = f.values().to_vec();
        let mut b = f.values().to_vec();
        spectral.forward(&mut a, false);
        spectral.forward(&mut b, true);
        assert_eq!(a, b);
        spectral.inverse(&mut a, false);
        spectral.inverse(&mut b, true);
        assert_eq!(a, b);
    }
}
