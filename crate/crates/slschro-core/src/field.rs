//! Complex-valued fields sampled on a [`Grid`].
//!
//! Spatial norms are Riemann sums with the cell volume as quadrature weight,
//! `‖f‖_p = (Σ |f(x)|^p h^d)^{1/p}`, so they approximate the continuum
//! `L^p(ℝ^d)` norms for well-resolved, well-contained fields. `p = ∞` is the
//! grid maximum.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "field has {} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        ComplexField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Build a field by evaluating `f` at every grid point.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let n = grid.len();
        let d = grid.dim();
        let mut values = Vec::with_capacity(n);
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0f64; d];
        for _ in 0..n {
            for a in 0..d {
                x[a] = grid.coord(a, idx[a]);
            }
            values.push(f(&x));
            // row-major increment, last axis fastest
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < grid.dims()[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        ComplexField { grid, values }
    }

    /// Centered complex Gaussian `exp(-Σ_j a_j x_j²)` with per-axis widths,
    /// optionally translated to `center`.
    pub fn gaussian(grid: Grid, a: &[f64], center: &[f64]) -> Result<Self> {
        let d = grid.dim();
        if a.len() != d || center.len() != d {
            return Err(Error::Grid(
                "gaussian widths/center must match grid dimension".into(),
            ));
        }
        let a = a.to_vec();
        let center = center.to_vec();
        Ok(Self::from_fn(grid, move |x| {
            let s: f64 = x
                .iter()
                .zip(a.iter())
                .zip(center.iter())
                .map(|((&xi, &ai), &ci)| ai * (xi - ci) * (xi - ci))
                .sum();
            Complex64::new((-s).exp(), 0.0)
        }))
    }

    /// Isotropic Gaussian `exp(-a |x|²)`.
    pub fn gaussian_isotropic(grid: Grid, a: f64) -> Self {
        let d = grid.dim();
        Self::gaussian(grid.clone(), &vec![a; d], &vec![0.0; d]).expect("matching dims")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Riemann-sum `L^p` norm; `p = ∞` returns the grid maximum of `|f|`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_infinite() && p > 0.0 {
            return Ok(self
                .values
                .iter()
                .map(|v| v.norm())
                .fold(0.0f64, f64::max));
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::Grid(format!("L^p norm requires p ∈ [1, ∞], got {p}")));
        }
        let hv = self.grid.cell_volume();
        if p == 2.0 {
            // dominant case; |v|² avoids the sqrt in norm()
            let s: f64 = crate::stats::pairwise_sum_by(&self.values, |v| v.norm_sqr());
            return Ok((s * hv).sqrt());
        }
        let s: f64 = crate::stats::pairwise_sum_by(&self.values, |v| v.norm().powf(p));
        Ok((s * hv).powf(1.0 / p))
    }

    /// `‖f‖₂` without the error path; mass bookkeeping uses this everywhere.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = crate::stats::pairwise_sum_by(&self.values, |v| v.norm_sqr());
        (s * self.grid.cell_volume()).sqrt()
    }

    /// Pointwise multiplication by the plane wave `e^{i⟨ξ,x⟩}`.
    /// `ξ` must lie on the grid's frequency lattice; off-lattice modulation
    /// breaks periodicity and is rejected (snap first with
    /// [`Grid::snap_frequency`]).
    pub fn modulate(&self, xi: &[f64]) -> Result<ComplexField> {
        if !self.grid.on_frequency_lattice(xi) {
            return Err(Error::Grid(format!(
                "modulation frequency {xi:?} is off the grid frequency lattice"
            )));
        }
        let grid = self.grid.clone();
        let d = grid.dim();
        let dims = grid.dims().to_vec();
        let mut out = self.values.clone();
        // separable phase: precompute per-axis factors
        let axis_phases: Vec<Vec<Complex64>> = (0..d)
            .map(|a| {
                (0..dims[a])
                    .map(|i| Complex64::from_polar(1.0, xi[a] * grid.coord(a, i)))
                    .collect()
            })
            .collect();
        let strides = grid.strides();
        for (flat, v) in out.iter_mut().enumerate() {
            let mut phase = Complex64::new(1.0, 0.0);
            let mut rem = flat;
            for a in 0..d {
                let i = rem / strides[a];
                rem %= strides[a];
                phase *= axis_phases[a][i];
            }
            *v *= phase;
        }
        ComplexField::new(grid, out)
    }

    /// Fraction of `L²` mass outside the centered core box of relative side
    /// `core_fraction`. Zero field maps to 0.
    pub fn boundary_mass_fraction(&self, core_fraction: f64) -> Result<f64> {
        if !(core_fraction > 0.0 && core_fraction < 1.0) {
            return Err(Error::Grid(format!(
                "core_fraction must be in (0,1), got {core_fraction}"
            )));
        }
        let d = self.grid.dim();
        let ranges: Vec<(usize, usize)> = (0..d)
            .map(|a| self.grid.core_range(a, core_fraction))
            .collect();
        let strides = self.grid.strides();
        let total: f64 = crate::stats::pairwise_sum_by(&self.values, |v| v.norm_sqr());
        if total == 0.0 {
            return Ok(0.0);
        }
        let mut terms: Vec<f64> = Vec::new();
        for (flat, v) in self.values.iter().enumerate() {
            let mut rem = flat;
            let mut inside = true;
            for a in 0..d {
                let i = rem / strides[a];
                rem %= strides[a];
                if i < ranges[a].0 || i >= ranges[a].1 {
                    inside = false;
                    break;
                }
            }
            if inside {
                terms.push(v.norm_sqr());
            }
        }
        let core = crate::stats::pairwise_sum(&terms);
        Ok(((total - core) / total).clamp(0.0, 1.0))
    }

    /// Max pointwise modulus of the difference.
    pub fn max_abs_diff(&self, other: &ComplexField) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `‖self - other‖₂`.
    pub fn l2_distance(&self, other: &ComplexField) -> f64 {
        let s: f64 = crate::stats::pairwise_sum_by_pair(&self.values, &other.values, |a, b| {
            (a - b).norm_sqr()
        });
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn scale(&mut self, c: Complex64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// `self += c · other`.
    pub fn axpy(&mut self, c: Complex64, other: &ComplexField) {
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += c * b;
        }
    }
}
