//! Periodic-box discretization.
//!
//! A `Grid` is a uniform periodic lattice on the box `∏_j [-L_j/2, L_j/2)`
//! with `n_j` points per axis, points at `x_i = -L/2 + i·h` (`h = L/n`), and
//! the dual frequency lattice `k ∈ (2π/L)·ℤ` aliased to the Nyquist range
//! `m ∈ {-n/2, …, n/2-1}` in FFT storage order (`m = i` for `i < n/2`,
//! `m = i - n` otherwise).
//!
//! Axis sizes must be even, ≥ 8 and of the form `2^a·3^b`: powers of two
//! are the fast path with exactly representable `1/N` normalization, and the
//! `3·2^k` sizes cover the standard desk-scale configuration (`n = 48`).

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// Points per axis; each even, ≥ 8, of the form 2^a·3^b.
    dims: Vec<usize>,
    /// Box side length per axis.
    lengths: Vec<f64>,
}

fn fft_friendly(n: usize) -> bool {
    if n < 8 || !n.is_multiple_of(2) {
        return false;
    }
    let mut m = n;
    for p in [2usize, 3] {
        while m.is_multiple_of(p) {
            m /= p;
        }
    }
    m == 1
}

impl Grid {
    /// Uniform grid: `n` points and side `length` on each of `d` axes.
    pub fn new(d: usize, n: usize, length: f64) -> Result<Self> {
        Self::with_axes(&vec![n; d], &vec![length; d])
    }

    /// Grid with per-axis point counts and side lengths.
    pub fn with_axes(dims: &[usize], lengths: &[f64]) -> Result<Self> {
        let d = dims.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::Grid(format!(
                "dimension must be between 1 and {MAX_DIM}, got {d}"
            )));
        }
        if lengths.len() != d {
            return Err(Error::Grid(format!(
                "got {} lengths for {} axes",
                lengths.len(),
                d
            )));
        }
        for &n in dims {
            if !fft_friendly(n) {
                return Err(Error::Grid(format!(
                    "points per axis must be an even 2^a·3^b size ≥ 8 (power of two preferred), got {n}"
                )));
            }
        }
        for &l in lengths {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::Grid(format!("box length must be positive, got {l}")));
            }
        }
        Ok(Grid {
            dims: dims.to_vec(),
            lengths: lengths.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lattice spacing along one axis.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.dims[axis] as f64
    }

    /// Quadrature weight `∏ h_j` of a single cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Total box volume `∏ L_j`.
    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Coordinate of point `i` along `axis`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        -0.5 * self.lengths[axis] + i as f64 * self.spacing(axis)
    }

    /// Frequency of mode `i` along `axis`, FFT storage order.
    pub fn freq(&self, axis: usize, i: usize) -> f64 {
        let n = self.dims[axis];
        let m = if i < n / 2 {
            i as isize
        } else {
            i as isize - n as isize
        };
        2.0 * std::f64::consts::PI / self.lengths[axis] * m as f64
    }

    /// All frequencies along one axis in storage order.
    pub fn freqs(&self, axis: usize) -> Vec<f64> {
        (0..self.dims[axis]).map(|i| self.freq(axis, i)).collect()
    }

    /// Frequency-lattice spacing `2π/L` along one axis.
    pub fn freq_spacing(&self, axis: usize) -> f64 {
        2.0 * std::f64::consts::PI / self.lengths[axis]
    }

    /// Row-major strides (last axis contiguous).
    pub fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.dims[a + 1];
        }
        s
    }

    /// Decompose a flat row-major index into per-axis indices.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let d = self.dim();
        let mut out = vec![0usize; d];
        for a in (0..d).rev() {
            out[a] = idx % self.dims[a];
            idx /= self.dims[a];
        }
        out
    }

    /// Snap a frequency vector to the nearest lattice frequency.
    pub fn snap_frequency(&self, xi: &[f64]) -> Result<Vec<f64>> {
        if xi.len() != self.dim() {
            return Err(Error::Grid(format!(
                "frequency vector has {} components for a {}-d grid",
                xi.len(),
                self.dim()
            )));
        }
        Ok(xi
            .iter()
            .enumerate()
            .map(|(a, &x)| (x / self.freq_spacing(a)).round() * self.freq_spacing(a))
            .collect())
    }

    /// Whether `xi` lies on the frequency lattice (up to roundoff).
    pub fn on_frequency_lattice(&self, xi: &[f64]) -> bool {
        if xi.len() != self.dim() {
            return false;
        }
        xi.iter().enumerate().all(|(a, &x)| {
            let dk = self.freq_spacing(a);
            let m = x / dk;
            (m - m.round()).abs() <= 1e-9 * (1.0 + m.abs())
        })
    }

    /// Per-axis index range `[lo, hi)` of the centered core box of relative
    /// side `core_fraction`. Cells are counted by their left edge, matching
    /// the half-open box convention `[-L/2, L/2)`.
    pub fn core_range(&self, axis: usize, core_fraction: f64) -> (usize, usize) {
        let n = self.dims[axis] as f64;
        let lo = (n * (1.0 - core_fraction) / 2.0).round() as usize;
        let hi = (n * (1.0 + core_fraction) / 2.0).round() as usize;
        (lo, hi.min(self.dims[axis]))
    }
}
