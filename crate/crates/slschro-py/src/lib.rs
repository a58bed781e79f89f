//! Python bindings: grids, fields, potentials, Brownian paths, the
//! split-step integrator and the main verification operations.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use slschro_core::config::PerAxis;
use slschro_core::duhamel;
use slschro_core::ensemble;
use slschro_core::error::Error;
use slschro_core::field::ComplexField;
use slschro_core::grid;
use slschro_core::integrator;
use slschro_core::noise;
use slschro_core::potential::PotentialSpec;
use slschro_core::snapshot;
use slschro_core::spectral;

/// `(t, q, estimate, boundary_mass, valid)` row of the free decay table.
type DispersiveRow = (f64, f64, f64, f64, bool);

fn err(e: Error) -> PyErr {
    PyValueError::new_err(format!("{e}"))
}

/// Periodic simulation grid.
#[pyclass(name = "Grid", from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: grid::Grid,
}

#[pymethods]
impl PyGrid {
    /// Uniform grid: `d` axes with `n` points and side `length` each.
    #[new]
    fn new(d: usize, n: usize, length: f64) -> PyResult<Self> {
        Ok(PyGrid {
            inner: grid::Grid::new(d, n, length).map_err(err)?,
        })
    }

    /// Per-axis point counts and box lengths.
    #[staticmethod]
    fn with_axes(dims: Vec<usize>, lengths: Vec<f64>) -> PyResult<Self> {
        Ok(PyGrid {
            inner: grid::Grid::with_axes(&dims, &lengths).map_err(err)?,
        })
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    #[getter]
    fn lengths(&self) -> Vec<f64> {
        self.inner.lengths().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn cell_volume(&self) -> f64 {
        self.inner.cell_volume()
    }

    fn freq_spacing(&self, axis: usize) -> f64 {
        self.inner.freq_spacing(axis)
    }

    fn snap_frequency(&self, xi: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.snap_frequency(&xi).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(dims={:?}, lengths={:?})",
            self.inner.dims(),
            self.inner.lengths()
        )
    }
}

/// Complex field sampled on a grid.
#[pyclass(name = "Field", from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: ComplexField,
}

#[pymethods]
impl PyField {
    /// Gaussian `exp(-Σ a_j x_j²)` centered at `center` (defaults to 0).
    #[staticmethod]
    #[pyo3(signature = (grid, a, center = None))]
    fn gaussian(grid: &PyGrid, a: Vec<f64>, center: Option<Vec<f64>>) -> PyResult<Self> {
        let d = grid.inner.dim();
        let center = center.unwrap_or_else(|| vec![0.0; d]);
        Ok(PyField {
            inner: ComplexField::gaussian(grid.inner.clone(), &a, &center).map_err(err)?,
        })
    }

    #[staticmethod]
    fn zeros(grid: &PyGrid) -> Self {
        PyField {
            inner: ComplexField::zeros(grid.inner.clone()),
        }
    }

    #[staticmethod]
    fn from_values(grid: &PyGrid, values: Vec<Complex64>) -> PyResult<Self> {
        Ok(PyField {
            inner: ComplexField::new(grid.inner.clone(), values).map_err(err)?,
        })
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid {
            inner: self.inner.grid().clone(),
        }
    }

    fn values(&self) -> Vec<Complex64> {
        self.inner.values().to_vec()
    }

    fn lp_norm(&self, p: f64) -> PyResult<f64> {
        self.inner.lp_norm(p).map_err(err)
    }

    fn l2_norm(&self) -> f64 {
        self.inner.l2_norm()
    }

    fn boundary_mass_fraction(&self, core_fraction: f64) -> PyResult<f64> {
        self.inner.boundary_mass_fraction(core_fraction).map_err(err)
    }

    /// Multiply by the plane wave `e^{i⟨ξ,x⟩}` (ξ must be on the lattice).
    fn modulate(&self, xi: Vec<f64>) -> PyResult<Self> {
        Ok(PyField {
            inner: self.inner.modulate(&xi).map_err(err)?,
        })
    }

    fn l2_distance(&self, other: &PyField) -> f64 {
        self.inner.l2_distance(&other.inner)
    }

    fn max_abs_diff(&self, other: &PyField) -> f64 {
        self.inner.max_abs_diff(&other.inner)
    }

    /// Serialize to the SLS1 snapshot format.
    fn to_bytes(&self) -> PyResult<Vec<u8>> {
        let mut buf = Vec::new();
        snapshot::write_field(&self.inner, &mut buf).map_err(err)?;
        Ok(buf)
    }

    #[staticmethod]
    fn from_bytes(data: Vec<u8>) -> PyResult<Self> {
        Ok(PyField {
            inner: snapshot::read_field(data.as_slice()).map_err(err)?,
        })
    }
}

/// Real potential `V` with coupling δ.
#[pyclass(name = "Potential", from_py_object)]
#[derive(Clone)]
struct PyPotential {
    inner: PotentialSpec,
}

#[pymethods]
impl PyPotential {
    /// Gaussian bump `A·exp(-Σ x_j²/(2σ_j²))`.
    #[staticmethod]
    #[pyo3(signature = (amplitude, sigma, delta, center = None))]
    fn gaussian(
        amplitude: f64,
        sigma: Vec<f64>,
        delta: f64,
        center: Option<Vec<f64>>,
    ) -> Self {
        let center = center.unwrap_or_else(|| vec![0.0; sigma.len()]);
        PyPotential {
            inner: PotentialSpec::gaussian(amplitude, sigma, center, delta),
        }
    }

    #[staticmethod]
    fn constant(amplitude: f64, delta: f64) -> Self {
        PyPotential {
            inner: PotentialSpec::constant(amplitude, delta),
        }
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    #[setter]
    fn set_delta(&mut self, delta: f64) {
        self.inner.delta = delta;
    }

    fn sample(&self, grid: &PyGrid) -> PyResult<PyField> {
        Ok(PyField {
            inner: self.inner.sample(&grid.inner).map_err(err)?,
        })
    }

    fn l1_norm(&self, d: usize) -> PyResult<f64> {
        self.inner.l1_norm(d).map_err(err)
    }

    fn lr_norm(&self, d: usize, r: f64) -> PyResult<f64> {
        self.inner.lr_norm(d, r).map_err(err)
    }

    fn fourier_l1_norm(&self, d: usize) -> PyResult<f64> {
        self.inner.fourier_l1_norm(d).map_err(err)
    }

    /// The smallness scalar δ(‖V‖₁ + ‖V̂‖₁).
    fn smallness(&self, d: usize) -> PyResult<f64> {
        self.inner.smallness(d).map_err(err)
    }
}

/// One seeded Brownian path on a uniform mesh.
#[pyclass(name = "BrownianPath", from_py_object)]
#[derive(Clone)]
struct PyPath {
    inner: noise::BrownianPath,
}

#[pymethods]
impl PyPath {
    #[getter]
    fn increments(&self) -> Vec<f64> {
        self.inner.increments.clone()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon
    }

    fn terminal_value(&self) -> f64 {
        self.inner.terminal_value()
    }

    fn value_at_step(&self, k: usize) -> f64 {
        self.inner.value_at_step(k)
    }

    /// Brownian-bridge refinement to dt/2, preserving coarse increments.
    fn refine(&self) -> Self {
        PyPath {
            inner: self.inner.refine(),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Sample the Brownian path for `(master_seed, path_index)`; reproducible
/// bit-for-bit.
#[pyfunction]
fn sample_path(master_seed: u64, path_index: u64, dt: f64, horizon: f64) -> PyResult<PyPath> {
    Ok(PyPath {
        inner: noise::sample_path(master_seed, path_index, dt, horizon).map_err(err)?,
    })
}

/// Exact free flow `e^{itΔ}` on the grid (negative t allowed).
#[pyfunction]
fn free_propagate(field: &PyField, t: f64) -> PyResult<PyField> {
    Ok(PyField {
        inner: spectral::free_propagate(&field.inner, t).map_err(err)?,
    })
}

/// Analytic free evolution of `exp(-a|x|²)` (oracle).
#[pyfunction]
fn gaussian_free_evolution(grid: &PyGrid, a: f64, t: f64) -> PyField {
    PyField {
        inner: spectral::gaussian_free_evolution(&grid.inner, a, t),
    }
}

/// `L^q(ℝ^d)` norm of the analytic free Gaussian evolution.
#[pyfunction]
fn gaussian_free_lq_norm(d: usize, a: f64, t: f64, q: f64) -> f64 {
    spectral::gaussian_free_lq_norm(d, a, t, q)
}

/// One exact noise-flow step `exp(-iδV(x)ΔB)·ψ`.
#[pyfunction]
fn noise_phase_step(field: &PyField, v_field: &PyField, delta: f64, db: f64) -> PyResult<PyField> {
    Ok(PyField {
        inner: integrator::noise_phase_step(&field.inner, &v_field.inner, delta, db)
            .map_err(err)?,
    })
}

/// One Strang step (half free flow, noise phase, half free flow).
#[pyfunction]
fn strang_step(
    field: &PyField,
    dt: f64,
    db: f64,
    v_field: &PyField,
    delta: f64,
) -> PyResult<PyField> {
    Ok(PyField {
        inner: integrator::strang_step(&field.inner, dt, db, &v_field.inner, delta)
            .map_err(err)?,
    })
}

/// Integrate along the path, returning `[(t, Field), …]` at the requested
/// record times (which must lie on the path mesh).
#[pyfunction]
#[pyo3(signature = (field, potential, path, record_times, parallel = false))]
fn evolve(
    field: &PyField,
    potential: &PyPotential,
    path: &PyPath,
    record_times: Vec<f64>,
    parallel: bool,
) -> PyResult<Vec<(f64, PyField)>> {
    let traj = integrator::evolve(
        &field.inner,
        &potential.inner,
        &path.inner,
        &record_times,
        parallel,
    )
    .map_err(err)?;
    Ok(traj
        .times
        .into_iter()
        .zip(traj.fields.into_iter().map(|f| PyField { inner: f }))
        .collect())
}

/// Self-convergence error `‖Ψ_dt(T) - Ψ_{dt/2}(T)‖₂` on a refined path.
#[pyfunction]
fn strong_error(
    field: &PyField,
    potential: &PyPotential,
    path: &PyPath,
    t_final: f64,
) -> PyResult<f64> {
    integrator::strong_error(&field.inner, &potential.inner, &path.inner, t_final).map_err(err)
}

/// `(E x^ρ)^{1/ρ}` with its delta-method standard error (None for a single
/// sample).
#[pyfunction]
fn rho_moment(samples: Vec<f64>, rho: f64) -> PyResult<(f64, Option<f64>)> {
    ensemble::rho_moment(&samples, rho).map_err(err)
}

/// Free-flow pullback `e^{-itΔ}ψ`.
#[pyfunction]
fn pullback(field: &PyField, t: f64) -> PyResult<PyField> {
    Ok(PyField {
        inner: slschro_core::scattering::pullback(&field.inner, t).map_err(err)?,
    })
}

/// Exact d-dimensional free decay table for Gaussian data, computed by
/// per-axis factorization. Returns rows `(t, q, estimate, boundary, valid)`.
#[pyfunction]
#[pyo3(signature = (d, a, qs, times, axis_n = 8192, axis_length = 2048.0))]
fn free_dispersive_norms(
    d: usize,
    a: f64,
    qs: Vec<f64>,
    times: Vec<f64>,
    axis_n: usize,
    axis_length: f64,
) -> PyResult<Vec<DispersiveRow>> {
    let params = slschro_core::dispersive::FreeDispersiveParams {
        d,
        a,
        qs,
        times,
        axis_n,
        axis_length,
        core_fraction: 0.5,
        validity_threshold: 1e-8,
    };
    let stats = slschro_core::dispersive::free_dispersive(&params).map_err(err)?;
    Ok(stats
        .rows
        .iter()
        .map(|r| (r.t, r.q, r.estimate, r.boundary_mass, r.valid))
        .collect())
}

/// Monte Carlo Itô isometry check at ρ = 2. Returns
/// `(mc_second_moment, quadrature, relative_error, relative_stderr)`.
#[pyfunction]
#[pyo3(signature = (grid, potential, field, t, dt, n_paths, master_seed, workers = None))]
#[allow(clippy::too_many_arguments)]
fn ito_isometry_check(
    grid: &PyGrid,
    potential: &PyPotential,
    field: &PyField,
    t: f64,
    dt: f64,
    n_paths: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> PyResult<(f64, f64, f64, f64)> {
    let check = duhamel::ito_isometry_check(
        &grid.inner,
        &potential.inner,
        &field.inner,
        t,
        dt,
        n_paths,
        master_seed,
        workers,
    )
    .map_err(err)?;
    Ok((
        check.mc_second_moment,
        check.quadrature,
        check.relative_error,
        check.relative_stderr,
    ))
}

/// Duhamel first-line terms and remainder on one path. Returns a dict-like
/// tuple `(free, stochastic, drift, remainder, psi)`.
#[pyfunction]
fn duhamel_terms(
    field: &PyField,
    potential: &PyPotential,
    path: &PyPath,
    t: f64,
) -> PyResult<(PyField, PyField, PyField, PyField, PyField)> {
    let terms =
        duhamel::duhamel_terms(&field.inner, &potential.inner, &path.inner, t).map_err(err)?;
    Ok((
        PyField { inner: terms.free },
        PyField {
            inner: terms.stochastic,
        },
        PyField { inner: terms.drift },
        PyField {
            inner: terms.remainder,
        },
        PyField { inner: terms.psi },
    ))
}

/// Gaussian initial data helper mirroring the config schema.
#[pyfunction]
#[pyo3(signature = (grid, a, modulation = None))]
fn initial_data(grid: &PyGrid, a: Vec<f64>, modulation: Option<Vec<f64>>) -> PyResult<PyField> {
    let init = slschro_core::config::InitialData {
        a: PerAxis::Axes(a),
        modulation,
    };
    let (field, _) = init.build(&grid.inner).map_err(err)?;
    Ok(PyField { inner: field })
}

#[pymodule]
fn slschro(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyPath>()?;
    m.add_function(wrap_pyfunction!(sample_path, m)?)?;
    m.add_function(wrap_pyfunction!(free_propagate, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_free_evolution, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_free_lq_norm, m)?)?;
    m.add_function(wrap_pyfunction!(noise_phase_step, m)?)?;
    m.add_function(wrap_pyfunction!(strang_step, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(strong_error, m)?)?;
    m.add_function(wrap_pyfunction!(rho_moment, m)?)?;
    m.add_function(wrap_pyfunction!(pullback, m)?)?;
    m.add_function(wrap_pyfunction!(free_dispersive_norms, m)?)?;
    m.add_function(wrap_pyfunction!(ito_isometry_check, m)?)?;
    m.add_function(wrap_pyfunction!(duhamel_terms, m)?)?;
    m.add_function(wrap_pyfunction!(initial_data, m)?)?;
    Ok(())
}
