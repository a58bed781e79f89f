//! Pathwise-unitary split-step integration.
//!
//! The Itô equation `i∂_tΨ + ΔΨ = δVΨḂ - (i/2)δ²V²Ψ` has the Stratonovich
//! form `dΨ = iΔΨ dt - iδVΨ ∘ dB`, whose noise flow over one step is exact
//! multiplication by `exp(-iδV(x)ΔB)` — a unimodular multiplier, so no drift
//! term is discretized and the `L²` norm is conserved pathwise to roundoff.
//!
//! One Strang step is `e^{iΔ dt/2} · e^{-iδVΔB} · e^{iΔ dt/2}` with the full
//! increment applied at the step midpoint. [`evolve`] keeps the state in
//! k-space between steps (two transforms per step: half-kick multiplier,
//! inverse transform, noise multiplier, forward transform, half-kick
//! multiplier, in that order — the evaluation order is part of the
//! bit-reproducibility contract). The standalone [`strang_step`] round-trips
//! through x-space and agrees with one `evolve` step to roundoff.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::noise::BrownianPath;
use crate::potential::PotentialSpec;
use crate::spectral::{free_propagate_with, Spectral};

/// A recorded path of the solution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<ComplexField>,
    pub master_seed: u64,
    pub path_index: u64,
    pub dt: f64,
}

impl Trajectory {
    /// Largest relative deviation of recorded `L²` norms from the first.
    pub fn mass_drift(&self) -> f64 {
        let n0 = match self.fields.first() {
            Some(f) => f.l2_norm(),
            None => return 0.0,
        };
        self.fields
            .iter()
            .map(|f| (f.l2_norm() - n0).abs() / n0)
            .fold(0.0, f64::max)
    }
}

/// Exact noise flow over one step: `Ψ ← exp(-iδV(x)ΔB)·Ψ`.
/// Pointwise modulus is preserved, hence every `L^p` norm.
pub fn noise_phase_step(
    field: &ComplexField,
    v_field: &ComplexField,
    delta: f64,
    db: f64,
) -> Result<ComplexField> {
    if field.grid() != v_field.grid() {
        return Err(Error::Grid("field and potential grids differ".into()));
    }
    if !db.is_finite() {
        return Err(Error::Noise(format!("non-finite increment {db}")));
    }
    let mut out = field.clone();
    apply_noise_phase(out.values_mut(), v_field.values(), delta * db);
    Ok(out)
}

fn apply_noise_phase(values: &mut [Complex64], v: &[Complex64], scale: f64) {
    for (psi, vv) in values.iter_mut().zip(v.iter()) {
        let (s, c) = (scale * vv.re).sin_cos();
        *psi *= Complex64::new(c, -s);
    }
}

/// One Strang step on an x-space field.
pub fn strang_step(
    field: &ComplexField,
    dt: f64,
    db: f64,
    v_field: &ComplexField,
    delta: f64,
) -> Result<ComplexField> {
    if !(dt > 0.0) {
        return Err(Error::Noise(format!("dt must be positive, got {dt}")));
    }
    let spectral = Spectral::new(field.grid());
    let half = free_propagate_with(&spectral, field, dt / 2.0, false)?;
    let kicked = noise_phase_step(&half, v_field, delta, db)?;
    free_propagate_with(&spectral, &kicked, dt / 2.0, false)
}

/// Reusable machinery for one grid/potential/mesh combination.
pub struct Evolver {
    spectral: Spectral,
    grid: Grid,
    v_values: Vec<Complex64>,
    delta: f64,
    dt: f64,
    halfkick: Vec<Complex64>,
    parallel: bool,
}

impl Evolver {
    pub fn new(grid: &Grid, potential: &PotentialSpec, dt: f64, parallel: bool) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Noise(format!("dt must be positive, got {dt}")));
        }
        let spectral = Spectral::new(grid);
        let v_values = potential.sample(grid)?.into_values();
        let halfkick = spectral.free_multiplier_table(dt / 2.0);
        Ok(Evolver {
            spectral,
            grid: grid.clone(),
            v_values,
            delta: potential.delta,
            dt,
            halfkick,
            parallel,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Map record times onto mesh step indices; rejects off-mesh times.
    pub fn record_steps(&self, record_times: &[f64], path: &BrownianPath) -> Result<Vec<usize>> {
        let mut steps = Vec::with_capacity(record_times.len());
        for &t in record_times {
            if t < 0.0 {
                return Err(Error::Noise(format!("record time {t} is negative")));
            }
            let k_f = t / self.dt;
            let k = k_f.round();
            if (k_f - k).abs() > 1e-9 * k_f.max(1.0) {
                return Err(Error::Noise(format!(
                    "record time {t} is not on the dt = {} mesh",
                    self.dt
                )));
            }
            let k = k as usize;
            if k > path.len() {
                return Err(Error::Noise(format!(
                    "record time {t} beyond the path horizon {}",
                    path.horizon
                )));
            }
            steps.push(k);
        }
        if steps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Noise("record times must be strictly increasing".into()));
        }
        Ok(steps)
    }

    /// Integrate along `path`, invoking `on_record(step, t, Ψ)` at each
    /// requested mesh step (step 0 passes the initial data unchanged).
    pub fn run(
        &self,
        f: &ComplexField,
        path: &BrownianPath,
        record_steps: &[usize],
        mut on_record: impl FnMut(usize, f64, &ComplexField) -> Result<()>,
    ) -> Result<()> {
        if path.dt != self.dt {
            return Err(Error::Noise(format!(
                "path mesh {} does not match evolver mesh {}",
                path.dt, self.dt
            )));
        }
        if f.grid() != &self.grid {
            return Err(Error::Grid("initial data grid mismatch".into()));
        }
        if !f.is_finite() {
            return Err(Error::NonFinite { step: 0, t: 0.0 });
        }
        let mut next_record = 0usize;
        if record_steps.first() == Some(&0) {
            on_record(0, 0.0, f)?;
            next_record = 1;
        }
        let last_step = match record_steps.last() {
            Some(&k) => k,
            None => return Ok(()),
        };

        // k-space state
        let mut state = f.values().to_vec();
        self.spectral.forward(&mut state, self.parallel);
        let mut xbuf: Vec<Complex64> = Vec::new();

        for step in 0..last_step {
            let db = path.increments[step];
            if !db.is_finite() {
                return Err(Error::NonFinite {
                    step,
                    t: step as f64 * self.dt,
                });
            }
            mul_assign(&mut state, &self.halfkick);
            self.spectral.inverse(&mut state, self.parallel);
            apply_noise_phase(&mut state, &self.v_values, self.delta * db);
            self.spectral.forward(&mut state, self.parallel);
            mul_assign(&mut state, &self.halfkick);

            // a single NaN contaminates every mode after one transform, so a
            // one-element probe per step is a complete detector
            if !state[0].re.is_finite() || !state[0].im.is_finite() {
                return Err(Error::NonFinite {
                    step,
                    t: (step + 1) as f64 * self.dt,
                });
            }

            let completed = step + 1;
            if next_record < record_steps.len() && record_steps[next_record] == completed {
                xbuf.clear();
                xbuf.extend_from_slice(&state);
                self.spectral.inverse(&mut xbuf, self.parallel);
                let t = completed as f64 * self.dt;
                let field = ComplexField::new(self.grid.clone(), xbuf.clone())?;
                if !field.is_finite() {
                    return Err(Error::NonFinite { step, t });
                }
                on_record(completed, t, &field)?;
                next_record += 1;
            }
        }
        Ok(())
    }
}

fn mul_assign(values: &mut [Complex64], table: &[Complex64]) {
    for (v, m) in values.iter_mut().zip(table.iter()) {
        *v *= m;
    }
}

/// Integrate and record the solution at the requested times.
pub fn evolve(
    f: &ComplexField,
    potential: &PotentialSpec,
    path: &BrownianPath,
    record_times: &[f64],
    parallel: bool,
) -> Result<Trajectory> {
    let evolver = Evolver::new(f.grid(), potential, path.dt, parallel)?;
    let steps = evolver.record_steps(record_times, path)?;
    let mut times = Vec::with_capacity(steps.len());
    let mut fields = Vec::with_capacity(steps.len());
    evolver.run(f, path, &steps, |_, t, field| {
        times.push(t);
        fields.push(field.clone());
        Ok(())
    })?;
    Ok(Trajectory {
        times,
        fields,
        master_seed: path.master_seed,
        path_index: path.path_index,
        dt: path.dt,
    })
}

/// Self-convergence error `‖Ψ_dt(T) - Ψ_{dt/2}(T)‖₂` with the fine solution
/// driven by the bridge-refined copy of the same path.
pub fn strong_error(
    f: &ComplexField,
    potential: &PotentialSpec,
    path: &BrownianPath,
    t_final: f64,
) -> Result<f64> {
    let coarse = evolve(f, potential, path, &[t_final], false)?;
    let fine_path = path.refine();
    let fine = evolve(f, potential, &fine_path, &[t_final], false)?;
    Ok(coarse.fields[0].l2_distance(&fine.fields[0]))
}
