//! Experiment configuration: a JSON document with sections `grid`,
//! `potential`, `noise`, `ensemble` and `experiment`. Unknown keys are
//! rejected everywhere.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::potential::PotentialSpec;

/// Scalar-or-per-axis parameter.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PerAxis<T> {
    Uniform(T),
    Axes(Vec<T>),
}

impl<T: Copy> PerAxis<T> {
    pub fn resolve(&self, d: usize) -> Result<Vec<T>> {
        match self {
            PerAxis::Uniform(v) => Ok(vec![*v; d]),
            PerAxis::Axes(vs) => {
                if vs.len() != d {
                    return Err(Error::Config(format!(
                        "expected {d} per-axis entries, got {}",
                        vs.len()
                    )));
                }
                Ok(vs.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    pub n: PerAxis<usize>,
    pub box_length: PerAxis<f64>,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::with_axes(&self.n.resolve(self.d)?, &self.box_length.resolve(self.d)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub master_seed: u64,
    pub n_paths: usize,
    pub dt: f64,
    /// Path horizon; `"T"` is accepted as an alias.
    #[serde(alias = "T")]
    pub t_final: f64,
}

fn default_qs() -> Vec<f64> {
    vec![2.0, 4.0, 8.0]
}

fn default_rhos() -> Vec<f64> {
    vec![2.0, 4.0]
}

fn default_core_fraction() -> f64 {
    0.5
}

fn default_validity_threshold() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "default_qs")]
    pub q: Vec<f64>,
    #[serde(default = "default_rhos")]
    pub rho: Vec<f64>,
    #[serde(default)]
    pub record_times: Vec<f64>,
    /// Decay-fit window `[t_min, t_max]`; defaults to `[2, t_final]`.
    #[serde(default)]
    pub fit_window: Option<(f64, f64)>,
    #[serde(default = "default_core_fraction")]
    pub core_fraction: f64,
    #[serde(default = "default_validity_threshold")]
    pub validity_threshold: f64,
}

/// Gaussian initial data `exp(-Σ a_j x_j²)`, optionally modulated by a
/// plane wave (snapped to the frequency lattice).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub a: PerAxis<f64>,
    #[serde(default)]
    pub modulation: Option<Vec<f64>>,
}

impl InitialData {
    /// Build the field; returns the snapped modulation actually applied.
    pub fn build(&self, grid: &Grid) -> Result<(ComplexField, Option<Vec<f64>>)> {
        let d = grid.dim();
        let a = self.a.resolve(d)?;
        if a.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Config("gaussian exponents must be positive".into()));
        }
        let field = ComplexField::gaussian(grid.clone(), &a, &vec![0.0; d])?;
        match &self.modulation {
            None => Ok((field, None)),
            Some(xi) => {
                let snapped = grid.snap_frequency(xi)?;
                let modulated = field.modulate(&snapped)?;
                Ok((modulated, Some(snapped)))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// Exact free-flow decay oracle via per-axis factorization.
    FreeDispersive {
        a: f64,
        #[serde(default = "default_free_qs")]
        q: Vec<f64>,
        times: Vec<f64>,
        #[serde(default = "default_axis_n")]
        axis_n: usize,
        #[serde(default = "default_axis_length")]
        axis_length: f64,
    },
    /// Single-path integration with SLS1 snapshots at the record times.
    Simulate { initial: InitialData },
    /// Ensemble + decay fit; optionally compares the boot-strap quantity
    /// `sup_t t^α · estimate` against its δ = 0 counterpart.
    Decay {
        initial: InitialData,
        #[serde(default = "default_true")]
        bootstrap_check: bool,
        #[serde(default = "default_bootstrap_factor")]
        bootstrap_factor: f64,
    },
    /// Cauchy table of pullback differences over time pairs.
    Scatter {
        initial: InitialData,
        pairs: Vec<(f64, f64)>,
    },
    /// Duhamel diagnostics; each subsection is optional.
    Duhamel {
        initial: InitialData,
        #[serde(default)]
        expansion: Option<ExpansionConfig>,
        #[serde(default)]
        isometry: Option<IsometryConfig>,
        #[serde(default)]
        probes: Option<ProbesConfig>,
    },
    /// Built-in property suite.
    Selftest {},
}

fn default_free_qs() -> Vec<f64> {
    vec![4.0, 8.0]
}

fn default_axis_n() -> usize {
    8192
}

fn default_axis_length() -> f64 {
    2048.0
}

fn default_true() -> bool {
    true
}

fn default_bootstrap_factor() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionConfig {
    pub deltas: Vec<f64>,
    pub t: f64,
    pub n_paths: usize,
    /// Truncation order of the expansion (1 or 2); the remainder scaling
    /// target is `order + 1`.
    #[serde(default = "default_expansion_order")]
    pub order: usize,
}

fn default_expansion_order() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsometryConfig {
    pub t: f64,
    pub n_paths: usize,
    /// Itô-sum mesh; defaults to `noise.dt`. The discrete isometry is exact
    /// at any mesh, so a coarser one just cuts the kernel count.
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbesConfig {
    /// Chain probe tuples; each entry is a list of 2 or 3 nonnegative times.
    pub chain_tuples: Vec<Vec<f64>>,
    pub q: f64,
    /// Modulated-probe `(s, t)` pairs.
    #[serde(default)]
    pub modulated_pairs: Vec<(f64, f64)>,
    /// Modulation frequencies to scan (snapped to the lattice).
    #[serde(default)]
    pub xi_set: Vec<Vec<f64>>,
    #[serde(default = "default_probe_paths")]
    pub n_paths: usize,
    /// Frozen calibration baseline per probe kind; a probe passes while its
    /// ratio stays within `baseline_factor` times the baseline.
    #[serde(default)]
    pub baselines: Option<ProbeBaselines>,
    #[serde(default = "default_baseline_factor")]
    pub baseline_factor: f64,
}

fn default_baseline_factor() -> f64 {
    1.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBaselines {
    pub chain_exchange: f64,
    pub chain_strong: f64,
    pub modulated: f64,
}

fn default_probe_paths() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: GridConfig,
    pub potential: PotentialSpec,
    pub noise: NoiseConfig,
    pub ensemble: EnsembleConfig,
    pub experiment: Experiment,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let cfg: Config =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build()?;
        self.potential.validate(grid.dim())?;
        if !(self.noise.dt > 0.0) {
            return Err(Error::Config("noise.dt must be positive".into()));
        }
        if self.noise.t_final < 0.0 {
            return Err(Error::Config("noise.t_final must be ≥ 0".into()));
        }
        if !(self.ensemble.core_fraction > 0.0 && self.ensemble.core_fraction < 1.0) {
            return Err(Error::Config("ensemble.core_fraction must be in (0,1)".into()));
        }
        for &q in &self.ensemble.q {
            if !(q >= 2.0) {
                return Err(Error::Config(format!("ensemble.q entries must be ≥ 2, got {q}")));
            }
        }
        for &rho in &self.ensemble.rho {
            if !(rho >= 2.0) || !rho.is_finite() {
                return Err(Error::Config(format!(
                    "ensemble.rho entries must be finite and ≥ 2, got {rho}"
                )));
            }
        }
        Ok(())
    }

    /// Fit window with the default lower edge at t = 2 (the analysis regime
    /// split) intersected with the recorded horizon.
    pub fn fit_window(&self) -> (f64, f64) {
        self.ensemble
            .fit_window
            .unwrap_or((2.0, self.noise.t_final))
    }
}

/// Hex digest of the raw config bytes; every output artifact carries it.
pub fn config_digest(raw: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(raw);
    let out = hasher.finalize();
    out.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
