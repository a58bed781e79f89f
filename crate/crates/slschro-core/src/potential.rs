//! The real potential `V` and its coupling `δ`.
//!
//! Norm conventions: `‖V‖_{L^r}` is the continuum norm (closed forms for
//! Gaussian shapes). `‖V̂‖_{L¹}` uses the normalization in which
//! `V(x) = ∫ V̂(η) e^{i⟨η,x⟩} dη`, i.e. `V̂ = (2π)^{-d} ∫ V e^{-i⟨η,x⟩} dx`,
//! so `‖V̂‖₁` is exactly the modulation-superposition weight of the operator
//! `f ↦ Vf`. A Gaussian bump of amplitude `A` then has `‖V̂‖₁ = |A|` for any
//! width.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::spectral::Spectral;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GaussianBump {
    pub amplitude: f64,
    /// Width per axis.
    pub sigma: Vec<f64>,
    pub center: Vec<f64>,
}

impl GaussianBump {
    fn eval(&self, x: &[f64]) -> f64 {
        let s: f64 = x
            .iter()
            .zip(self.sigma.iter())
            .zip(self.center.iter())
            .map(|((&xi, &si), &ci)| {
                let u = xi - ci;
                u * u / (2.0 * si * si)
            })
            .sum();
        self.amplitude * (-s).exp()
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.sigma.len() != d || self.center.len() != d {
            return Err(Error::Potential(format!(
                "gaussian bump has {} widths / {} centers for dimension {}",
                self.sigma.len(),
                self.center.len(),
                d
            )));
        }
        if self.sigma.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Potential("gaussian width must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialShape {
    Constant {
        amplitude: f64,
    },
    Gaussian {
        amplitude: f64,
        sigma: Vec<f64>,
        center: Vec<f64>,
    },
    SumOfGaussians {
        components: Vec<GaussianBump>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PotentialSpec {
    #[serde(flatten)]
    pub shape: PotentialShape,
    /// Coupling strength in front of the noise term.
    pub delta: f64,
}

impl PotentialSpec {
    pub fn gaussian(amplitude: f64, sigma: Vec<f64>, center: Vec<f64>, delta: f64) -> Self {
        PotentialSpec {
            shape: PotentialShape::Gaussian {
                amplitude,
                sigma,
                center,
            },
            delta,
        }
    }

    pub fn gaussian_isotropic(d: usize, amplitude: f64, sigma: f64, delta: f64) -> Self {
        Self::gaussian(amplitude, vec![sigma; d], vec![0.0; d], delta)
    }

    pub fn constant(amplitude: f64, delta: f64) -> Self {
        PotentialSpec {
            shape: PotentialShape::Constant { amplitude },
            delta,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.delta >= 0.0) {
            return Err(Error::Potential(format!(
                "coupling δ must be nonnegative, got {}",
                self.delta
            )));
        }
        match &self.shape {
            PotentialShape::Constant { .. } => Ok(()),
            PotentialShape::Gaussian {
                amplitude,
                sigma,
                center,
            } => GaussianBump {
                amplitude: *amplitude,
                sigma: sigma.clone(),
                center: center.clone(),
            }
            .validate(d),
            PotentialShape::SumOfGaussians { components } => {
                if components.is_empty() {
                    return Err(Error::Potential("sum-of-gaussians needs components".into()));
                }
                components.iter().try_for_each(|c| c.validate(d))
            }
        }
    }

    fn bumps(&self) -> Vec<GaussianBump> {
        match &self.shape {
            PotentialShape::Constant { .. } => vec![],
            PotentialShape::Gaussian {
                amplitude,
                sigma,
                center,
            } => vec![GaussianBump {
                amplitude: *amplitude,
                sigma: sigma.clone(),
                center: center.clone(),
            }],
            PotentialShape::SumOfGaussians { components } => components.clone(),
        }
    }

    /// Evaluate `V` on a grid. Gaussian bumps must be resolved
    /// (`σ ≥ 3h` per axis) and contained (`|c| + 3σ ≤ L/2` per axis).
    pub fn sample(&self, grid: &Grid) -> Result<ComplexField> {
        let d = grid.dim();
        self.validate(d)?;
        match &self.shape {
            PotentialShape::Constant { amplitude } => {
                let a = *amplitude;
                Ok(ComplexField::from_fn(grid.clone(), move |_| {
                    Complex64::new(a, 0.0)
                }))
            }
            _ => {
                let bumps = self.bumps();
                for bump in &bumps {
                    for a in 0..d {
                        let h = grid.spacing(a);
                        let half = grid.lengths()[a] / 2.0;
                        if bump.sigma[a] < 3.0 * h * (1.0 - 1e-12) {
                            return Err(Error::Potential(format!(
                                "gaussian width {} under-resolved on axis {a} (needs ≥ 3 cells = {})",
                                bump.sigma[a],
                                3.0 * h
                            )));
                        }
                        if bump.center[a].abs() + 3.0 * bump.sigma[a] > half * (1.0 + 1e-12) {
                            return Err(Error::Potential(format!(
                                "gaussian bump not contained on axis {a}: |{}| + 3·{} > {half}",
                                bump.center[a], bump.sigma[a]
                            )));
                        }
                    }
                }
                Ok(ComplexField::from_fn(grid.clone(), move |x| {
                    Complex64::new(bumps.iter().map(|b| b.eval(x)).sum(), 0.0)
                }))
            }
        }
    }

    /// `‖V‖_{L¹(ℝ^d)}`.
    pub fn l1_norm(&self, d: usize) -> Result<f64> {
        self.lr_norm(d, 1.0)
    }

    /// `‖V‖_{L^r(ℝ^d)}`; a single Gaussian gives
    /// `|A| ∏_a (2πσ_a²/r)^{1/(2r)}`.
    pub fn lr_norm(&self, d: usize, r: f64) -> Result<f64> {
        self.validate(d)?;
        if !(r >= 1.0) {
            return Err(Error::Potential(format!("L^r norm needs r ∈ [1,∞], got {r}")));
        }
        match &self.shape {
            PotentialShape::Constant { amplitude } => {
                if r.is_infinite() {
                    Ok(amplitude.abs())
                } else {
                    Err(Error::Potential(
                        "constant potential has infinite L^r norm on ℝ^d (torus-only shape)"
                            .into(),
                    ))
                }
            }
            PotentialShape::Gaussian {
                amplitude,
                sigma,
                ..
            } => {
                if r.is_infinite() {
                    return Ok(amplitude.abs());
                }
                let prod: f64 = sigma
                    .iter()
                    .map(|&s| (2.0 * std::f64::consts::PI * s * s / r).powf(1.0 / (2.0 * r)))
                    .product();
                Ok(amplitude.abs() * prod)
            }
            PotentialShape::SumOfGaussians { components } => {
                let same_sign = components.iter().all(|c| c.amplitude >= 0.0)
                    || components.iter().all(|c| c.amplitude <= 0.0);
                if r == 1.0 && same_sign {
                    Ok(components
                        .iter()
                        .map(|c| {
                            c.amplitude.abs()
                                * c.sigma
                                    .iter()
                                    .map(|&s| (2.0 * std::f64::consts::PI * s * s).sqrt())
                                    .product::<f64>()
                        })
                        .sum())
                } else if r.is_infinite() {
                    let grid = self.quadrature_grid(d)?;
                    self.sample(&grid)?.lp_norm(f64::INFINITY)
                } else {
                    let grid = self.quadrature_grid(d)?;
                    self.sample(&grid)?.lp_norm(r)
                }
            }
        }
    }

    /// `‖V̂‖_{L¹}` in the modulation normalization (see module docs).
    pub fn fourier_l1_norm(&self, d: usize) -> Result<f64> {
        self.validate(d)?;
        match &self.shape {
            // A·1 = A·e^{i⟨0,x⟩}: a point mass of weight A at η = 0.
            PotentialShape::Constant { amplitude } => Ok(amplitude.abs()),
            PotentialShape::Gaussian { amplitude, .. } => Ok(amplitude.abs()),
            PotentialShape::SumOfGaussians { components } => {
                let same_center = components
                    .windows(2)
                    .all(|w| w[0].center == w[1].center);
                let same_sign = components.iter().all(|c| c.amplitude >= 0.0)
                    || components.iter().all(|c| c.amplitude <= 0.0);
                if same_center && same_sign {
                    Ok(components.iter().map(|c| c.amplitude.abs()).sum())
                } else {
                    // |V̂| has no closed form once phases oscillate; integrate
                    // numerically: (2π)^{-d} ∫|FV| dk = mean over DFT modes of
                    // |DFT(V)|·h^d / L^d = mean_k |DFT(V)_k| / N · … collapses
                    // to Σ|DFT(V)_k| / n^d.
                    let grid = self.quadrature_grid(d)?;
                    let field = self.sample(&grid)?;
                    let spectral = Spectral::new(&grid);
                    let mut v = field.into_values();
                    spectral.forward(&mut v, false);
                    let sum = crate::stats::pairwise_sum_by(&v, |c| c.norm());
                    Ok(sum / grid.len() as f64)
                }
            }
        }
    }

    /// The smallness scalar `δ(‖V‖_{L¹} + ‖V̂‖_{L¹})` recorded with every
    /// experiment.
    pub fn smallness(&self, d: usize) -> Result<f64> {
        Ok(self.delta * (self.l1_norm(d)? + self.fourier_l1_norm(d)?))
    }

    /// Internal grid for numeric quadrature of sum-of-gaussians norms.
    fn quadrature_grid(&self, d: usize) -> Result<Grid> {
        let bumps = self.bumps();
        if bumps.is_empty() {
            return Err(Error::Potential(
                "numeric quadrature needs gaussian components".into(),
            ));
        }
        let n = match d {
            1 => 4096,
            2 => 512,
            _ => 128,
        };
        let mut lengths = vec![0.0f64; d];
        let mut min_sigma = vec![f64::INFINITY; d];
        for b in &bumps {
            for a in 0..d {
                lengths[a] = lengths[a].max(2.0 * (b.center[a].abs() + 8.0 * b.sigma[a]));
                min_sigma[a] = min_sigma[a].min(b.sigma[a]);
            }
        }
        for a in 0..d {
            // keep every component resolved on the quadrature grid
            let max_len = min_sigma[a] / 3.0 * n as f64;
            if lengths[a] > max_len {
                return Err(Error::Potential(format!(
                    "components too disparate for numeric quadrature on axis {a}"
                )));
            }
        }
        Grid::with_axes(&vec![n; d], &lengths)
    }
}
