//! Mixed-norm exponent bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents of the mixed norm `L^ρ_ω L^q_x` together with the dual index
/// `p` (`1/p + 1/q = 1`) and the decay rate `α = d(1/2 - 1/q)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct NormSpec {
    pub q: f64,
    pub p: f64,
    pub rho: f64,
    pub alpha: f64,
    /// Whether `α > 1`, the range required by the bootstrap argument.
    pub bootstrap_range: bool,
}

impl NormSpec {
    pub fn new(d: usize, q: f64, rho: f64) -> Result<Self> {
        if !(q >= 2.0) {
            return Err(Error::NormSpec(format!("q must be ≥ 2 (or ∞), got {q}")));
        }
        if !(rho >= 2.0) || !rho.is_finite() {
            return Err(Error::NormSpec(format!("ρ must be finite and ≥ 2, got {rho}")));
        }
        let p = if q.is_infinite() { 1.0 } else { q / (q - 1.0) };
        let alpha = alpha(d, q);
        Ok(NormSpec {
            q,
            p,
            rho,
            alpha,
            bootstrap_range: alpha > 1.0,
        })
    }
}

/// `α = d(1/2 - 1/q)`; `q = ∞` gives `d/2`.
pub fn alpha(d: usize, q: f64) -> f64 {
    if q.is_infinite() {
        d as f64 / 2.0
    } else {
        d as f64 * (0.5 - 1.0 / q)
    }
}
