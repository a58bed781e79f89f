//! Error function and inverse normal CDF.
//!
//! `erf` uses the positive-term confluent series for small arguments and a
//! continued fraction for the tail, both to near machine precision. The
//! Gaussian quantile is obtained by Newton refinement of the erfc-based CDF.
//! These are the pinned primitives behind the reproducible Gaussian sampler
//! in [`crate::noise`].

use std::f64::consts::PI;

const SQRT_PI: f64 = 1.772_453_850_905_516;
const ERF_CROSSOVER: f64 = 2.0;

/// Positive-term series: erf(x) = (2x/√π) e^{-x²} Σ (2x²)^n / (2n+1)!!.
fn erf_series(x: f64) -> f64 {
    let x2 = 2.0 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..200 {
        term *= x2 / (2.0 * n as f64 + 1.0);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    2.0 * x / SQRT_PI * (-x * x).exp() * sum
}

/// Continued fraction for erfc(x), x ≥ 2 (modified Lentz):
/// erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …)))).
fn erfc_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0f64;
    for k in 1..400 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x * x).exp() / (SQRT_PI * f)
}

pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x < ERF_CROSSOVER {
        erf_series(x)
    } else {
        1.0 - erfc_cf(x)
    }
}

pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < ERF_CROSSOVER {
        1.0 - erf_series(x)
    } else {
        erfc_cf(x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        0.5 * erfc(-z / std::f64::consts::SQRT_2)
    } else {
        1.0 - 0.5 * erfc(z / std::f64::consts::SQRT_2)
    }
}

/// Standard normal quantile Φ⁻¹(u) for u ∈ (0,1).
///
/// Solves erfc(s) = 2·min(u, 1-u) by Newton iteration with an asymptotic
///
/// initial guess, then maps back through z = ∓√2·s. Accurate to ~1e-15
/// relative over the full open interval; fully deterministic.
pub fn normal_inv(u: f64) -> f64 {
    assert!(u > 0.0 && u < 1.0, "normal_inv requires u in (0,1), got {u}");
    if u == 0.5 {
        return 0.0;
    }
    let (q, negate) = if u < 0.5 { (u, true) } else { (1.0 - u, false) };
    // target: erfc(s) = 2q with s ≥ 0
    let target = 2.0 * q;
    let mut s = if target > 0.5 {
        // near the center erfc(s) ≈ 1 - 2s/√π
        (1.0 - target) * SQRT_PI / 2.0
    } else {
        // tail asymptotic erfc(s) ≈ e^{-s²}/(s√π)
        let l = -(target * SQRT_PI).ln();
        let mut t = l.max(1e-8).sqrt();
        for _ in 0..3 {
            t = (l - t.ln().max(-1.0)).max(1e-16).sqrt();
        }
        t
    };
    for _ in 0..60 {
        let g = erfc(s) - target;
        // g'(s) = -2 e^{-s²}/√π
        let deriv = -2.0 * (-s * s).exp() / SQRT_PI;
        let step = g / deriv;
        s -= step;
        if s < 0.0 {
            s = 0.0;
        }
        if step.abs() <= 1e-16 * (1.0 + s.abs()) {
            break;
        }
    }
    let z = std::f64::consts::SQRT_2 * s;
    if negate {
        -z
    } else {
        z
    }
}

/// Gaussian quantile z-score for a two-sided confidence level (e.g. 0.95).
pub fn z_for_confidence(level: f64) -> f64 {
    normal_inv(0.5 + level / 2.0)
}

#[allow(dead_code)]
fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}
