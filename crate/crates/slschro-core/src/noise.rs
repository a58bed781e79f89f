//! Seed-reproducible Brownian paths with bridge refinement.
//!
//! Reproducibility contract, pinned here and relied on by the acceptance
//! suite:
//!
//! * per-path generator state is derived from `(master_seed, path_index,
//!   refinement_level)` through the SplitMix64 finalizer, so path `i` is the
//!   same no matter which worker generates it or in which order;
//! * the uniform stream is xoshiro256++ (pure integer ops, platform
//!   independent), mapped to `(0,1)` via the top 53 bits;
//! * Gaussians come from the inverse CDF ([`crate::special::normal_inv`]),
//!   one uniform per normal — no rejection, fixed stream consumption.
//!
//! Bridge refinement halves `dt`: the midpoint displacements at refinement
//! level `ℓ` are drawn from the dedicated `(seed, index, ℓ)` stream, and the
//! pair is balanced so each refined pair reconstructs its coarse increment
//! exactly in floating point whenever representable (almost every pair) and
//! to within one ulp of the larger half otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_seed(master_seed: u64, path_index: u64, level: u32) -> u64 {
    let mut z = master_seed;
    z = mix64(z.wrapping_add(GOLDEN.wrapping_mul(path_index.wrapping_add(1))));
    z = mix64(z.wrapping_add(GOLDEN.wrapping_mul(level as u64 + 1)));
    z
}

/// xoshiro256++ with SplitMix64 state expansion.
#[derive(Debug, Clone)]
pub struct Xoshiro256pp {
    s: [u64; 4],
}

impl Xoshiro256pp {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut next = || {
            sm = sm.wrapping_add(GOLDEN);
            mix64(sm)
        };
        let s = [next(), next(), next(), next()];
        Xoshiro256pp { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in the open interval (0,1): top 53 bits, offset by half an ulp.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    /// Standard normal via the inverse CDF.
    pub fn next_standard_normal(&mut self) -> f64 {
        crate::special::normal_inv(self.next_open01())
    }
}

/// One realization of Brownian increments on a uniform mesh.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BrownianPath {
    pub master_seed: u64,
    pub path_index: u64,
    /// Bridge refinements applied since the level-0 sample.
    pub level: u32,
    pub dt: f64,
    pub horizon: f64,
    /// `ΔB_k ~ N(0, dt)`.
    pub increments: Vec<f64>,
}

impl BrownianPath {
    /// Number of mesh steps.
    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// `B` at mesh point `k` (prefix sum of increments).
    pub fn value_at_step(&self, k: usize) -> f64 {
        self.increments[..k].iter().sum()
    }

    pub fn terminal_value(&self) -> f64 {
        self.value_at_step(self.len())
    }

    /// Brownian-bridge midpoint refinement to `dt/2`. Coarse increments are
    /// preserved: `ΔB_k = ΔB'_{2k} + ΔB'_{2k+1}` exactly in floating point
    /// for every pair where that is representable, and to within one ulp of
    /// the larger half otherwise.
    pub fn refine(&self) -> BrownianPath {
        let new_level = self.level + 1;
        let mut rng = Xoshiro256pp::new(stream_seed(
            self.master_seed,
            self.path_index,
            new_level,
        ));
        let half_dt = self.dt / 2.0;
        let mut increments = Vec::with_capacity(self.increments.len() * 2);
        for &db in &self.increments {
            // midpoint displacement ~ N(0, dt/4)
            let xi = (half_dt / 2.0).sqrt() * rng.next_standard_normal();
            let (first, second) = split_exact(db, xi);
            increments.push(first);
            increments.push(second);
        }
        BrownianPath {
            master_seed: self.master_seed,
            path_index: self.path_index,
            level: new_level,
            dt: half_dt,
            horizon: self.horizon,
            increments,
        }
    }
}

/// Split `db` into `(db/2 + ξ, db/2 - ξ)` such that the floating-point sum
/// of the returned pair reproduces `db` as closely as f64 permits: exactly
/// whenever the smaller half shares the increment's binade (the typical
/// case). When `|ξ| ≫ |db|` neither half can carry the increment's lowest
/// mantissa bits, so a defect up to one ulp of the larger half is
/// unavoidable; the loop then settles on the closest representable pair.
/// The perturbation of the bridge displacement is a few ulps at most.
fn split_exact(db: f64, xi: f64) -> (f64, f64) {
    let h = db / 2.0;
    let plus = h + xi;
    let minus = h - xi;
    let (small0, plus_is_small) = if plus.abs() <= minus.abs() {
        (plus, true)
    } else {
        (minus, false)
    };
    let mut small = small0;
    let mut big = db - small;
    let mut best = (big, small, ((big + small) - db).abs());
    for _ in 0..12 {
        let defect = (big + small) - db;
        if defect.abs() < best.2 {
            best = (big, small, defect.abs());
        }
        if defect == 0.0 {
            break;
        }
        let ns = small - defect;
        if ns != small {
            small = ns;
            continue;
        }
        let nb = big - defect;
        if nb == big {
            break; // defect below both ulps: no representable improvement
        }
        big = nb;
    }
    if ((big + small) - db).abs() > best.2 {
        big = best.0;
        small = best.1;
    }
    if plus_is_small {
        (small, big)
    } else {
        (big, small)
    }
}

/// Sample the level-0 path for `(master_seed, index)` on the mesh `dt`,
/// horizon `T`. `T` must be an integral multiple of `dt`.
pub fn sample_path(master_seed: u64, path_index: u64, dt: f64, horizon: f64) -> Result<BrownianPath> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Noise(format!("dt must be positive, got {dt}")));
    }
    if horizon < 0.0 || !horizon.is_finite() {
        return Err(Error::Noise(format!("horizon must be ≥ 0, got {horizon}")));
    }
    let steps_f = horizon / dt;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::Noise(format!(
            "horizon {horizon} is not an integral multiple of dt {dt}"
        )));
    }
    let steps = steps as usize;
    let mut rng = Xoshiro256pp::new(stream_seed(master_seed, path_index, 0));
    let sqrt_dt = dt.sqrt();
    let increments = (0..steps)
        .map(|_| sqrt_dt * rng.next_standard_normal())
        .collect();
    Ok(BrownianPath {
        master_seed,
        path_index,
        level: 0,
        dt,
        horizon,
        increments,
    })
}
