use thiserror::Error;

/// Errors surfaced by the simulation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid error: {0}")]
    Grid(String),

    #[error("potential error: {0}")]
    Potential(String),

    #[error("noise error: {0}")]
    Noise(String),

    #[error("norm spec error: {0}")]
    NormSpec(String),

    #[error("non-finite value detected at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },

    #[error("non-finite value detected on path {path_index} at step {step} (t = {t})")]
    NonFinitePath {
        path_index: u64,
        step: usize,
        t: f64,
    },

    #[error("validity window exhausted: {0}")]
    ValidityWindow(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("snapshot format error: {0}")]
    Snapshot(String),
}

pub type Result<T> = std::result::Result<T, Error>;
