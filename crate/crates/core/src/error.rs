use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation; `field` names the offending input.
    #[error("invalid parameter `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("steady-state denominator vanishes ({magnitude:e} in Γ units); drive off and no relaxation on two-photon resonance")]
    Singularity { magnitude: f64 },

    #[error("integration diverged at t = {time:e} s; reduce the time step (dt·Γ = {dt_gamma})")]
    StepSize { time: f64, dt_gamma: f64 },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("grid needs {required} complex samples, above the cap of {cap}")]
    MemoryCap { required: usize, cap: usize },

    #[error("density-matrix invariant violated at z index {z_index}, t index {t_index}: {what}")]
    Invariant { z_index: usize, t_index: usize, what: String },

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),

    #[error("root bracket not found: {0}")]
    NoRoot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Validation { field: field.into(), reason: reason.into() }
}
