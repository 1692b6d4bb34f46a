use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation layers.
#[derive(Debug, Error)]
pub enum QwalkError {
    #[error("length mismatch: expected {expected} entries, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("step size {dt} violates the stability bound dt*(2+max|eps|) <= 0.5 (max|eps| = {max_potential})")]
    UnstableStep { dt: f64, max_potential: f64 },

    #[error("norm drift {drift:.3e} at t = {time} exceeds tolerance {tolerance:.1e}")]
    NormDrift { time: f64, drift: f64, tolerance: f64 },

    #[error("window of {sites} sites exceeds the cap of {cap}")]
    WindowOverflow { sites: usize, cap: usize },

    #[error("crossover undetermined: {0}")]
    Undetermined(String),

    #[error("not saturated: sigma2(2T)/sigma2(T) = {ratio:.4}")]
    NotSaturated { ratio: f64 },
}

impl QwalkError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        QwalkError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            QwalkError::UnstableStep { .. }
                | QwalkError::NormDrift { .. }
                | QwalkError::WindowOverflow { .. }
        )
    }
}

/// Configuration problems, always naming the offending key.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("key `{key}`: cannot parse `{value}`")]
    Parse { key: String, value: String },

    #[error("key `{key}`: {reason}")]
    OutOfRange { key: String, reason: String },

    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: PathBuf, line: usize },

    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

/// Top-level failure of an experiment run; maps onto process exit codes.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Sim(#[from] QwalkError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("ballistic check failed: max |sigma2/(2t^2) - 1| = {worst:.4} at t = {time}")]
    CheckFailed { worst: f64, time: f64 },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Sim(e) if e.is_numerical() => 2,
            RunError::Sim(_) => 1,
            RunError::CheckFailed { .. } => 2,
            RunError::Io { .. } => 3,
        }
    }
}

pub type Result<T, E = QwalkError> = std::result::Result<T, E>;
