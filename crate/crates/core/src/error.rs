use thiserror::Error;

/// Everything that can go wrong while configuring or running a simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("average polar angle theta0 = {0} makes sin(theta0) vanish")]
    SingularAngle(f64),

    #[error("pulse escapes the storage window: only {fraction_inside:.6} of its energy lies in (-T, 0)")]
    PulseEscapesWindow { fraction_inside: f64 },

    #[error("grid under-resolved: {0}")]
    UnderResolved(String),

    #[error("numerical blowup at tau = {tau:e} s, z = {z:e} m")]
    NumericalBlowup { tau: f64, z: f64 },

    #[error("spin conjugation requested in forward retrieval mode")]
    ModeMismatch,

    #[error("dense oracle limited to {limit} unknowns per phase, grid needs {needed}")]
    OracleTooLarge { needed: usize, limit: usize },

    #[error("{0} is undefined for a zero-energy record")]
    ZeroEnergy(&'static str),

    #[error("absorption center z_p = {z_p:e} m lies outside the medium (|z_p| >= {half_length:e} m)")]
    OutsideMedium { z_p: f64, half_length: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ray at x = {x:e} m failed: {source}")]
    Ray { x: f64, source: Box<Error> },
}

impl Error {
    /// Strips [`Error::Ray`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Ray { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
