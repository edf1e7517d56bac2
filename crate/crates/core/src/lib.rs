//! Quantum storage of weak pulses by angular scanning of a Raman control field.
//!
//! Rotating the control beam during off-resonant Raman interaction writes a
//! linear detuning gradient `beta sin(theta0)` along the medium (plus a
//! transverse term `beta cos(theta0) x`), which maps the signal pulse onto a
//! spin-wave grating. Reversing the scan rephases the grating and re-emits the
//! pulse. This crate integrates the per-ray co-moving-frame equations through
//! storage and retrieval, measures efficiency and fidelity, and evaluates the
//! operating-condition inequalities of the scheme.
//!
//! Modules:
//! - [`domain`]: parameters, geometry, pulses, the detuning field
//! - [`solver`]: single-ray integrator
//! - [`oracle`]: dense direct-solve reference for the integrator
//! - [`rays`]: transverse bundles, field maps, aggregate metrics
//! - [`metrics`]: photon numbers, fidelity, moments, conservation
//! - [`advisor`]: condition report and analytic delay/broadening estimates
//! - [`config`]: plain-text run configuration
//! - [`sweep`]: average-angle sweeps

pub mod advisor;
pub mod config;
pub mod domain;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod rays;
pub mod record;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
pub use record::TimeRecord;
