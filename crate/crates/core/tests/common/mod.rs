#![allow(dead_code)]

use anglescan::config::RunConfig;
use anglescan::domain::{GridSettings, Geometry, MediumParams, PulseSpec, RetrievalMode, ScanProtocol, SimGrid};
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

pub const LAMBDA: f64 = 1.55e-6;
pub const G2N: f64 = 8.3e10;
pub const T: f64 = 1e-6;
pub const DT: f64 = T / 20.0;
pub const L: f64 = 0.01;
pub const LX: f64 = 0.006;
pub const R: f64 = LX / 12.0;
pub const DTHETA: f64 = 8e-3;

/// Telecom reference operating point at average angle `theta0`.
pub fn reference(theta0: f64, retrieval: RetrievalMode) -> RunConfig {
    let geom = Geometry::new(L, LX, LX, R, LAMBDA, LAMBDA).unwrap();
    RunConfig {
        params: MediumParams::new(G2N, 0.0, 0.0, 0.0).unwrap(),
        scan: ScanProtocol::new(theta0, DTHETA, T, 0.0, 0.0, retrieval, &geom).unwrap(),
        geom,
        pulse: PulseSpec::centered(DT, T, Complex64::new(1.0, 0.0), R).unwrap(),
        grid: GridSettings::default(),
    }
}

pub fn normal_incidence() -> RunConfig {
    reference(FRAC_PI_2, RetrievalMode::Forward)
}

pub fn grid(cfg: &RunConfig) -> SimGrid {
    cfg.build_grid().unwrap()
}

/// Coarse single-x grid for fast property checks.
pub fn coarse(cfg: &RunConfig, nz: usize, nt: usize, nx: usize) -> SimGrid {
    let mut c = cfg.clone();
    c.grid = c.grid.with_resolution(nz, nt, nx).underresolved();
    c.build_grid().unwrap()
}
