//! Average-angle sweeps of the aggregate metrics.

use std::f64::consts::FRAC_PI_2;
use std::str::FromStr;

use rayon::prelude::*;

use crate::advisor::{predict_broadening, predict_delay};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::rays::{aggregate_metrics, run_bundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Half rotation angle held fixed.
    ConstDtheta,
    /// Half rotation angle scaled by `1 / sin(theta0)`, keeping `beta sin(theta0)` fixed.
    ConstDthetaSin,
}

impl FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "const_dtheta" => Ok(Self::ConstDtheta),
            "const_dtheta_sin" => Ok(Self::ConstDthetaSin),
            other => Err(Error::Config(format!("unknown sweep mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub theta0: f64,
    pub delta_theta: f64,
    pub metrics: Metrics,
    /// Predicted forward delay of the ray at `x = R`, if defined.
    pub predicted_td_at_r: Option<f64>,
    pub predicted_tbr: Option<f64>,
}

/// `steps` evenly spaced values from `from` to `to` inclusive.
pub fn linspace(from: f64, to: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![from],
        n => (0..n)
            .map(|i| if i == n - 1 { to } else { from + (to - from) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Configuration for one sweep point, with the base config's `delta_theta` as reference.
pub fn point_config(base: &RunConfig, theta0: f64, mode: SweepMode) -> Result<RunConfig> {
    let dtheta = match mode {
        SweepMode::ConstDtheta => base.scan.delta_theta(),
        SweepMode::ConstDthetaSin => base.scan.delta_theta() / theta0.sin(),
    };
    let mut cfg = base.clone();
    cfg.scan = base.scan.with_angles(theta0, dtheta, &base.geom)?;
    Ok(cfg)
}

pub fn run_sweep(base: &RunConfig, from: f64, to: f64, steps: usize, mode: SweepMode) -> Result<Vec<SweepPoint>> {
    if steps == 0 {
        return Err(Error::Config("sweep needs at least one step".into()));
    }
    let theta_g = base.geom.theta_g();
    for t in [from, to] {
        if !(t > theta_g && t <= FRAC_PI_2) {
            return Err(Error::Config(format!(
                "sweep range must lie in (theta_g, pi/2] = ({theta_g}, {FRAC_PI_2}], got {t}"
            )));
        }
    }
    let configs = linspace(from, to, steps)
        .into_iter()
        .map(|t| point_config(base, t, mode))
        .collect::<Result<Vec<_>>>()?;
    configs
        .par_iter()
        .map(|cfg| {
            let grid = cfg.build_grid()?;
            let bundle = run_bundle(&cfg.params, &cfg.scan, &cfg.geom, &cfg.pulse, &grid)?;
            Ok(SweepPoint {
                theta0: cfg.scan.theta0(),
                delta_theta: cfg.scan.delta_theta(),
                metrics: aggregate_metrics(&bundle)?,
                predicted_td_at_r: predict_delay(cfg.geom.half_width(), &cfg.params, &cfg.scan, &cfg.geom)
                    .ok()
                    .map(|e| e.value),
                predicted_tbr: predict_broadening(&cfg.params, &cfg.scan, &cfg.geom).ok().map(|e| e.value),
            })
        })
        .collect()
}
