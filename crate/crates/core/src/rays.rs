//! Geometrical-optics driver: one independent ray per transverse sample.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::advisor::{self, Status};
use crate::domain::{sample_pulse, transverse_intensity, Geometry, MediumParams, PulseSpec, ScanProtocol, SimGrid};
use crate::error::{Error, Result};
use crate::metrics::{self, Metrics, WeightedPair};
use crate::record::TimeRecord;
use crate::solver::{run_ray_with_input, SimResult};

#[derive(Debug, Clone)]
pub struct RayBundle {
    pub x_samples: Vec<f64>,
    /// Transverse intensity weights, normalized to unit sum.
    pub weights: Vec<f64>,
    /// Transverse amplitude profile at each sample (peak 1).
    pub profile: Vec<f64>,
    pub results: Vec<SimResult>,
    /// Half transverse size `Lx / 2`, the x normalization of field maps.
    pub half_lx: f64,
    /// Storage duration `T`, the tau normalization of field maps.
    pub duration: f64,
    /// Advisory notes raised before the run (warn-only conditions).
    pub warnings: Vec<String>,
}

/// Runs every ray of the bundle on the current rayon pool; results are
/// gathered in x order.
pub fn run_bundle(
    params: &MediumParams,
    scan: &ScanProtocol,
    geom: &Geometry,
    pulse: &PulseSpec,
    grid: &SimGrid,
) -> Result<RayBundle> {
    let warnings = advisor::check_conditions(params, scan, geom, pulse)
        .entries
        .iter()
        .filter(|e| e.status == Status::Warn)
        .map(|e| format!("{}: {:.8e} {} {:.8e} ({})", e.name, e.lhs, e.cmp, e.rhs, e.anchor))
        .collect();

    let x_samples = grid.x_samples();
    let halfwidth = pulse.transverse_halfwidth();
    let raw: Vec<f64> = x_samples.iter().map(|&x| transverse_intensity(x, halfwidth)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let profile = raw.iter().map(|w| w.sqrt()).collect();

    let a_in = sample_pulse(pulse, grid)?;
    let results = x_samples
        .par_iter()
        .map(|&x| {
            run_ray_with_input(x, params, scan, grid, &a_in)
                .map_err(|e| Error::Ray { x, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RayBundle {
        x_samples,
        weights,
        profile,
        results,
        half_lx: 0.5 * geom.lx(),
        duration: scan.duration(),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Input,
    Transmitted,
    Output,
}

impl FieldKind {
    fn record<'a>(&self, r: &'a SimResult) -> &'a TimeRecord {
        match self {
            Self::Input => &r.a_in,
            Self::Transmitted => &r.a_trans,
            Self::Output => &r.a_out,
        }
    }
}

/// Complex field over normalized axes; rows ascend in x.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub x_norm: Vec<f64>,
    pub tau_norm: Vec<f64>,
    pub rows: Vec<Vec<Complex64>>,
}

impl FieldMap {
    pub fn magnitude(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.iter().map(|v| v.norm()).collect()).collect()
    }
}

/// Field map on axes `x / (Lx/2)` and `tau / T`, including the transverse profile.
pub fn field_map(bundle: &RayBundle, which: FieldKind) -> FieldMap {
    let x_norm = bundle.x_samples.iter().map(|x| x / bundle.half_lx).collect();
    let tau_norm = bundle
        .results
        .first()
        .map(|r| which.record(r).times().map(|t| t / bundle.duration).collect())
        .unwrap_or_default();
    let rows = bundle
        .results
        .iter()
        .zip(&bundle.profile)
        .map(|(r, &u)| which.record(r).values.iter().map(|v| v * u).collect())
        .collect();
    FieldMap { x_norm, tau_norm, rows }
}

fn summed_intensity(bundle: &RayBundle, which: FieldKind) -> (f64, f64, Vec<f64>) {
    let first = which.record(&bundle.results[0]);
    let mut acc = vec![0.0; first.len()];
    for (r, w) in bundle.results.iter().zip(&bundle.weights) {
        for (a, v) in acc.iter_mut().zip(&which.record(r).values) {
            *a += w * v.norm_sqr();
        }
    }
    (first.t0, first.dt, acc)
}

/// Transverse-weighted efficiency, fidelity and moments.
pub fn aggregate_metrics(bundle: &RayBundle) -> Result<Metrics> {
    if bundle.results.is_empty() {
        return Err(Error::ZeroEnergy("efficiency"));
    }
    let w = &bundle.weights;
    let per = |f: &dyn Fn(&SimResult) -> f64| -> f64 {
        bundle.results.iter().zip(w).map(|(r, w)| w * f(r)).sum()
    };
    let n_in = per(&|r| metrics::photon_number(&r.a_in));
    if n_in <= 0.0 {
        return Err(Error::ZeroEnergy("efficiency"));
    }
    let n_out = per(&|r| metrics::photon_number(&r.a_out));
    let n_trans = per(&|r| metrics::photon_number(&r.a_trans));
    let remaining = per(&|r| r.spin.remaining);
    let lost = per(&|r| r.spin.dissipated + r.spin.gap_loss);

    let pairs: Vec<WeightedPair<'_>> = bundle
        .results
        .iter()
        .zip(w)
        .map(|(r, &weight)| WeightedPair { weight, a_in: &r.a_in, a_out: &r.a_out })
        .collect();
    let fid = metrics::fidelity_weighted(&pairs)?;

    let (t0, dt, i_in) = summed_intensity(bundle, FieldKind::Input);
    let m_in = metrics::intensity_moments(t0, dt, &i_in)?;
    let (t0, dt, i_out) = summed_intensity(bundle, FieldKind::Output);
    let m_out = metrics::intensity_moments(t0, dt, &i_out)?;
    let b = metrics::broadening_from_moments(m_in, m_out);

    Ok(Metrics {
        n_in,
        n_out,
        eta: n_out / n_in,
        f_prime: fid.f_prime,
        t_bar: fid.t_bar,
        direct_overlap: fid.direct,
        centroid_delay: b.centroid_delay,
        echo_offset: b.echo_offset,
        rms_width_in: b.rms_in,
        rms_width_out: b.rms_out,
        width_ratio: b.width_ratio,
        conservation_residual: (n_in - n_trans - n_out - remaining - lost).abs() / n_in,
        escaped_fraction: remaining / n_in,
    })
}

/// Per-ray offset of the echo centroid from the mirror image of the input.
/// Rays that retrieve nothing yield `None`.
pub fn echo_offsets(bundle: &RayBundle) -> Vec<Option<f64>> {
    bundle
        .results
        .iter()
        .map(|r| metrics::delay_and_broadening(&r.a_in, &r.a_out).ok().map(|b| b.echo_offset))
        .collect()
}
