//! File writers. Every CSV starts with a `# anglescan <schema> v1` line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anglescan::metrics::Metrics;
use anglescan::rays::{FieldMap, RayBundle};
use anglescan::sweep::SweepPoint;

pub const SCHEMA_VERSION: u32 = 1;

/// Nine significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.8e}")
}

fn csv_writer(path: &Path, schema: &str) -> io::Result<csv::Writer<BufWriter<File>>> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# anglescan {schema} v{SCHEMA_VERSION}")?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(w: csv::Writer<BufWriter<File>>) -> io::Result<()> {
    w.into_inner().map_err(|e| e.into_error())?.flush()
}

pub fn write_field_map(path: &Path, map: &FieldMap) -> io::Result<()> {
    let mut w = csv_writer(path, "field_map")?;
    w.write_record(["x_norm", "tau_norm", "re", "im", "abs"])?;
    for (x, row) in map.x_norm.iter().zip(&map.rows) {
        for (t, v) in map.tau_norm.iter().zip(row) {
            w.write_record([num(*x), num(*t), num(v.re), num(v.im), num(v.norm())])?;
        }
    }
    finish(w)
}

/// Spin grating at hand-off for the ray nearest the beam axis.
pub fn write_spin_snapshot(path: &Path, bundle: &RayBundle) -> io::Result<()> {
    let ray = &bundle.results[bundle.results.len() / 2];
    let mut w = csv_writer(path, "spin_snapshot")?;
    w.write_record(["z_norm", "re", "im", "abs"])?;
    let last = (ray.spin_snapshot.len() - 1) as f64;
    for (j, v) in ray.spin_snapshot.iter().enumerate() {
        let z_norm = 2.0 * j as f64 / last - 1.0;
        w.write_record([num(z_norm), num(v.re), num(v.im), num(v.norm())])?;
    }
    finish(w)
}

pub fn metrics_lines(m: &Metrics) -> Vec<(&'static str, f64)> {
    vec![
        ("eta", m.eta),
        ("F_prime", m.f_prime),
        ("t_bar_s", m.t_bar),
        ("direct_overlap", m.direct_overlap),
        ("n_in", m.n_in),
        ("n_out", m.n_out),
        ("centroid_delay_s", m.centroid_delay),
        ("echo_offset_s", m.echo_offset),
        ("rms_width_in_s", m.rms_width_in),
        ("rms_width_out_s", m.rms_width_out),
        ("width_ratio", m.width_ratio),
        ("conservation_residual", m.conservation_residual),
        ("escaped_fraction", m.escaped_fraction),
    ]
}

pub fn write_metrics(path: &Path, m: &Metrics, bundle: &RayBundle) -> io::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "# anglescan metrics v{SCHEMA_VERSION}")?;
    for (k, v) in metrics_lines(m) {
        writeln!(f, "{k} = {}", num(v))?;
    }
    writeln!(f, "rays = {}", bundle.results.len())?;
    for warning in &bundle.warnings {
        writeln!(f, "# warning: {warning}")?;
    }
    f.flush()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_else(|| "nan".into())
}

pub fn write_sweep(path: &Path, points: &[SweepPoint]) -> io::Result<()> {
    let mut w = csv_writer(path, "sweep")?;
    w.write_record(["theta0", "eta", "F_prime", "t_bar", "predicted_td_at_R", "predicted_tbr"])?;
    for p in points {
        w.write_record([
            num(p.theta0),
            num(p.metrics.eta),
            num(p.metrics.f_prime),
            num(p.metrics.t_bar),
            opt(p.predicted_td_at_r),
            opt(p.predicted_tbr),
        ])?;
    }
    finish(w)
}

pub fn write_text(path: &Path, text: &str) -> io::Result<()> {
    std::fs::write(path, text)
}
