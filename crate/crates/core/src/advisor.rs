//! Operating-condition report and analytic delay/broadening estimates.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::domain::{absorption_center, Geometry, MediumParams, PulseSpec, ScanProtocol};
use crate::error::{Error, Result};

/// Factor used for `>>` and `<<` comparisons.
pub const MUCH_FACTOR: f64 = 10.0;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const REPORT_HEADER: &str = "# anglescan condition report v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "pass",
            Self::Warn => "warn",
            Self::Fail => "fail",
        })
    }
}

impl FromStr for Status {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pass" => Ok(Self::Pass),
            "warn" => Ok(Self::Warn),
            "fail" => Ok(Self::Fail),
            other => Err(Error::Config(format!("unknown status `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Greater,
    Less,
    MuchGreater,
    MuchLess,
}

impl Comparator {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Self::Greater => lhs > rhs,
            Self::Less => lhs < rhs,
            Self::MuchGreater => lhs >= MUCH_FACTOR * rhs,
            Self::MuchLess => MUCH_FACTOR * lhs <= rhs,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Greater => ">",
            Self::Less => "<",
            Self::MuchGreater => ">>",
            Self::MuchLess => "<<",
        })
    }
}

impl FromStr for Comparator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            ">" => Ok(Self::Greater),
            "<" => Ok(Self::Less),
            ">>" => Ok(Self::MuchGreater),
            "<<" => Ok(Self::MuchLess),
            other => Err(Error::Config(format!("unknown comparator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionEntry {
    pub name: String,
    pub lhs: f64,
    pub cmp: Comparator,
    pub rhs: f64,
    pub status: Status,
    /// The inequality in symbolic form.
    pub anchor: String,
}

impl ConditionEntry {
    fn evaluate(name: &str, lhs: f64, cmp: Comparator, rhs: f64, on_violation: Status, anchor: &str) -> Self {
        let status = if cmp.holds(lhs, rhs) { Status::Pass } else { on_violation };
        Self { name: name.into(), lhs, cmp, rhs, status, anchor: anchor.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
    /// Derived quantities shown alongside the inequalities.
    pub quantities: Vec<(String, f64)>,
    /// Assumptions that are not checked.
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn summary(&self) -> Status {
        let any = |s| self.entries.iter().any(|e| e.status == s);
        if any(Status::Fail) {
            Status::Fail
        } else if any(Status::Warn) {
            Status::Warn
        } else {
            Status::Pass
        }
    }

    pub fn entry(&self, name: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn quantity(&self, name: &str) -> Option<f64> {
        self.quantities.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn count(&self, status: Status) -> usize {
        self.entries.iter().filter(|e| e.status == status).count()
    }

    /// Human-readable table with 9 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "condition report: {}", self.summary());
        for e in &self.entries {
            let _ = writeln!(
                out,
                "  [{}] {:<24} {:>16.8e} {:<2} {:<16.8e}  {}",
                e.status, e.name, e.lhs, e.cmp, e.rhs, e.anchor
            );
        }
        if !self.quantities.is_empty() {
            let _ = writeln!(out, "derived quantities:");
            for (n, v) in &self.quantities {
                let _ = writeln!(out, "  {n:<26} {v:.8e}");
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }

    /// Lossless key/value serialization, one item per line.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{REPORT_HEADER}");
        let _ = writeln!(out, "summary={}", self.summary());
        for e in &self.entries {
            let _ = writeln!(
                out,
                "entry name={}; lhs={:e}; cmp={}; rhs={:e}; status={}; anchor={}",
                e.name, e.lhs, e.cmp, e.rhs, e.status, e.anchor
            );
        }
        for (n, v) in &self.quantities {
            let _ = writeln!(out, "quantity name={n}; value={v:e}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "note {n}");
        }
        out
    }

    pub fn parse_kv(text: &str) -> Result<Self> {
        let bad = |line: &str| Error::Config(format!("malformed report line `{line}`"));
        let mut lines = text.lines();
        if lines.next() != Some(REPORT_HEADER) {
            return Err(Error::Config("missing report header".into()));
        }
        let mut report = Self { entries: Vec::new(), quantities: Vec::new(), notes: Vec::new() };
        let mut summary = None;
        for line in lines {
            if let Some(s) = line.strip_prefix("summary=") {
                summary = Some(s.parse::<Status>()?);
            } else if let Some(rest) = line.strip_prefix("entry ") {
                let f = fields(rest, 6).ok_or_else(|| bad(line))?;
                let num = |s: &str| s.parse::<f64>().map_err(|_| bad(line));
                report.entries.push(ConditionEntry {
                    name: value(&f[0], "name").ok_or_else(|| bad(line))?.into(),
                    lhs: num(value(&f[1], "lhs").ok_or_else(|| bad(line))?)?,
                    cmp: value(&f[2], "cmp").ok_or_else(|| bad(line))?.parse()?,
                    rhs: num(value(&f[3], "rhs").ok_or_else(|| bad(line))?)?,
                    status: value(&f[4], "status").ok_or_else(|| bad(line))?.parse()?,
                    anchor: value(&f[5], "anchor").ok_or_else(|| bad(line))?.into(),
                });
            } else if let Some(rest) = line.strip_prefix("quantity ") {
                let f = fields(rest, 2).ok_or_else(|| bad(line))?;
                let name = value(&f[0], "name").ok_or_else(|| bad(line))?;
                let v = value(&f[1], "value").ok_or_else(|| bad(line))?;
                report.quantities.push((name.into(), v.parse().map_err(|_| bad(line))?));
            } else if let Some(rest) = line.strip_prefix("note ") {
                report.notes.push(rest.into());
            } else if !line.trim().is_empty() {
                return Err(bad(line));
            }
        }
        if summary != Some(report.summary()) {
            return Err(Error::Config("summary does not match entries".into()));
        }
        Ok(report)
    }
}

fn fields(s: &str, n: usize) -> Option<Vec<String>> {
    let f: Vec<String> = s.splitn(n, "; ").map(str::to_owned).collect();
    (f.len() == n).then_some(f)
}

fn value<'a>(field: &'a str, key: &str) -> Option<&'a str> {
    field.strip_prefix(key)?.strip_prefix('=')
}

/// `cot(theta)`, exactly zero at `pi/2`.
fn cot(theta: f64) -> f64 {
    if theta == std::f64::consts::FRAC_PI_2 {
        0.0
    } else {
        theta.cos() / theta.sin()
    }
}

/// Slow-light regime indicator `4 c |g|^2 N / (beta^2 L^2 sin^2(theta0))`.
pub fn slow_light_ratio(params: &MediumParams, scan: &ScanProtocol, geom: &Geometry) -> f64 {
    let bz = scan.beta_z();
    4.0 * SPEED_OF_LIGHT * params.coupling_density() / (bz * bz * geom.length().powi(2))
}

/// Optical density `2 pi |g|^2 N / (beta sin(theta0))`.
pub fn optical_density(params: &MediumParams, scan: &ScanProtocol) -> f64 {
    2.0 * std::f64::consts::PI * params.coupling_density() / scan.beta_z()
}

/// Single-transverse-mode bound `sqrt((2T/dt)(lambda_c/Lx))`.
pub fn single_mode_bound(scan: &ScanProtocol, geom: &Geometry, pulse: &PulseSpec) -> f64 {
    (2.0 * scan.duration() / pulse.duration() * geom.lambda_c() / geom.lx()).sqrt()
}

pub fn check_conditions(
    params: &MediumParams,
    scan: &ScanProtocol,
    geom: &Geometry,
    pulse: &PulseSpec,
) -> ConditionReport {
    use Comparator::*;
    let two_dtheta = 2.0 * scan.delta_theta();
    let sin0 = scan.theta0().sin();
    let window = scan.duration() / pulse.duration() * geom.lambda_c() / geom.length();
    let absorption = scan.duration() * geom.lambda_c() * params.coupling_density();
    let r = geom.half_width();
    let zp_max = [-r, r]
        .iter()
        .filter_map(|&x| absorption_center(x, scan, params, geom).ok())
        .map(|c| c.z_p.abs())
        .fold(0.0, f64::max);
    let at_normal = scan.theta0() == std::f64::consts::FRAC_PI_2;

    let entries = vec![
        ConditionEntry::evaluate("window", two_dtheta, Greater, window, Status::Fail, "2 dtheta > (T/dt)(lambda_c/L)"),
        ConditionEntry::evaluate("absorption", two_dtheta, Less, absorption, Status::Fail, "2 dtheta < T lambda_c |g|^2 N"),
        ConditionEntry::evaluate(
            "ray_window",
            two_dtheta * sin0,
            Greater,
            window,
            Status::Fail,
            "2 dtheta sin(theta0) > (T/dt)(lambda_c/L)",
        ),
        ConditionEntry::evaluate(
            "ray_absorption",
            two_dtheta * sin0,
            Less,
            absorption,
            Status::Fail,
            "2 dtheta sin(theta0) < T lambda_c |g|^2 N",
        ),
        ConditionEntry::evaluate("zp_inside", zp_max, Less, 0.5 * geom.length(), Status::Fail, "max |z_p(x = +-R)| < L/2"),
        ConditionEntry::evaluate("theta", scan.theta0(), Greater, geom.theta_g(), Status::Fail, "theta0 > theta_g = arctan(2R/L)"),
        ConditionEntry::evaluate(
            "dtheta_max",
            scan.delta_theta(),
            MuchLess,
            geom.delta_theta_max(),
            Status::Warn,
            "dtheta << dtheta_max = sqrt(lambda_s/L)/2 (sufficient, not necessary)",
        ),
        ConditionEntry::evaluate(
            "fresnel",
            geom.fresnel_number(),
            MuchGreater,
            1.0,
            Status::Warn,
            "F = R^2/(lambda_s L) >> 1 (sufficient for ray optics)",
        ),
        ConditionEntry::evaluate(
            "single_transverse_mode",
            scan.delta_theta(),
            Less,
            single_mode_bound(scan, geom, pulse),
            if at_normal { Status::Fail } else { Status::Warn },
            "dtheta < sqrt((2T/dt)(lambda_c/Lx)) (binding at theta0 = pi/2)",
        ),
        ConditionEntry::evaluate(
            "optical_density",
            optical_density(params, scan),
            Greater,
            1.0,
            Status::Fail,
            "2 pi |g|^2 N / (beta sin(theta0)) > 1",
        ),
        ConditionEntry::evaluate(
            "slow_light_regime",
            slow_light_ratio(params, scan, geom),
            MuchGreater,
            1.0,
            Status::Warn,
            "4 c |g|^2 N / (beta^2 L^2 sin^2(theta0)) >> 1 (validity of delay estimates)",
        ),
    ];

    let quantities = vec![
        ("beta_rad_per_m_s".into(), scan.beta()),
        ("kappa_per_sqrt_s_m".into(), params.kappa()),
        ("theta_g_rad".into(), geom.theta_g()),
        ("dtheta_max_rad".into(), geom.delta_theta_max()),
        ("fresnel_number".into(), geom.fresnel_number()),
        ("pulse_amplitude_halfwidth_s".into(), pulse.duration()),
        ("pulse_intensity_fwhm_s".into(), pulse.intensity_fwhm()),
    ];
    let notes = vec![
        "storage phase factor: unchecked assumption (no criterion available)".into(),
        "pulse duration dt is the 1/e amplitude half-width".into(),
    ];
    ConditionReport { entries, quantities, notes }
}

/// Order-of-magnitude estimate with its regime-validity flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Slow-light ratio exceeds [`MUCH_FACTOR`].
    pub valid: bool,
}

fn delay_prefactor(params: &MediumParams, scan: &ScanProtocol) -> f64 {
    let bz = scan.beta_z();
    params.coupling_density() / (bz * bz)
}

/// Forward-retrieval delay for a polariton frozen at `z_p`.
pub fn delay_for_center(z_p: f64, params: &MediumParams, scan: &ScanProtocol, geom: &Geometry) -> Result<Estimate> {
    let half = 0.5 * geom.length();
    if !(z_p > -half && z_p < half) {
        return Err(Error::OutsideMedium { z_p, half_length: half });
    }
    let k = delay_prefactor(params, scan);
    Ok(Estimate {
        value: k * (1.0 / (half + z_p) - 1.0 / (half - z_p)),
        valid: slow_light_ratio(params, scan, geom) >= MUCH_FACTOR,
    })
}

/// Forward-retrieval delay of the ray at `x`.
pub fn predict_delay(x: f64, params: &MediumParams, scan: &ScanProtocol, geom: &Geometry) -> Result<Estimate> {
    let c = absorption_center(x, scan, params, geom)?;
    delay_for_center(c.z_p, params, scan, geom)
}

/// Forward-retrieval temporal broadening across the `+-R` excitation.
pub fn predict_broadening(params: &MediumParams, scan: &ScanProtocol, geom: &Geometry) -> Result<Estimate> {
    let theta0 = scan.theta0();
    if theta0 <= geom.theta_g() {
        return Err(Error::Domain(format!(
            "broadening needs theta0 > theta_g ({theta0} <= {})",
            geom.theta_g()
        )));
    }
    let a = geom.half_width() * cot(theta0);
    let half = 0.5 * geom.length();
    Ok(Estimate {
        value: delay_prefactor(params, scan) * 4.0 * a / (half * half - a * a),
        valid: slow_light_ratio(params, scan, geom) >= MUCH_FACTOR,
    })
}
