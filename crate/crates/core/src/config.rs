//! Plain-text run configuration: `key = value` lines with `#` comments.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;

use crate::domain::{GridSettings, Geometry, MediumParams, PulseSpec, RetrievalMode, ScanProtocol, SimGrid};
use crate::error::{Error, Result};

pub const REQUIRED_KEYS: &[&str] = &[
    "lambda_s_nm",
    "lambda_c_nm",
    "g2N_per_s_m",
    "T_ns",
    "dt_over_T",
    "theta0_rad",
    "delta_theta_rad",
    "L_cm",
    "Lx_cm",
    "two_R_over_Lx",
];

pub const OPTIONAL_KEYS: &[&str] = &[
    "gamma_per_s",
    "delta_rad_per_s",
    "x0_m",
    "z0_m",
    "retrieval",
    "storage_gap_ns",
    "Nz",
    "Nt",
    "Nx",
    "scan_reversal",
    "amplitude",
    "amplitude_phase_rad",
    "center_over_T",
    "Ly_cm",
    "x_extent_factor",
    "allow_underresolved",
];

/// A validated configuration, ready to build grids and run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: MediumParams,
    pub scan: ScanProtocol,
    pub geom: Geometry,
    pub pulse: PulseSpec,
    pub grid: GridSettings,
}

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn num(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("`{key}`: `{v}` is not a number")))
            })
            .transpose()
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.num(key)?.ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    fn or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.num(key)?.unwrap_or(default))
    }

    fn count(&self, key: &str, default: usize) -> Result<usize> {
        self.raw(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::Config(format!("`{key}`: `{v}` is not a non-negative integer")))
            })
            .transpose()
            .map(|v| v.unwrap_or(default))
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(Error::Config(format!("`{key}`: expected true or false, got `{v}`"))),
        }
    }
}

fn parse_entries(text: &str) -> Result<Entries> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !REQUIRED_KEYS.contains(&key) && !OPTIONAL_KEYS.contains(&key) {
            return Err(Error::Config(format!("line {}: unknown key `{key}`", n + 1)));
        }
        if map.insert(key.to_owned(), value.to_owned()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{key}`", n + 1)));
        }
    }
    Ok(Entries(map))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let e = parse_entries(text)?;
        const NM: f64 = 1e-9;
        const NS: f64 = 1e-9;
        const CM: f64 = 1e-2;

        let lx = e.required("Lx_cm")? * CM;
        let half_width = 0.5 * e.required("two_R_over_Lx")? * lx;
        let geom = Geometry::new(
            e.required("L_cm")? * CM,
            lx,
            e.or("Ly_cm", lx / CM)? * CM,
            half_width,
            e.required("lambda_s_nm")? * NM,
            e.required("lambda_c_nm")? * NM,
        )?;
        let params = MediumParams::new(
            e.required("g2N_per_s_m")?,
            e.or("gamma_per_s", 0.0)?,
            e.or("delta_rad_per_s", 0.0)?,
            e.or("storage_gap_ns", 0.0)? * NS,
        )?;
        let retrieval = match e.raw("retrieval") {
            None => RetrievalMode::Forward,
            Some(v) => v.parse()?,
        };
        let duration = e.required("T_ns")? * NS;
        let scan = ScanProtocol::new(
            e.required("theta0_rad")?,
            e.required("delta_theta_rad")?,
            duration,
            e.or("x0_m", 0.0)?,
            e.or("z0_m", 0.0)?,
            retrieval,
            &geom,
        )?
        .with_reversal(e.flag("scan_reversal", true)?);
        let peak = Complex64::from_polar(e.or("amplitude", 1.0)?, e.or("amplitude_phase_rad", 0.0)?);
        let pulse = PulseSpec::new(
            e.required("dt_over_T")? * duration,
            e.or("center_over_T", -0.5)? * duration,
            peak,
            half_width,
        )?;
        let defaults = GridSettings::default();
        let mut grid = GridSettings {
            nz: e.count("Nz", defaults.nz)?,
            nt: e.count("Nt", defaults.nt)?,
            nx: e.count("Nx", defaults.nx)?,
            x_extent_factor: e.or("x_extent_factor", defaults.x_extent_factor)?,
            allow_underresolved: false,
        };
        if e.flag("allow_underresolved", false)? {
            grid = grid.underresolved();
        }
        Ok(Self { params, scan, geom, pulse, grid })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Replaces any grid counts that are `Some`.
    pub fn with_grid_overrides(mut self, nz: Option<usize>, nt: Option<usize>, nx: Option<usize>) -> Self {
        self.grid.nz = nz.unwrap_or(self.grid.nz);
        self.grid.nt = nt.unwrap_or(self.grid.nt);
        self.grid.nx = nx.unwrap_or(self.grid.nx);
        self
    }

    pub fn build_grid(&self) -> Result<SimGrid> {
        SimGrid::build(self.grid, &self.geom, &self.scan, &self.pulse)
    }
}
