//! Physical parameters, scan geometry, pulse shapes and the detuning field.
//!
//! Units are SI throughout: lengths in m, times in s, angular rates in rad/s.
//! The coupling enters only through the product `|g|^2 N` (1/(s m)); after
//! symmetrizing the spin variable the dynamics depend on `kappa = sqrt(|g|^2 N)`.
//!
//! Pulse convention: `PulseSpec::duration` (the pulse length `dt`) is the
//! 1/e half-width of the Gaussian *amplitude*, so
//! `A(t) = peak * exp(-(t - t_c)^2 / dt^2)`. The equivalent intensity FWHM is
//! `dt * sqrt(2 ln 2)` and is reported alongside every run.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::record::TimeRecord;

/// Minimum fraction of pulse energy that must fall inside the storage window.
pub const MIN_WINDOW_ENERGY_FRACTION: f64 = 0.99;

fn require(name: &'static str, ok: bool, reason: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: reason.into() })
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    require(name, v.is_finite(), format!("must be finite, got {v}"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    coupling_density: f64,
    gamma: f64,
    delta: f64,
    storage_gap: f64,
}

impl MediumParams {
    /// `coupling_density` is `|g|^2 N` in 1/(s m), `gamma` the spin dephasing
    /// rate in 1/s, `delta` the two-photon detuning in rad/s and `storage_gap`
    /// the dead time between storage and retrieval in s.
    pub fn new(coupling_density: f64, gamma: f64, delta: f64, storage_gap: f64) -> Result<Self> {
        for (name, v) in [
            ("coupling_density", coupling_density),
            ("gamma", gamma),
            ("delta", delta),
            ("storage_gap", storage_gap),
        ] {
            finite(name, v)?;
        }
        require("coupling_density", coupling_density >= 0.0, "must be >= 0")?;
        require("gamma", gamma >= 0.0, "must be >= 0")?;
        require("storage_gap", storage_gap >= 0.0, "must be >= 0")?;
        Ok(Self { coupling_density, gamma, delta, storage_gap })
    }

    pub fn coupling_density(&self) -> f64 {
        self.coupling_density
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn storage_gap(&self) -> f64 {
        self.storage_gap
    }

    /// Symmetrized coupling `sqrt(|g|^2 N)`.
    pub fn kappa(&self) -> f64 {
        self.coupling_density.sqrt()
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.coupling_density, gamma, self.delta, self.storage_gap)
    }

    pub fn with_coupling_density(self, coupling_density: f64) -> Result<Self> {
        Self::new(coupling_density, self.gamma, self.delta, self.storage_gap)
    }

    pub fn with_storage_gap(self, storage_gap: f64) -> Result<Self> {
        Self::new(self.coupling_density, self.gamma, self.delta, storage_gap)
    }
}

/// Sample dimensions and wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    length: f64,
    lx: f64,
    ly: f64,
    half_width: f64,
    lambda_s: f64,
    lambda_c: f64,
}

impl Geometry {
    /// `half_width` is the transverse half-width `R` of the excitation.
    pub fn new(
        length: f64,
        lx: f64,
        ly: f64,
        half_width: f64,
        lambda_s: f64,
        lambda_c: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("L", length),
            ("Lx", lx),
            ("Ly", ly),
            ("R", half_width),
            ("lambda_s", lambda_s),
            ("lambda_c", lambda_c),
        ] {
            finite(name, v)?;
            require(name, v > 0.0, "must be > 0")?;
        }
        require("R", 2.0 * half_width <= lx, "2R must not exceed Lx")?;
        Ok(Self { length, lx, ly, half_width, lambda_s, lambda_c })
    }

    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn lambda_s(&self) -> f64 {
        self.lambda_s
    }
    pub fn lambda_c(&self) -> f64 {
        self.lambda_c
    }

    /// Control wave number `2 pi / lambda_c`.
    pub fn k_c(&self) -> f64 {
        2.0 * PI / self.lambda_c
    }

    /// Smallest average angle that keeps `z_p(±R)` inside the medium.
    pub fn theta_g(&self) -> f64 {
        (2.0 * self.half_width / self.length).atan()
    }

    /// Largest half rotation angle for which transverse spreading stays negligible.
    pub fn delta_theta_max(&self) -> f64 {
        0.5 * (self.lambda_s / self.length).sqrt()
    }

    pub fn fresnel_number(&self) -> f64 {
        self.half_width * self.half_width / (self.lambda_s * self.length)
    }

    pub fn diffraction_angle(&self) -> f64 {
        self.lambda_s / self.half_width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RetrievalMode {
    Forward,
    Backward,
}

impl std::str::FromStr for RetrievalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Self::Forward),
            "backward" => Ok(Self::Backward),
            other => Err(Error::Config(format!(
                "retrieval must be `forward` or `backward`, got `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for RetrievalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Forward => "forward",
            Self::Backward => "backward",
        })
    }
}

/// Sign applied to the detuning field; storage runs with `Plus`, the
/// reversed scan with `Minus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseSign {
    Plus,
    Minus,
}

impl PhaseSign {
    pub fn value(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Self::Plus => Self::Minus,
            Self::Minus => Self::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanProtocol {
    theta0: f64,
    delta_theta: f64,
    duration: f64,
    x0: f64,
    z0: f64,
    retrieval: RetrievalMode,
    reversal: bool,
    beta: f64,
}

impl ScanProtocol {
    /// Builds a scan sweeping the control by `2 * delta_theta` about `theta0`
    /// in `duration` (= T) seconds. The rotation rate follows as
    /// `beta = 2 * delta_theta * k_c / T`.
    pub fn new(
        theta0: f64,
        delta_theta: f64,
        duration: f64,
        x0: f64,
        z0: f64,
        retrieval: RetrievalMode,
        geom: &Geometry,
    ) -> Result<Self> {
        for (name, v) in [
            ("theta0", theta0),
            ("delta_theta", delta_theta),
            ("T", duration),
            ("x0", x0),
            ("z0", z0),
        ] {
            finite(name, v)?;
        }
        require("theta0", theta0 > 0.0 && theta0 <= FRAC_PI_2 + 1e-12, "must lie in (0, pi/2]")?;
        require("delta_theta", delta_theta > 0.0, "must be > 0")?;
        require("T", duration > 0.0, "must be > 0")?;
        let beta = 2.0 * delta_theta * geom.k_c() / duration;
        Ok(Self { theta0, delta_theta, duration, x0, z0, retrieval, reversal: true, beta })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }
    pub fn delta_theta(&self) -> f64 {
        self.delta_theta
    }
    pub fn duration(&self) -> f64 {
        self.duration
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn z0(&self) -> f64 {
        self.z0
    }
    pub fn retrieval(&self) -> RetrievalMode {
        self.retrieval
    }
    /// Whether retrieval reverses the scan direction (the default).
    pub fn reversal(&self) -> bool {
        self.reversal
    }
    /// Rotation rate of the control wave vector in rad/(m s).
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Longitudinal detuning gradient `beta * sin(theta0)`.
    pub fn beta_z(&self) -> f64 {
        self.beta * self.theta0.sin()
    }

    /// Transverse detuning gradient `beta * cos(theta0)`, exactly zero at `pi/2`.
    pub fn beta_x(&self) -> f64 {
        if self.theta0 == std::f64::consts::FRAC_PI_2 {
            0.0
        } else {
            self.beta * self.theta0.cos()
        }
    }

    pub fn with_retrieval(mut self, retrieval: RetrievalMode) -> Self {
        self.retrieval = retrieval;
        self
    }

    pub fn with_reversal(mut self, reversal: bool) -> Self {
        self.reversal = reversal;
        self
    }

    pub fn with_angles(self, theta0: f64, delta_theta: f64, geom: &Geometry) -> Result<Self> {
        Ok(Self::new(theta0, delta_theta, self.duration, self.x0, self.z0, self.retrieval, geom)?
            .with_reversal(self.reversal))
    }

    /// Detuning sign used while retrieving.
    ///
    /// Forward retrieval reverses the scan. Backward retrieval after spin
    /// conjugation keeps the storage sign: the conjugated spin evolving under
    /// `+detuning` and radiating in `-z` is the exact time reverse of storage.
    pub fn retrieval_sign(&self) -> PhaseSign {
        let base = if self.reversal { PhaseSign::Minus } else { PhaseSign::Plus };
        match self.retrieval {
            RetrievalMode::Forward => base,
            RetrievalMode::Backward => base.flipped(),
        }
    }
}

/// Local two-photon detuning seen by the spin at `(x, z)`:
/// `sign * [delta + beta cos(theta0) (x - x0) - beta sin(theta0) (z - z0)]`.
pub fn detuning(x: f64, z: f64, params: &MediumParams, scan: &ScanProtocol, sign: PhaseSign) -> f64 {
    let offset = params.delta + scan.beta_x() * (x - scan.x0) - scan.beta_z() * (z - scan.z0);
    sign.value() * offset
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptionCenter {
    pub z_p: f64,
    /// `-L/2 < z_p < L/2`.
    pub inside: bool,
}

/// Position where the central signal frequency is resonant for the ray at `x`.
pub fn absorption_center(
    x: f64,
    scan: &ScanProtocol,
    params: &MediumParams,
    geom: &Geometry,
) -> Result<AbsorptionCenter> {
    let bz = scan.beta_z();
    if scan.theta0.sin().abs() < 1e-15 {
        return Err(Error::SingularAngle(scan.theta0));
    }
    let z_p = params.delta / bz + scan.z0 + scan.beta_x() / bz * (x - scan.x0);
    let half = 0.5 * geom.length;
    Ok(AbsorptionCenter { z_p, inside: z_p > -half && z_p < half })
}

/// Residual frequency offset `beta sin(theta0) [z0 - x0 cot(theta0) + delta/(beta sin(theta0))]`.
/// Zero iff the stationary point sits on the line that centers absorption on `(0, 0)`.
pub fn stationary_line_offset(scan: &ScanProtocol, params: &MediumParams) -> f64 {
    scan.beta_z() * scan.z0 - scan.beta_x() * scan.x0 + params.delta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    duration: f64,
    center_time: f64,
    peak: Complex64,
    transverse_halfwidth: f64,
}

impl PulseSpec {
    pub fn new(
        duration: f64,
        center_time: f64,
        peak: Complex64,
        transverse_halfwidth: f64,
    ) -> Result<Self> {
        finite("duration", duration)?;
        finite("center_time", center_time)?;
        finite("transverse_halfwidth", transverse_halfwidth)?;
        require("peak_amplitude", peak.re.is_finite() && peak.im.is_finite(), "must be finite")?;
        require("duration", duration > 0.0, "must be > 0")?;
        require("transverse_halfwidth", transverse_halfwidth > 0.0, "must be > 0")?;
        Ok(Self { duration, center_time, peak, transverse_halfwidth })
    }

    /// Pulse centered in the storage window `(-T, 0)`.
    pub fn centered(duration: f64, window: f64, peak: Complex64, transverse_halfwidth: f64) -> Result<Self> {
        Self::new(duration, -0.5 * window, peak, transverse_halfwidth)
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }
    pub fn center_time(&self) -> f64 {
        self.center_time
    }
    pub fn peak(&self) -> Complex64 {
        self.peak
    }
    pub fn transverse_halfwidth(&self) -> f64 {
        self.transverse_halfwidth
    }

    pub fn with_peak(mut self, peak: Complex64) -> Self {
        self.peak = peak;
        self
    }

    pub fn with_center_time(mut self, center_time: f64) -> Self {
        self.center_time = center_time;
        self
    }

    /// Width parameter of `exp(-(t - t_c)^2 / (2 sigma^2))`.
    pub fn sigma(&self) -> f64 {
        self.duration / std::f64::consts::SQRT_2
    }

    pub fn intensity_fwhm(&self) -> f64 {
        2.0 * self.sigma() * std::f64::consts::LN_2.sqrt()
    }

    pub fn amplitude(&self, t: f64) -> Complex64 {
        let u = (t - self.center_time) / self.sigma();
        self.peak * (-0.5 * u * u).exp()
    }

    /// Fraction of `∫|A|^2` inside `(t_lo, t_hi)`.
    pub fn energy_fraction(&self, t_lo: f64, t_hi: f64) -> f64 {
        let s = self.sigma();
        0.5 * (libm::erf((t_hi - self.center_time) / s) - libm::erf((t_lo - self.center_time) / s))
    }
}

/// Transverse intensity profile `exp(-x^2 / R^2)`.
pub fn transverse_intensity(x: f64, halfwidth: f64) -> f64 {
    (-(x / halfwidth).powi(2)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSettings {
    pub nz: usize,
    pub nt: usize,
    pub nx: usize,
    pub x_extent_factor: f64,
    pub allow_underresolved: bool,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self { nz: 1024, nt: 4096, nx: 65, x_extent_factor: 3.0, allow_underresolved: false }
    }
}

impl GridSettings {
    pub fn with_resolution(mut self, nz: usize, nt: usize, nx: usize) -> Self {
        self.nz = nz;
        self.nt = nt;
        self.nx = nx;
        self
    }

    pub fn underresolved(mut self) -> Self {
        self.allow_underresolved = true;
        self
    }

    /// Halves the z and tau spacings.
    pub fn refined(mut self) -> Self {
        self.nz = 2 * (self.nz - 1) + 1;
        self.nt *= 2;
        self
    }
}

/// Discretized `(z, tau, x)` lattice.
///
/// `nz` nodes span `[-L/2, L/2]` inclusive. `nt` steps span the storage and
/// retrieval windows, `nt / 2` each; the tau nodes of either window therefore
/// number `nt / 2 + 1`. Rays sit at midpoints of `nx` uniform cells covering
/// `[-R f, R f]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimGrid {
    nz: usize,
    nt: usize,
    nx: usize,
    length: f64,
    duration: f64,
    dz: f64,
    dtau: f64,
    x_extent: f64,
}

impl SimGrid {
    pub fn build(
        settings: GridSettings,
        geom: &Geometry,
        scan: &ScanProtocol,
        pulse: &PulseSpec,
    ) -> Result<Self> {
        let GridSettings { nz, nt, nx, x_extent_factor, allow_underresolved } = settings;
        require("Nz", nz >= 2, "need at least 2 z nodes")?;
        require("Nt", nt >= 2 && nt % 2 == 0, "must be even and >= 2")?;
        require("Nx", nx >= 1, "need at least one ray")?;
        finite("x_extent_factor", x_extent_factor)?;
        require("x_extent_factor", x_extent_factor > 0.0, "must be > 0")?;
        let length = geom.length();
        let duration = scan.duration();
        let grid = Self {
            nz,
            nt,
            nx,
            length,
            duration,
            dz: length / (nz - 1) as f64,
            dtau: 2.0 * duration / nt as f64,
            x_extent: x_extent_factor * geom.half_width(),
        };
        require(
            "x_extent_factor",
            grid.x_extent <= 0.5 * geom.lx() * (1.0 + 1e-12),
            "ray span exceeds the sample cross-section",
        )?;
        if !allow_underresolved {
            let phase = grid.spin_phase_per_cell(scan);
            if phase >= FRAC_PI_4 {
                return Err(Error::UnderResolved(format!(
                    "beta sin(theta0) T dz = {phase:.4} rad must stay below pi/4 (raise Nz)"
                )));
            }
            if grid.dtau > pulse.duration() / 20.0 {
                return Err(Error::UnderResolved(format!(
                    "dtau = {:e} s exceeds dt/20 = {:e} s (raise Nt)",
                    grid.dtau,
                    pulse.duration() / 20.0
                )));
            }
        }
        Ok(grid)
    }

    pub fn nz(&self) -> usize {
        self.nz
    }
    pub fn nt(&self) -> usize {
        self.nt
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn dz(&self) -> f64 {
        self.dz
    }
    pub fn dtau(&self) -> f64 {
        self.dtau
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn steps_per_phase(&self) -> usize {
        self.nt / 2
    }

    pub fn z(&self, j: usize) -> f64 {
        if j + 1 == self.nz {
            0.5 * self.length
        } else {
            -0.5 * self.length + j as f64 * self.dz
        }
    }

    pub fn z_nodes(&self) -> Vec<f64> {
        (0..self.nz).map(|j| self.z(j)).collect()
    }

    /// k-th tau node of the storage window, `-T + k dtau`.
    pub fn storage_tau(&self, k: usize) -> f64 {
        -self.duration + k as f64 * self.dtau
    }

    pub fn x_samples(&self) -> Vec<f64> {
        let cell = 2.0 * self.x_extent / self.nx as f64;
        (0..self.nx).map(|i| -self.x_extent + (i as f64 + 0.5) * cell).collect()
    }

    pub fn x_extent(&self) -> f64 {
        self.x_extent
    }

    /// Largest spin-wave phase advance across one z cell at the end of storage.
    pub fn spin_phase_per_cell(&self, scan: &ScanProtocol) -> f64 {
        scan.beta_z().abs() * self.duration * self.dz
    }
}

/// Samples the input pulse on the storage-window tau nodes.
pub fn sample_pulse(spec: &PulseSpec, grid: &SimGrid) -> Result<TimeRecord> {
    let fraction = spec.energy_fraction(-grid.duration(), 0.0);
    if fraction < MIN_WINDOW_ENERGY_FRACTION {
        return Err(Error::PulseEscapesWindow { fraction_inside: fraction });
    }
    let n = grid.steps_per_phase() + 1;
    let values = (0..n).map(|k| spec.amplitude(grid.storage_tau(k))).collect();
    Ok(TimeRecord::new(-grid.duration(), grid.dtau(), values))
}
