//! Single-ray integrator for the co-moving-frame signal/spin equations
//!
//! ```text
//! dA/dz   = ±kappa S                     (+ forward, - backward propagation)
//! dS/dtau = (-gamma + i D(x, z)) S - kappa A
//! ```
//!
//! Time stepping is tau-outer. Over one step the spin's local linear part is
//! integrated exactly (`exp(lambda dtau)`) and the field source is taken by
//! the trapezoidal rule. The field follows from trapezoidal z-quadrature of
//! `kappa S` starting at the entry face. The two rules couple the new field and
//! spin implicitly; substituting the spin update into the quadrature turns the
//! implicit system into a two-term recurrence along z, which is solved exactly
//! in one sweep. [`crate::oracle::dense_oracle`] assembles the very same
//! equations as one linear system.

use num_complex::Complex64;

use crate::domain::{
    detuning, sample_pulse, MediumParams, PhaseSign, PulseSpec, RetrievalMode, ScanProtocol,
    SimGrid,
};
use crate::error::{Error, Result};
use crate::metrics;
use crate::record::TimeRecord;

/// Values beyond this multiple of the reference amplitude abort a run.
pub const BLOWUP_FACTOR: f64 = 1e6;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Storage,
    Gap,
    Retrieval,
}

/// Field and symmetrized spin on the z grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct RayState {
    pub a: Vec<Complex64>,
    pub s: Vec<Complex64>,
    pub tau: f64,
    pub phase: Phase,
    /// Set by [`conjugate_spin`]; retrieval then radiates in `-z`.
    pub conjugated: bool,
}

impl RayState {
    pub fn empty(nz: usize, tau: f64) -> Self {
        Self { a: vec![ZERO; nz], s: vec![ZERO; nz], tau, phase: Phase::Storage, conjugated: false }
    }
}

/// Trapezoidal `∫|S|^2 dz`.
pub fn spin_energy(s: &[Complex64], dz: f64) -> f64 {
    let n = s.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = s.iter().map(|v| v.norm_sqr()).sum();
    dz * (inner - 0.5 * (s[0].norm_sqr() + s[n - 1].norm_sqr()))
}

/// Direction of the z sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Entry face at `-L/2`.
    Forward,
    /// Entry face at `+L/2`.
    Backward,
}

/// Per-phase update coefficients for one ray.
#[derive(Debug, Clone)]
pub struct Stepper {
    decay: Vec<Complex64>,
    c: f64,
    h: f64,
    orientation: Orientation,
    dtau: f64,
    z: Vec<f64>,
}

impl Stepper {
    pub fn new(
        x: f64,
        params: &MediumParams,
        scan: &ScanProtocol,
        grid: &SimGrid,
        sign: PhaseSign,
        orientation: Orientation,
    ) -> Self {
        let dtau = grid.dtau();
        let z = grid.z_nodes();
        let decay = z
            .iter()
            .map(|&zj| {
                let lambda = Complex64::new(-params.gamma(), detuning(x, zj, params, scan, sign));
                (lambda * dtau).exp()
            })
            .collect();
        let kappa = params.kappa();
        Self {
            decay,
            c: 0.5 * kappa * dtau,
            h: 0.5 * kappa * grid.dz(),
            orientation,
            dtau,
            z,
        }
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    fn index(&self, k: usize) -> usize {
        match self.orientation {
            Orientation::Forward => k,
            Orientation::Backward => self.z.len() - 1 - k,
        }
    }

    /// Index of the exit face.
    pub fn exit(&self) -> usize {
        self.index(self.z.len() - 1)
    }

    /// Recomputes the field from the current spin with `A = boundary` at the entry face.
    pub fn settle(&self, state: &mut RayState, boundary: Complex64) {
        let n = self.z.len();
        let first = self.index(0);
        state.a[first] = boundary;
        for k in 1..n {
            let (jp, j) = (self.index(k - 1), self.index(k));
            state.a[j] = state.a[jp] + self.h * (state.s[jp] + state.s[j]);
        }
    }

    /// Advances `state` by one tau step with entry-face value `boundary` at the new time.
    pub fn step(&self, state: &mut RayState, boundary: Complex64, limit: &BlowupLimit) -> Result<()> {
        let n = self.z.len();
        let (c, h) = (self.c, self.h);
        let hc = h * c;
        let inv = 1.0 / (1.0 + hc);
        let (m1, m2) = ((1.0 - hc) * inv, h * inv);

        // s holds the explicit part P = e^{lambda dtau}(S - c A) until the new A is known.
        for ((s, a), e) in state.s.iter_mut().zip(&state.a).zip(&self.decay) {
            *s = e * (*s - c * a);
        }
        let first = self.index(0);
        state.a[first] = boundary;
        for k in 1..n {
            let (jp, j) = (self.index(k - 1), self.index(k));
            state.a[j] = m1 * state.a[jp] + m2 * (state.s[jp] + state.s[j]);
            state.s[jp] -= c * state.a[jp];
        }
        let last = self.index(n - 1);
        state.s[last] -= c * state.a[last];
        state.tau += self.dtau;
        limit.check(state, &self.z)
    }
}

/// Abort threshold for runaway values.
#[derive(Debug, Clone, Copy)]
pub struct BlowupLimit {
    field: f64,
    spin: f64,
}

impl BlowupLimit {
    /// `reference` is the largest expected field amplitude; spin values are
    /// compared after scaling by `kappa L`, which maps a spin grating onto the
    /// field it radiates.
    pub fn new(reference: f64, kappa_length: f64) -> Self {
        let field = if reference > 0.0 { BLOWUP_FACTOR * reference } else { f64::INFINITY };
        let spin = if kappa_length > 0.0 { field / kappa_length } else { f64::INFINITY };
        Self { field, spin }
    }

    fn check(&self, state: &RayState, z: &[f64]) -> Result<()> {
        let bad = |v: &Complex64, lim: f64| !(v.re.is_finite() && v.im.is_finite()) || v.norm() > lim;
        let first_a = state.a.iter().position(|v| bad(v, self.field));
        let first_s = state.s.iter().position(|v| bad(v, self.spin));
        match first_a.into_iter().chain(first_s).min() {
            Some(j) => Err(Error::NumericalBlowup { tau: state.tau, z: z[j] }),
            None => Ok(()),
        }
    }
}

/// Everything needed to push one ray through the protocol.
#[derive(Debug, Clone)]
pub struct RayContext {
    pub x: f64,
    storage: Stepper,
    retrieval: Stepper,
    limit: BlowupLimit,
    mode: RetrievalMode,
}

impl RayContext {
    pub fn new(
        x: f64,
        params: &MediumParams,
        scan: &ScanProtocol,
        grid: &SimGrid,
        reference_amplitude: f64,
    ) -> Self {
        let orientation = match scan.retrieval() {
            RetrievalMode::Forward => Orientation::Forward,
            RetrievalMode::Backward => Orientation::Backward,
        };
        Self {
            x,
            storage: Stepper::new(x, params, scan, grid, PhaseSign::Plus, Orientation::Forward),
            retrieval: Stepper::new(x, params, scan, grid, scan.retrieval_sign(), orientation),
            limit: BlowupLimit::new(reference_amplitude, params.kappa() * grid.length()),
            mode: scan.retrieval(),
        }
    }

    pub fn storage_stepper(&self) -> &Stepper {
        &self.storage
    }

    pub fn retrieval_stepper(&self) -> &Stepper {
        &self.retrieval
    }

    /// One storage step; `a_in_next` is the input amplitude at `tau + dtau`.
    pub fn step_storage(&self, state: &mut RayState, a_in_next: Complex64) -> Result<()> {
        if state.phase != Phase::Storage {
            return Err(Error::Domain(format!("step_storage called in {:?} phase", state.phase)));
        }
        self.storage.step(state, a_in_next, &self.limit)
    }

    /// One retrieval step with the scan reversed; the entry face is dark.
    pub fn step_retrieval(&self, state: &mut RayState) -> Result<()> {
        if state.phase != Phase::Retrieval {
            return Err(Error::Domain(format!("step_retrieval called in {:?} phase", state.phase)));
        }
        if (self.mode == RetrievalMode::Backward) != state.conjugated {
            return Err(Error::ModeMismatch);
        }
        self.retrieval.step(state, ZERO, &self.limit)
    }

    /// Switches a gapped state to retrieval and settles its field.
    pub fn begin_retrieval(&self, state: &mut RayState) -> Result<()> {
        if state.phase != Phase::Gap {
            return Err(Error::Domain(format!("retrieval must follow the gap, not {:?}", state.phase)));
        }
        state.phase = Phase::Retrieval;
        state.tau = 0.0;
        self.retrieval.settle(state, ZERO);
        Ok(())
    }
}

/// Ends storage: the spin decays freely for the storage gap and the field,
/// which has left the medium, is cleared.
pub fn apply_gap(state: &mut RayState, params: &MediumParams) {
    let factor = (-params.gamma() * params.storage_gap()).exp();
    if factor != 1.0 {
        state.s.iter_mut().for_each(|v| *v *= factor);
    }
    state.a.iter_mut().for_each(|v| *v = ZERO);
    state.phase = Phase::Gap;
}

/// Conjugates the spin wave ahead of backward retrieval.
pub fn conjugate_spin(state: &mut RayState, mode: RetrievalMode) -> Result<()> {
    if mode != RetrievalMode::Backward {
        return Err(Error::ModeMismatch);
    }
    state.s.iter_mut().for_each(|v| *v = v.conj());
    state.conjugated = !state.conjugated;
    Ok(())
}

/// Energy terms the field records cannot see.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpinLedger {
    /// `∫|S|^2 dz` at the end of storage, before the gap.
    pub handoff: f64,
    /// Remaining spin energy after retrieval.
    pub remaining: f64,
    /// `2 gamma ∫∫|S|^2 dz dtau` over storage and retrieval.
    pub dissipated: f64,
    /// Lost to free decay during the gap.
    pub gap_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub x: f64,
    pub mode: RetrievalMode,
    /// Input at `z = -L/2` over the storage window.
    pub a_in: TimeRecord,
    /// Field leaving `z = +L/2` during storage.
    pub a_trans: TimeRecord,
    /// Retrieved field at the exit face over the retrieval window, tau from 0.
    pub a_out: TimeRecord,
    /// Spin on the z grid at the end of storage.
    pub spin_snapshot: Vec<Complex64>,
    pub spin_final: Vec<Complex64>,
    pub dz: f64,
    pub spin: SpinLedger,
    pub conservation_residual: f64,
}

/// Runs storage, gap and retrieval for the ray at `x`, starting from an empty medium.
pub fn run_ray(
    x: f64,
    params: &MediumParams,
    scan: &ScanProtocol,
    pulse: &PulseSpec,
    grid: &SimGrid,
) -> Result<SimResult> {
    let a_in = sample_pulse(pulse, grid)?;
    run_ray_with_input(x, params, scan, grid, &a_in)
}

/// As [`run_ray`] with an arbitrary sampled input over the storage window.
pub fn run_ray_with_input(
    x: f64,
    params: &MediumParams,
    scan: &ScanProtocol,
    grid: &SimGrid,
    a_in: &TimeRecord,
) -> Result<SimResult> {
    let steps = grid.steps_per_phase();
    if a_in.len() != steps + 1 {
        return Err(Error::Domain(format!(
            "input record has {} samples, grid needs {}",
            a_in.len(),
            steps + 1
        )));
    }
    let ctx = RayContext::new(x, params, scan, grid, a_in.max_abs());
    let (dz, dtau) = (grid.dz(), grid.dtau());
    let two_gamma = 2.0 * params.gamma();
    let mut dissipated = 0.0;

    let mut state = RayState::empty(grid.nz(), -grid.duration());
    ctx.storage.settle(&mut state, a_in.values[0]);
    let exit = ctx.storage.exit();
    let mut trans = Vec::with_capacity(steps + 1);
    trans.push(state.a[exit]);
    let mut e_prev = 0.0;
    for k in 1..=steps {
        ctx.step_storage(&mut state, a_in.values[k])?;
        trans.push(state.a[exit]);
        if two_gamma > 0.0 {
            let e = spin_energy(&state.s, dz);
            dissipated += two_gamma * 0.5 * dtau * (e_prev + e);
            e_prev = e;
        }
    }
    let spin_snapshot = state.s.clone();
    let handoff = spin_energy(&spin_snapshot, dz);

    apply_gap(&mut state, params);
    let gap_loss = handoff * (1.0 - (-2.0 * params.gamma() * params.storage_gap()).exp());
    if scan.retrieval() == RetrievalMode::Backward {
        conjugate_spin(&mut state, RetrievalMode::Backward)?;
    }
    ctx.begin_retrieval(&mut state)?;
    let exit = ctx.retrieval.exit();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state.a[exit]);
    let mut e_prev = spin_energy(&state.s, dz);
    for _ in 1..=steps {
        ctx.step_retrieval(&mut state)?;
        out.push(state.a[exit]);
        if two_gamma > 0.0 {
            let e = spin_energy(&state.s, dz);
            dissipated += two_gamma * 0.5 * dtau * (e_prev + e);
            e_prev = e;
        }
    }

    let mut result = SimResult {
        x,
        mode: scan.retrieval(),
        a_in: a_in.clone(),
        a_trans: TimeRecord::new(a_in.t0, dtau, trans),
        a_out: TimeRecord::new(0.0, dtau, out),
        spin: SpinLedger { handoff, remaining: spin_energy(&state.s, dz), dissipated, gap_loss },
        spin_snapshot,
        spin_final: state.s,
        dz,
        conservation_residual: 0.0,
    };
    result.conservation_residual = metrics::conservation_residual(&result);
    Ok(result)
}
