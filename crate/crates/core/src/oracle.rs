//! Dense direct-solve reference for the stepping scheme.
//!
//! Each protocol phase is assembled as one global linear system over all
//! `(tau_n, z_j)` samples of field and spin, using the discrete relations
//! the stepper implements:
//!
//! ```text
//! A_entry^n = boundary^n
//! A_{j+1}^n - A_j^n = ±h (S_j^n + S_{j+1}^n)                  h = kappa dz / 2
//! S_j^n + c A_j^n = E_j (S_j^{n-1} - c A_j^{n-1})               c = kappa dtau / 2
//! ```
//!
//! with `E_j = exp((-gamma + i D_j) dtau)`, then solved by dense LU. Feasible
//! only on small grids; used by tests and the `oracle` command.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;

use crate::domain::{
    detuning, sample_pulse, MediumParams, PhaseSign, PulseSpec, RetrievalMode, ScanProtocol,
    SimGrid,
};
use crate::error::{Error, Result};
use crate::metrics;
use crate::record::TimeRecord;
use crate::solver::{spin_energy, SimResult, SpinLedger};

/// Largest system assembled for a single phase.
pub const MAX_UNKNOWNS_PER_PHASE: usize = 5000;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

struct PhaseSystem<'a> {
    nz: usize,
    levels: usize,
    decay: Vec<Complex64>,
    c: f64,
    h: f64,
    /// +1 when the field grows along +z, -1 for backward propagation.
    direction: f64,
    entry: usize,
    s_init: &'a [Complex64],
    boundary: &'a [Complex64],
}

struct PhaseSolution {
    /// `a[n][j]`
    a: Vec<Vec<Complex64>>,
    s: Vec<Vec<Complex64>>,
}

impl PhaseSystem<'_> {
    fn unknowns(&self) -> usize {
        2 * self.nz * self.levels
    }

    fn ia(&self, n: usize, j: usize) -> usize {
        2 * (n * self.nz + j)
    }

    fn is(&self, n: usize, j: usize) -> usize {
        2 * (n * self.nz + j) + 1
    }

    fn solve(&self) -> Result<PhaseSolution> {
        let size = self.unknowns();
        let mut m = Mat::<Complex64>::zeros(size, size);
        let mut rhs = Mat::<Complex64>::zeros(size, 1);
        let one = Complex64::new(1.0, 0.0);
        let mut row = 0;
        for n in 0..self.levels {
            m[(row, self.ia(n, self.entry))] = one;
            rhs[(row, 0)] = self.boundary[n];
            row += 1;
            for j in 0..self.nz - 1 {
                m[(row, self.ia(n, j + 1))] += one;
                m[(row, self.ia(n, j))] -= one;
                m[(row, self.is(n, j))] -= Complex64::new(self.direction * self.h, 0.0);
                m[(row, self.is(n, j + 1))] -= Complex64::new(self.direction * self.h, 0.0);
                row += 1;
            }
            for j in 0..self.nz {
                m[(row, self.is(n, j))] = one;
                if n == 0 {
                    rhs[(row, 0)] = self.s_init[j];
                } else {
                    let e = self.decay[j];
                    m[(row, self.ia(n, j))] = Complex64::new(self.c, 0.0);
                    m[(row, self.is(n - 1, j))] = -e;
                    m[(row, self.ia(n - 1, j))] = e * self.c;
                }
                row += 1;
            }
        }
        debug_assert_eq!(row, size);
        let sol = m.partial_piv_lu().solve(&rhs);
        if !(0..size).all(|i| sol[(i, 0)].re.is_finite() && sol[(i, 0)].im.is_finite()) {
            return Err(Error::Domain("dense oracle system is singular".into()));
        }
        let a = (0..self.levels)
            .map(|n| (0..self.nz).map(|j| sol[(self.ia(n, j), 0)]).collect())
            .collect();
        let s = (0..self.levels)
            .map(|n| (0..self.nz).map(|j| sol[(self.is(n, j), 0)]).collect())
            .collect();
        Ok(PhaseSolution { a, s })
    }
}

fn decay_factors(
    x: f64,
    params: &MediumParams,
    scan: &ScanProtocol,
    grid: &SimGrid,
    sign: PhaseSign,
) -> Vec<Complex64> {
    (0..grid.nz())
        .map(|j| {
            let d = detuning(x, grid.z(j), params, scan, sign);
            (Complex64::new(-params.gamma(), d) * grid.dtau()).exp()
        })
        .collect()
}

/// Number of unknowns the oracle would assemble for one phase on `grid`.
pub fn unknowns_per_phase(grid: &SimGrid) -> usize {
    2 * grid.nz() * (grid.steps_per_phase() + 1)
}

/// Solves storage and retrieval for the ray at `x` by dense LU.
pub fn dense_oracle(
    x: f64,
    params: &MediumParams,
    scan: &ScanProtocol,
    pulse: &PulseSpec,
    grid: &SimGrid,
) -> Result<SimResult> {
    let a_in = sample_pulse(pulse, grid)?;
    dense_oracle_with_input(x, params, scan, grid, &a_in)
}

pub fn dense_oracle_with_input(
    x: f64,
    params: &MediumParams,
    scan: &ScanProtocol,
    grid: &SimGrid,
    a_in: &TimeRecord,
) -> Result<SimResult> {
    let needed = unknowns_per_phase(grid);
    if needed > MAX_UNKNOWNS_PER_PHASE {
        return Err(Error::OracleTooLarge { needed, limit: MAX_UNKNOWNS_PER_PHASE });
    }
    let nz = grid.nz();
    let levels = grid.steps_per_phase() + 1;
    if a_in.len() != levels {
        return Err(Error::Domain(format!(
            "input record has {} samples, grid needs {levels}",
            a_in.len()
        )));
    }
    let kappa = params.kappa();
    let (c, h) = (0.5 * kappa * grid.dtau(), 0.5 * kappa * grid.dz());
    let dz = grid.dz();

    let empty = vec![ZERO; nz];
    let storage = PhaseSystem {
        nz,
        levels,
        decay: decay_factors(x, params, scan, grid, PhaseSign::Plus),
        c,
        h,
        direction: 1.0,
        entry: 0,
        s_init: &empty,
        boundary: &a_in.values,
    }
    .solve()?;

    let snapshot = storage.s[levels - 1].clone();
    let handoff = spin_energy(&snapshot, dz);
    let gap = (-params.gamma() * params.storage_gap()).exp();
    let backward = scan.retrieval() == RetrievalMode::Backward;
    let start: Vec<Complex64> = snapshot
        .iter()
        .map(|v| if backward { v.conj() * gap } else { v * gap })
        .collect();
    let dark = vec![ZERO; levels];
    let (direction, entry, exit) = if backward { (-1.0, nz - 1, 0) } else { (1.0, 0, nz - 1) };
    let retrieval = PhaseSystem {
        nz,
        levels,
        decay: decay_factors(x, params, scan, grid, scan.retrieval_sign()),
        c,
        h,
        direction,
        entry,
        s_init: &start,
        boundary: &dark,
    }
    .solve()?;

    let two_gamma = 2.0 * params.gamma();
    let dissipated: f64 = [&storage, &retrieval]
        .iter()
        .map(|phase| {
            let e: Vec<f64> = phase.s.iter().map(|s| spin_energy(s, dz)).collect();
            e.windows(2).map(|w| two_gamma * 0.5 * grid.dtau() * (w[0] + w[1])).sum::<f64>()
        })
        .sum();
    let spin_final = retrieval.s[levels - 1].clone();
    let mut result = SimResult {
        x,
        mode: scan.retrieval(),
        a_in: a_in.clone(),
        a_trans: TimeRecord::new(
            a_in.t0,
            grid.dtau(),
            storage.a.iter().map(|a| a[nz - 1]).collect(),
        ),
        a_out: TimeRecord::new(0.0, grid.dtau(), retrieval.a.iter().map(|a| a[exit]).collect()),
        spin: SpinLedger {
            handoff,
            remaining: spin_energy(&spin_final, dz),
            dissipated,
            gap_loss: handoff * (1.0 - gap * gap),
        },
        spin_snapshot: snapshot,
        spin_final,
        dz,
        conservation_residual: 0.0,
    };
    result.conservation_residual = metrics::conservation_residual(&result);
    Ok(result)
}

/// Largest field discrepancy between two runs over transmitted and retrieved records.
pub fn field_deviation(a: &SimResult, b: &SimResult) -> f64 {
    let diff = |x: &TimeRecord, y: &TimeRecord| {
        x.values.iter().zip(&y.values).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
    };
    diff(&a.a_trans, &b.a_trans).max(diff(&a.a_out, &b.a_out))
}

/// Largest spin discrepancy at hand-off and at the end, scaled by `kappa L`.
pub fn spin_deviation(a: &SimResult, b: &SimResult, kappa_length: f64) -> f64 {
    let diff = |x: &[Complex64], y: &[Complex64]| {
        x.iter().zip(y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
    };
    kappa_length
        * diff(&a.spin_snapshot, &b.spin_snapshot).max(diff(&a.spin_final, &b.spin_final))
}
