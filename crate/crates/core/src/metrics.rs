//! Photon numbers, efficiency, delay-optimized fidelity, pulse moments and
//! the energy bookkeeping residual. All integrals use the trapezoidal rule.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::record::TimeRecord;
use crate::solver::SimResult;

/// Samples whose intensity falls below this fraction of the record peak are
/// skipped by the correlation sums.
const SUPPORT_CUTOFF: f64 = 1e-32;

fn trapezoid_weight(k: usize, n: usize) -> f64 {
    if k == 0 || k + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// `∫|A|^2 dtau` over the record's window.
pub fn photon_number(record: &TimeRecord) -> f64 {
    let n = record.len();
    if n < 2 {
        return 0.0;
    }
    let sum: f64 = record.values.iter().map(|v| v.norm_sqr()).sum();
    record.dt * (sum - 0.5 * (record.values[0].norm_sqr() + record.values[n - 1].norm_sqr()))
}

/// `Σ w_i ∫|A_i|^2 dtau`.
pub fn weighted_photon_number<'a>(records: impl IntoIterator<Item = (f64, &'a TimeRecord)>) -> f64 {
    records.into_iter().map(|(w, r)| w * photon_number(r)).sum()
}

/// One transverse sample entering an aggregate overlap.
#[derive(Debug, Clone, Copy)]
pub struct WeightedPair<'a> {
    pub weight: f64,
    pub a_in: &'a TimeRecord,
    pub a_out: &'a TimeRecord,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fidelity {
    /// Delay-maximized overlap with the time-reversed input.
    pub f_prime: f64,
    /// Delay `t̄` maximizing the overlap of `A_out(t)` with `A_in(t̄ - t)`.
    pub t_bar: f64,
    /// Best overlap of `A_out(t)` with the un-reversed `A_in(t - shift)`.
    pub direct: f64,
    pub direct_shift: f64,
}

fn support(r: &TimeRecord) -> (usize, usize) {
    let peak = r.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let cut = peak * SUPPORT_CUTOFF;
    let lo = r.values.iter().position(|v| v.norm_sqr() > cut).unwrap_or(0);
    let hi = r.values.iter().rposition(|v| v.norm_sqr() > cut).map_or(0, |k| k + 1);
    (lo, hi.max(lo))
}

/// Accumulates `w Σ_m W_m conj(out_m) in_{k(m)}` into `acc[lag]` for every
/// lag with a non-empty overlap; `W_m` is the trapezoid weight of the pair.
fn correlate(pair: &WeightedPair<'_>, reversed: bool, acc: &mut [Complex64]) {
    let (a_in, a_out) = (&pair.a_in.values, &pair.a_out.values);
    let (n_in, n_out) = (a_in.len(), a_out.len());
    let (in_lo, in_hi) = support(pair.a_in);
    let (out_lo, out_hi) = support(pair.a_out);
    let w = pair.weight * pair.a_out.dt;
    for m in out_lo..out_hi {
        let o = a_out[m].conj() * w;
        let wm = trapezoid_weight(m, n_out);
        for k in in_lo..in_hi {
            let lag = if reversed { k + m } else { m + n_in - 1 - k };
            let wt = wm.min(trapezoid_weight(k, n_in));
            acc[lag] += o * a_in[k] * wt;
        }
    }
}

/// Refines the maximum of `y` at `p` by a parabola through its neighbors.
fn refine_peak(y: &[f64], p: usize) -> (f64, f64) {
    if p == 0 || p + 1 >= y.len() {
        return (0.0, y[p]);
    }
    let (ym, y0, yp) = (y[p - 1], y[p], y[p + 1]);
    let curv = ym - 2.0 * y0 + yp;
    if curv >= 0.0 {
        return (0.0, y0);
    }
    let offset = (0.5 * (ym - yp) / curv).clamp(-0.5, 0.5);
    (offset, y0 - 0.25 * (ym - yp) * offset)
}

fn best_lag(acc: &[Complex64], norm: f64) -> (usize, f64, f64) {
    let y: Vec<f64> = acc.iter().map(|c| c.norm_sqr() / norm).collect();
    let p = y
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0;
    let (offset, vertex) = refine_peak(&y, p);
    // The discrete maximum is a Cauchy-Schwarz-bounded overlap; the vertex may
    // only improve it, and never past unity.
    (p, offset, vertex.clamp(y[p], 1.0_f64.max(y[p])))
}

/// Aggregate fidelity over weighted transverse samples.
pub fn fidelity_weighted(pairs: &[WeightedPair<'_>]) -> Result<Fidelity> {
    let first = pairs.first().ok_or(Error::ZeroEnergy("fidelity"))?;
    let dt = first.a_in.dt;
    let (n_in, n_out) = (first.a_in.len(), first.a_out.len());
    for p in pairs {
        if p.a_in.len() != n_in || p.a_out.len() != n_out {
            return Err(Error::Domain("fidelity records differ in length across rays".into()));
        }
        if (p.a_in.dt - dt).abs() > 1e-9 * dt || (p.a_out.dt - dt).abs() > 1e-9 * dt {
            return Err(Error::Domain("fidelity needs records on a common tau spacing".into()));
        }
    }
    let n_in_total = weighted_photon_number(pairs.iter().map(|p| (p.weight, p.a_in)));
    let n_out_total = weighted_photon_number(pairs.iter().map(|p| (p.weight, p.a_out)));
    if n_in_total <= 0.0 || n_out_total <= 0.0 {
        return Err(Error::ZeroEnergy("fidelity"));
    }
    let norm = n_in_total * n_out_total;
    let lags = n_in + n_out - 1;

    let mut rev = vec![Complex64::new(0.0, 0.0); lags];
    let mut dir = vec![Complex64::new(0.0, 0.0); lags];
    for p in pairs {
        correlate(p, true, &mut rev);
        correlate(p, false, &mut dir);
    }
    let (p, offset, f_prime) = best_lag(&rev, norm);
    let t_bar = first.a_in.t0 + first.a_out.t0 + (p as f64 + offset) * dt;
    let (q, q_offset, direct) = best_lag(&dir, norm);
    let direct_shift = first.a_out.t0 - first.a_in.t0 + (q as f64 + q_offset - (n_in - 1) as f64) * dt;
    Ok(Fidelity { f_prime, t_bar, direct, direct_shift })
}

/// Normalized reversed overlap at a fixed delay (nearest lag on the grid).
pub fn reversed_overlap_at(a_in: &TimeRecord, a_out: &TimeRecord, t_bar: f64) -> Result<f64> {
    let n_in = photon_number(a_in);
    let n_out = photon_number(a_out);
    if n_in <= 0.0 || n_out <= 0.0 {
        return Err(Error::ZeroEnergy("fidelity"));
    }
    let lag = ((t_bar - a_in.t0 - a_out.t0) / a_out.dt).round();
    let lags = a_in.len() + a_out.len() - 1;
    if lag < 0.0 || lag >= lags as f64 {
        return Ok(0.0);
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); lags];
    correlate(&WeightedPair { weight: 1.0, a_in, a_out }, true, &mut acc);
    Ok(acc[lag as usize].norm_sqr() / (n_in * n_out))
}

/// Fidelity of one retrieved record against its input.
pub fn fidelity(a_in: &TimeRecord, a_out: &TimeRecord) -> Result<Fidelity> {
    fidelity_weighted(&[WeightedPair { weight: 1.0, a_in, a_out }])
}

/// Intensity moments of a record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub energy: f64,
    pub centroid: f64,
    pub rms_width: f64,
}

/// Trapezoidal moments of a sampled intensity.
pub fn intensity_moments(t0: f64, dt: f64, intensity: &[f64]) -> Result<Moments> {
    let n = intensity.len();
    let (mut e, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (k, &i) in intensity.iter().enumerate() {
        let w = trapezoid_weight(k, n) * i;
        let t = t0 + k as f64 * dt;
        e += w;
        m1 += w * t;
        m2 += w * t * t;
    }
    if !(e > 0.0) {
        return Err(Error::ZeroEnergy("pulse moments"));
    }
    let centroid = m1 / e;
    let var = (m2 / e - centroid * centroid).max(0.0);
    Ok(Moments { energy: e * dt, centroid, rms_width: var.sqrt() })
}

pub fn record_moments(record: &TimeRecord) -> Result<Moments> {
    let intensity: Vec<f64> = record.values.iter().map(|v| v.norm_sqr()).collect();
    intensity_moments(record.t0, record.dt, &intensity)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Broadening {
    pub centroid_in: f64,
    pub centroid_out: f64,
    /// `centroid_out - centroid_in`.
    pub centroid_delay: f64,
    /// Offset of the output centroid from the mirror image `-centroid_in` of
    /// the input about the storage/retrieval hand-off.
    pub echo_offset: f64,
    pub rms_in: f64,
    pub rms_out: f64,
    pub width_ratio: f64,
}

pub fn broadening_from_moments(m_in: Moments, m_out: Moments) -> Broadening {
    Broadening {
        centroid_in: m_in.centroid,
        centroid_out: m_out.centroid,
        centroid_delay: m_out.centroid - m_in.centroid,
        echo_offset: m_out.centroid + m_in.centroid,
        rms_in: m_in.rms_width,
        rms_out: m_out.rms_width,
        width_ratio: m_out.rms_width / m_in.rms_width,
    }
}

pub fn delay_and_broadening(a_in: &TimeRecord, a_out: &TimeRecord) -> Result<Broadening> {
    Ok(broadening_from_moments(record_moments(a_in)?, record_moments(a_out)?))
}

/// `|N_in - N_trans - N_out - E_spin - E_dissipated| / N_in` for one ray.
pub fn conservation_residual(result: &SimResult) -> f64 {
    let n_in = photon_number(&result.a_in);
    if n_in == 0.0 {
        return 0.0;
    }
    let s = &result.spin;
    let balance = n_in
        - photon_number(&result.a_trans)
        - photon_number(&result.a_out)
        - s.remaining
        - s.dissipated
        - s.gap_loss;
    balance.abs() / n_in
}

/// Figures of merit for a single ray or a transverse aggregate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub n_in: f64,
    pub n_out: f64,
    pub eta: f64,
    pub f_prime: f64,
    pub t_bar: f64,
    pub direct_overlap: f64,
    pub centroid_delay: f64,
    pub echo_offset: f64,
    pub rms_width_in: f64,
    pub rms_width_out: f64,
    pub width_ratio: f64,
    pub conservation_residual: f64,
    /// Spin energy left unretrieved at the end of the retrieval window, over `N_in`.
    pub escaped_fraction: f64,
}

pub fn ray_metrics(result: &SimResult) -> Result<Metrics> {
    let n_in = photon_number(&result.a_in);
    if n_in <= 0.0 {
        return Err(Error::ZeroEnergy("efficiency"));
    }
    let n_out = photon_number(&result.a_out);
    let fid = fidelity(&result.a_in, &result.a_out)?;
    let b = delay_and_broadening(&result.a_in, &result.a_out)?;
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
        conservation_residual: result.conservation_residual,
        escaped_fraction: result.spin.remaining / n_in,
    })
}
