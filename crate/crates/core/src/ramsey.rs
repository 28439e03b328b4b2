//! Ramsey experiments with a pseudo-readout pulse between the π/2 gates.
//!
//! The π/2 rotations are ideal and instantaneous. Between them the qubit
//! coherence picks up `C = exp(−D + iφ − T_tot/T₂)`, where `D` and `φ` are
//! the dephasing and Stark integrals of the simulated pointer states over the
//! pulse plus a `10/κ` ring-down window. Sweeping the phase θ of the second
//! gate gives `P(θ) = 1/2 − |C|/2·sin(θ + arg C)`, so a fit of the form
//! `c·sin(θ + θ₀) + offset` returns `c = |C|/2` and `θ₀ = arg C + π`.
//!
//! Noise is Gaussian, drawn from ChaCha8 seeded with the user seed and
//! using the point index as the stream id, so scans are reproducible
//! regardless of evaluation order.

use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersive::{simulate_cavity, DispersiveParams};
use crate::error::{Error, Result};
use crate::spectrum::{dtft, uniform_grid};
use crate::units;
use crate::waveform::{DragParams, EnvelopeSpec, IQWaveform, ProbePulse};
use crate::C64;

/// Reported in place of an unbounded decay constant, µs.
pub const T2_EFF_CAP: f64 = 1e9;

#[derive(Clone, Debug, PartialEq)]
pub struct RamseySweep {
    pub thetas: Vec<f64>,
    pub signal: Vec<f64>,
}

impl RamseySweep {
    /// CSV with header `theta_rad,signal`.
    pub fn to_csv(&self) -> String {
        crate::io::csv(
            &["theta_rad", "signal"],
            self.thetas.iter().zip(&self.signal).map(|(&t, &s)| [t, s]),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SinusoidFit {
    pub contrast: f64,
    pub theta0: f64,
    pub offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RamseyPoint {
    pub contrast: f64,
    pub theta0: f64,
    /// `2c`, clipped to `[0, 1]` when noise pushes the contrast past 1/2.
    pub pe: f64,
}

impl From<SinusoidFit> for RamseyPoint {
    fn from(fit: SinusoidFit) -> Self {
        RamseyPoint {
            contrast: fit.contrast,
            theta0: fit.theta0,
            pe: (2.0 * fit.contrast).clamp(0.0, 1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel { sigma: 0.0, seed: 0 }
    }
}

/// Coherence factor and total free-evolution time (µs) for one pulse.
pub fn coherence_factor(params: &DispersiveParams, pulse: &IQWaveform, amp_cal: f64) -> Result<(C64, f64)> {
    let traj = simulate_cavity(params, pulse, amp_cal, params.ringdown_window_ns())?;
    let (d, phi) = traj.dephasing_integrals();
    let t_tot = traj.duration_us();
    Ok((C64::from_polar((-d - t_tot / params.t2).exp(), phi), t_tot))
}

pub fn simulate_ramsey_point(
    params: &DispersiveParams,
    pulse: &IQWaveform,
    amp_cal: f64,
    n_theta: usize,
    noise: &NoiseModel,
    stream: u64,
) -> Result<RamseySweep> {
    if n_theta < 8 {
        return Err(Error::invalid("n_theta", "need at least 8 phases"));
    }
    if !(noise.sigma >= 0.0) {
        return Err(Error::invalid("noise_sigma", "must be non-negative"));
    }
    let (c, _) = coherence_factor(params, pulse, amp_cal)?;
    Ok(synthesize_sweep(c, n_theta, noise, stream))
}

fn synthesize_sweep(c: C64, n_theta: usize, noise: &NoiseModel, stream: u64) -> RamseySweep {
    let thetas: Vec<f64> = (0..n_theta).map(|k| TAU * k as f64 / n_theta as f64).collect();
    let (mag, arg) = c.to_polar();
    let mut signal: Vec<f64> = thetas.iter().map(|&t| 0.5 - 0.5 * mag * (t + arg).sin()).collect();
    if noise.sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        rng.set_stream(stream);
        let normal = Normal::new(0.0, noise.sigma).expect("sigma checked non-negative");
        for s in &mut signal {
            *s += normal.sample(&mut rng);
        }
    }
    RamseySweep { thetas, signal }
}

/// Linear least squares onto `{sin θ, cos θ, 1}`; `θ₀ = atan2(b, a)` for
/// the fitted `a·sin θ + b·cos θ`.
pub fn fit_sinusoid(thetas: &[f64], signal: &[f64]) -> Result<SinusoidFit> {
    if thetas.len() != signal.len() {
        return Err(Error::invalid("signal", "length differs from thetas"));
    }
    if thetas.len() < 3 {
        return Err(Error::Fit("need at least 3 phases".into()));
    }
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (&t, &y) in thetas.iter().zip(signal) {
        let row = [t.sin(), t.cos(), 1.0];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
    }
    let [a, b, offset] = solve3(ata, atb).ok_or_else(|| Error::Fit("phases do not span the sinusoid basis".into()))?;
    Ok(SinusoidFit {
        contrast: a.hypot(b),
        theta0: b.atan2(a),
        offset,
    })
}

/// Gaussian elimination with partial pivoting; `None` if rank-deficient.
fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    let scale = m.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() <= 1e-10 * scale {
            return None;
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (x, p) in m[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (v[i] - s) / m[i][i];
    }
    Some(x)
}

/// Contrast and phase versus pseudo-pulse plateau duration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeatingScan {
    pub taus: Vec<f64>,
    pub points: Vec<RamseyPoint>,
    /// Free-evolution time per point (edges + plateau + ring-down), µs.
    pub total_times: Vec<f64>,
    pub drag_enabled: bool,
}

impl BeatingScan {
    pub fn contrasts(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.contrast).collect()
    }

    /// CSV with header `tau_ns,contrast,theta0_rad,pe`.
    pub fn to_csv(&self) -> String {
        crate::io::csv(
            &["tau_ns", "contrast", "theta0_rad", "pe"],
            self.taus
                .iter()
                .zip(&self.points)
                .map(|(&t, p)| [t, p.contrast, p.theta0, p.pe]),
        )
    }
}

/// Runs a fringe simulation and fit for every plateau duration in `taus`.
/// With DRAG the notch sits on the resonator (`f_d − f_r = −Δ_d`).
#[allow(clippy::too_many_arguments)]
pub fn scan_plateau(
    params: &DispersiveParams,
    template: &EnvelopeSpec,
    taus: &[f64],
    drag: bool,
    amp_cal: f64,
    n_theta: usize,
    noise: &NoiseModel,
) -> Result<BeatingScan> {
    params.validate()?;
    if taus.is_empty() || taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("taus", "must be non-empty and strictly increasing"));
    }
    let drag_params = if drag {
        DragParams::notch(-params.delta_d)
    } else {
        DragParams::off()
    };
    drag_params.validate()?;
    let results = taus
        .par_iter()
        .enumerate()
        .map(|(k, &tau)| -> Result<(RamseyPoint, f64)> {
            let pulse = ProbePulse::new(template.with_plateau(tau), drag_params)?;
            let (c, t_tot) = coherence_factor(params, &pulse.shaped, amp_cal)?;
            let sweep = synthesize_sweep(c, n_theta, noise, k as u64);
            let fit = fit_sinusoid(&sweep.thetas, &sweep.signal)?;
            Ok((fit.into(), t_tot))
        })
        .collect::<Result<Vec<_>>>()?;
    let (points, total_times) = results.into_iter().unzip();
    Ok(BeatingScan {
        taus: taus.to_vec(),
        points,
        total_times,
        drag_enabled: drag,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub c0: f64,
    /// µs; [`T2_EFF_CAP`] when the data do not decay.
    pub t2_eff: f64,
}

/// Log-linear least-squares fit of `c₀·exp(−τ/T₂eff)`, `taus` in ns.
pub fn fit_decay(taus: &[f64], contrasts: &[f64]) -> Result<DecayFit> {
    if taus.len() != contrasts.len() {
        return Err(Error::invalid("contrasts", "length differs from taus"));
    }
    if taus.len() < 2 {
        return Err(Error::Fit("need at least 2 points".into()));
    }
    if let Some(c) = contrasts.iter().find(|&&c| !(c > 0.0)) {
        return Err(Error::Domain(format!("contrast {c} is not positive")));
    }
    let n = taus.len() as f64;
    let xs: Vec<f64> = taus.iter().map(|&t| units::ns_to_us(t)).collect();
    let ys: Vec<f64> = contrasts.iter().map(|c| c.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all taus are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let c0 = (my - slope * mx).exp();
    let t2_eff = if slope < 0.0 {
        (-1.0 / slope).min(T2_EFF_CAP)
    } else {
        T2_EFF_CAP
    };
    Ok(DecayFit { c0, t2_eff })
}

/// Upper envelope: the maximum of each consecutive `window_ns` block.
pub fn beat_envelope(taus: &[f64], values: &[f64], window_ns: f64) -> (Vec<f64>, Vec<f64>) {
    let mut env_t = Vec::new();
    let mut env_v = Vec::new();
    let mut k = 0;
    while k < taus.len() {
        let start = taus[k];
        let mut best = k;
        while k < taus.len() && taus[k] < start + window_ns {
            if values[k] > values[best] {
                best = k;
            }
            k += 1;
        }
        env_t.push(taus[best]);
        env_v.push(values[best]);
    }
    (env_t, env_v)
}

/// [`fit_decay`] applied to the beat envelope with one beat period per window.
pub fn fit_envelope_decay(taus: &[f64], contrasts: &[f64], period_ns: f64) -> Result<DecayFit> {
    let (t, c) = beat_envelope(taus, contrasts, period_ns);
    fit_decay(&t, &c)
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Peak-to-peak of the linearly detrended values over the first `period_ns`
/// of the scan, divided by their mean.
pub fn modulation_depth(taus: &[f64], values: &[f64], period_ns: f64) -> f64 {
    let end = taus.iter().position(|&t| t > taus[0] + period_ns).unwrap_or(taus.len());
    let (xs, ys) = (&taus[..end], &values[..end]);
    let (slope, icpt) = linear_fit(xs, ys);
    let resid: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - (slope * x + icpt)).collect();
    let spread =
        resid.iter().fold(f64::NEG_INFINITY, |m, &r| m.max(r)) - resid.iter().fold(f64::INFINITY, |m, &r| m.min(r));
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    spread / mean
}

/// Dominant oscillation frequency (MHz) of a uniformly sampled series, after
/// removing its least-squares linear trend. Searched from one cycle per scan
/// up to Nyquist at a tenth of the scan's frequency resolution.
pub fn dominant_frequency(taus: &[f64], values: &[f64]) -> Result<f64> {
    if taus.len() < 4 {
        return Err(Error::invalid("taus", "need at least 4 samples"));
    }
    let step = taus[1] - taus[0];
    if taus
        .windows(2)
        .any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs().max(1.0))
    {
        return Err(Error::invalid("taus", "spectral analysis needs uniform spacing"));
    }
    let (slope, icpt) = linear_fit(taus, values);
    let resid = taus
        .iter()
        .zip(values)
        .map(|(x, y)| C64::new(y - (slope * x + icpt), 0.0))
        .collect();
    let wf = IQWaveform::new(resid, step, taus[0])?;
    let span = taus[taus.len() - 1] - taus[0];
    let resolution = units::NS_PER_US / span;
    let nyquist = units::NS_PER_US / (2.0 * step);
    let freqs = uniform_grid(resolution, nyquist, resolution / 10.0)?;
    let spec = dtft(&wf, &freqs)?;
    let (k, _) = spec.magnitudes().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |best, (k, m)| if m > best.1 { (k, m) } else { best },
    );
    Ok(freqs[k])
}

/// Fitted θ₀ corresponding to a Stark phase φ.
pub fn fitted_phase_of(phi: f64) -> f64 {
    (phi + PI + PI).rem_euclid(TAU) - PI
}
