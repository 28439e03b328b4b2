//! Dispersively coupled qubit–resonator model.
//!
//! The resonator is pulled to `ω_r − χ` with the qubit in `|g⟩` and to
//! `ω_r + χ` in `|e⟩`. Pointer-state amplitudes obey
//!
//! ```text
//! dα_s/dt = −[i(Δ_d + s·χ) + κ/2]·α_s + ε(t),   s = −1 (g), +1 (e)
//! ```
//!
//! in the frame of the drive, with `ε(t) = i·√κ·amp_cal·W(t)`. All rates in
//! this module are angular (rad/µs) and times are µs unless a name says ns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{self, angular};
use crate::waveform::IQWaveform;
use crate::C64;

/// Resonator and qubit parameters. Frequencies are ordinary (MHz), `t2` in µs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersiveParams {
    /// κ/2π.
    pub kappa: f64,
    /// χ/2π; the full g–e splitting is 2χ.
    pub chi: f64,
    /// (ω_r − ω_d)/2π.
    pub delta_d: f64,
    pub t2: f64,
}

impl DispersiveParams {
    pub fn new(kappa: f64, chi: f64, delta_d: f64, t2: f64) -> Self {
        DispersiveParams {
            kappa,
            chi,
            delta_d,
            t2,
        }
    }

    pub fn with_delta_d(self, delta_d: f64) -> Self {
        DispersiveParams { delta_d, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("kappa", "linewidth must be positive"));
        }
        if !(self.t2 > 0.0) {
            return Err(Error::invalid("t2", "must be positive"));
        }
        if !self.chi.is_finite() || !self.delta_d.is_finite() {
            return Err(Error::invalid("chi", "chi and delta_d must be finite"));
        }
        Ok(())
    }

    pub fn kappa_ang(&self) -> f64 {
        angular(self.kappa)
    }

    pub fn chi_ang(&self) -> f64 {
        angular(self.chi)
    }

    pub fn delta_ang(&self) -> f64 {
        angular(self.delta_d)
    }

    /// `10/κ` (angular) in ns: photon number decays by `e^{-10}`.
    pub fn ringdown_window_ns(&self) -> f64 {
        units::us_to_ns(10.0 / self.kappa_ang())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitState {
    #[serde(alias = "g")]
    Ground,
    #[serde(alias = "e")]
    Excited,
}

impl QubitState {
    pub fn sign(self) -> f64 {
        match self {
            QubitState::Ground => -1.0,
            QubitState::Excited => 1.0,
        }
    }
}

/// `ε = i·√κ·A` in rad/µs, for a normalized amplitude already multiplied by
/// the calibration scalar.
pub fn drive_strength(params: &DispersiveParams, amplitude: f64) -> C64 {
    C64::new(0.0, params.kappa_ang().sqrt() * amplitude)
}

fn decay_rate(params: &DispersiveParams, state: QubitState) -> C64 {
    C64::new(
        params.kappa_ang() / 2.0,
        params.delta_ang() + state.sign() * params.chi_ang(),
    )
}

/// Closed-form steady states `α_s = ε / (i(Δ_d + sχ) + κ/2)`.
pub fn steady_state_alpha(params: &DispersiveParams, eps: C64) -> (C64, C64) {
    (
        eps / decay_rate(params, QubitState::Ground),
        eps / decay_rate(params, QubitState::Excited),
    )
}

/// Pointer-state trajectories. `times` are in ns.
#[derive(Clone, Debug, PartialEq)]
pub struct CavityTrajectory {
    pub times: Vec<f64>,
    pub alpha_g: Vec<C64>,
    pub alpha_e: Vec<C64>,
    pub params: DispersiveParams,
}

impl CavityTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Spacing of the stored time points, ns.
    pub fn step_ns(&self) -> f64 {
        if self.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// Total simulated span, µs.
    pub fn duration_us(&self) -> f64 {
        units::ns_to_us(self.times.last().copied().unwrap_or(0.0) - self.times.first().copied().unwrap_or(0.0))
    }

    /// `(D, φ) = (∫2χ·Im[α_g ᾱ_e] dt, ∫2χ·Re[α_g ᾱ_e] dt)` by the rectangle
    /// rule. `D` is the accumulated dephasing exponent, `φ` the Stark phase.
    pub fn dephasing_integrals(&self) -> (f64, f64) {
        let h = units::ns_to_us(self.step_ns());
        let two_chi = 2.0 * self.params.chi_ang();
        let (mut d, mut phi) = (0.0, 0.0);
        for (g, e) in self.alpha_g.iter().zip(&self.alpha_e) {
            let z = g * e.conj();
            d += z.im;
            phi += z.re;
        }
        (two_chi * d * h, two_chi * phi * h)
    }

    /// CSV with header `t_ns,re_ag,im_ag,re_ae,im_ae`.
    pub fn to_csv(&self) -> String {
        crate::io::csv(
            &["t_ns", "re_ag", "im_ag", "re_ae", "im_ae"],
            (0..self.len()).map(|k| {
                let (g, e) = (self.alpha_g[k], self.alpha_e[k]);
                [self.times[k], g.re, g.im, e.re, e.im]
            }),
        )
    }
}

/// Integrates both pointer states with classical fourth-order Runge–Kutta.
///
/// Each step spans two waveform samples so that the midpoint stages use an
/// exact sample instead of an interpolant; trajectory points are therefore
/// spaced `2·dt`. The drive is followed by `ringdown_ns` of zero drive.
pub fn simulate_cavity(
    params: &DispersiveParams,
    drive: &IQWaveform,
    amp_cal: f64,
    ringdown_ns: f64,
) -> Result<CavityTrajectory> {
    params.validate()?;
    if !(ringdown_ns >= 0.0) {
        return Err(Error::invalid("ringdown", "must be non-negative"));
    }
    let dt = drive.dt();
    let f_max = (params.delta_d.abs() + params.chi.abs()).max(params.kappa);
    let dt_max = units::NS_PER_US / (20.0 * f_max);
    if dt > dt_max {
        return Err(Error::Resolution(format!(
            "drive dt {dt} ns exceeds 1/(20·{f_max} MHz) = {dt_max} ns"
        )));
    }

    let scale = drive_strength(params, amp_cal);
    let mut eps: Vec<C64> = drive.samples().iter().map(|&w| scale * w).collect();
    let n_ring = (ringdown_ns / dt).ceil() as usize;
    eps.resize(eps.len() + n_ring, C64::new(0.0, 0.0));
    if eps.len().is_multiple_of(2) {
        eps.push(C64::new(0.0, 0.0));
    }

    let h = units::ns_to_us(2.0 * dt);
    let n_steps = (eps.len() - 1) / 2;
    let times = (0..=n_steps).map(|k| drive.t_start() + 2.0 * k as f64 * dt).collect();
    let integrate = |state: QubitState| {
        let lambda = -decay_rate(params, state);
        let f = |a: C64, e: C64| lambda * a + e;
        let mut a = C64::new(0.0, 0.0);
        let mut out = Vec::with_capacity(n_steps + 1);
        out.push(a);
        for k in 0..n_steps {
            let (e0, e1, e2) = (eps[2 * k], eps[2 * k + 1], eps[2 * k + 2]);
            let k1 = f(a, e0);
            let k2 = f(a + k1 * (h / 2.0), e1);
            let k3 = f(a + k2 * (h / 2.0), e1);
            let k4 = f(a + k3 * h, e2);
            a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            out.push(a);
        }
        out
    };
    let (alpha_g, alpha_e) = rayon::join(|| integrate(QubitState::Ground), || integrate(QubitState::Excited));
    Ok(CavityTrajectory {
        times,
        alpha_g,
        alpha_e,
        params: *params,
    })
}

/// `∫|α_e − α_g|² dt` in ns; larger means better-separated pointer states.
pub fn snr_proxy(traj: &CavityTrajectory) -> f64 {
    let h = traj.step_ns();
    traj.alpha_g
        .iter()
        .zip(&traj.alpha_e)
        .map(|(g, e)| (e - g).norm_sqr())
        .sum::<f64>()
        * h
}

/// Symmetric notch-type feedline response `1 − (κ/2)/(i(f − f_s) + κ/2)`,
/// with `f_s = ∓χ` for ground/excited and probe frequencies in MHz
/// relative to the bare resonator.
pub fn s21_response(params: &DispersiveParams, probe_freqs: &[f64], state: QubitState) -> Vec<C64> {
    let f_s = state.sign() * params.chi;
    probe_freqs.iter().map(|&f| s21_notch(f, f_s, params.kappa)).collect()
}

fn s21_notch(f: f64, f_s: f64, kappa: f64) -> C64 {
    // 2π cancels between numerator and denominator
    let g = kappa / 2.0;
    C64::new(1.0, 0.0) - C64::new(g, 0.0) / C64::new(g, f - f_s)
}

/// Result of [`fit_s21`]. Frequencies in MHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct S21Fit {
    /// Mean of the two per-state linewidths.
    pub kappa: f64,
    /// `f_e − f_g`.
    pub two_chi: f64,
    pub f_g: f64,
    pub f_e: f64,
    pub kappa_g: f64,
    pub kappa_e: f64,
    /// RMS complex residual over both traces.
    pub residual: f64,
}

/// Per-state least-squares fit of the notch model, free parameters `f_s`
/// and `κ`. A linearized estimate seeds Levenberg–Marquardt.
pub fn fit_s21(freqs: &[f64], trace_g: &[C64], trace_e: &[C64]) -> Result<S21Fit> {
    if trace_g.len() != freqs.len() || trace_e.len() != freqs.len() {
        return Err(Error::invalid("traces", "trace lengths must match the frequency list"));
    }
    let (f_g, kappa_g, ss_g) = fit_notch(freqs, trace_g)?;
    let (f_e, kappa_e, ss_e) = fit_notch(freqs, trace_e)?;
    Ok(S21Fit {
        kappa: 0.5 * (kappa_g + kappa_e),
        two_chi: f_e - f_g,
        f_g,
        f_e,
        kappa_g,
        kappa_e,
        residual: ((ss_g + ss_e) / (2 * freqs.len()) as f64).sqrt(),
    })
}

const MIN_POINTS_IN_DIP: usize = 10;

/// Returns `(f_s, κ, Σ|r|²)`.
fn fit_notch(freqs: &[f64], trace: &[C64]) -> Result<(f64, f64, f64)> {
    let (k_min, min_abs) =
        trace.iter().map(|s| s.norm()).enumerate().fold(
            (0, f64::INFINITY),
            |best, (k, m)| if m < best.1 { (k, m) } else { best },
        );
    if min_abs > 0.9 {
        return Err(Error::Fit(format!("no dip found (min |S21| = {min_abs:.3})")));
    }

    // 1/(1 − S21) = 1 + 2i(f − f_s)/κ: the imaginary part is linear in f.
    let window: Vec<(f64, f64)> = freqs
        .iter()
        .zip(trace)
        .filter(|(_, s)| (C64::new(1.0, 0.0) - **s).norm() >= 0.5)
        .map(|(&f, s)| (f, (C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) - s)).im))
        .collect();
    if window.len() < MIN_POINTS_IN_DIP {
        return Err(Error::Resolution(format!(
            "only {} samples inside the dip near {} MHz; need {MIN_POINTS_IN_DIP}",
            window.len(),
            freqs[k_min]
        )));
    }
    let (slope, intercept) = linear_regression(&window);
    let (mut f_s, mut kappa) = if slope > 0.0 {
        (-intercept / slope, 2.0 / slope)
    } else {
        (freqs[k_min], (freqs[freqs.len() - 1] - freqs[0]) / 10.0)
    };

    let sse = |f_s: f64, kappa: f64| -> f64 {
        freqs
            .iter()
            .zip(trace)
            .map(|(&f, &d)| (s21_notch(f, f_s, kappa) - d).norm_sqr())
            .sum()
    };
    let mut cost = sse(f_s, kappa);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        // Normal equations of the 2-parameter problem on stacked re/im residuals.
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let g = kappa / 2.0;
        for (&f, &d) in freqs.iter().zip(trace) {
            let den = C64::new(g, f - f_s);
            let den2 = den * den;
            let r = s21_notch(f, f_s, kappa) - d;
            let j_f = C64::new(0.0, -g) / den2;
            let j_k = C64::new(0.0, -(f - f_s) / 2.0) / den2;
            a11 += j_f.norm_sqr();
            a22 += j_k.norm_sqr();
            a12 += j_f.re * j_k.re + j_f.im * j_k.im;
            b1 -= j_f.re * r.re + j_f.im * r.im;
            b2 -= j_k.re * r.re + j_k.im * r.im;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let (m11, m22) = (a11 * (1.0 + lambda), a22 * (1.0 + lambda));
            let det = m11 * m22 - a12 * a12;
            if det <= 0.0 {
                lambda *= 10.0;
                continue;
            }
            let df = (m22 * b1 - a12 * b2) / det;
            let dk = (m11 * b2 - a12 * b1) / det;
            let (nf, nk) = (f_s + df, kappa + dk);
            if nk > 0.0 {
                let new_cost = sse(nf, nk);
                if new_cost <= cost {
                    let converged = df.abs() <= 1e-12 * (1.0 + f_s.abs()) && dk.abs() <= 1e-12 * kappa;
                    f_s = nf;
                    kappa = nk;
                    cost = new_cost;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = !converged;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok((f_s, kappa, cost))
}

fn linear_regression(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// CSV with header `f_mhz,re_g,im_g,re_e,im_e`.
pub fn s21_csv(freqs: &[f64], trace_g: &[C64], trace_e: &[C64]) -> String {
    crate::io::csv(
        &["f_mhz", "re_g", "im_g", "re_e", "im_e"],
        (0..freqs.len()).map(|k| [freqs[k], trace_g[k].re, trace_g[k].im, trace_e[k].re, trace_e[k].im]),
    )
}
