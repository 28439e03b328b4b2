//! Measurement-induced dephasing.
//!
//! The monochromatic rate of a resonator driven at detuning `Δ_d` is
//!
//! ```text
//! Γ_φ = 2|ε|²χ²κ / {[(Δ_d+χ)² + (κ/2)²]·[(Δ_d−χ)² + (κ/2)²]}
//! ```
//!
//! For a pulse of finite length each spectral component at resonator
//! detuning `Δ` contributes with the same kernel evaluated at `Δ`, weighted
//! by the spectral density
//!
//! ```text
//! ρ(Δ) = κ·amp_cal²·|S(Δ)|² / (2π·T_eff),   T_eff = energy(W) / max|W|²
//! ```
//!
//! which integrates to `|ε|² = κ·amp_cal²·max|W|²`, so the broadened rate
//! reduces to the monochromatic one for long pulses.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersive::{simulate_cavity, DispersiveParams};
use crate::error::{Error, Result};
use crate::spectrum::dtft;
use crate::units::{self, angular};
use crate::waveform::{DragParams, EnvelopeSpec, ProbePulse};

/// Dephasing kernel `2χ²κ / {[(Δ+χ)² + (κ/2)²]·[(Δ−χ)² + (κ/2)²]}`, all
/// arguments angular. Multiply by `|ε|²` to get a rate.
pub fn dephasing_kernel(delta: f64, chi: f64, kappa: f64) -> f64 {
    let k2 = (kappa / 2.0).powi(2);
    2.0 * chi * chi * kappa / (((delta + chi).powi(2) + k2) * ((delta - chi).powi(2) + k2))
}

/// Steady-state dephasing rate (1/µs) for a drive of magnitude `eps_mag`
/// (rad/µs) at the detuning stored in `params`.
pub fn monochromatic_rate(params: &DispersiveParams, eps_mag: f64) -> f64 {
    let rate = eps_mag * eps_mag * dephasing_kernel(params.delta_ang(), params.chi_ang(), params.kappa_ang());
    #[cfg(feature = "mutation-eq2")]
    let rate = rate * 1.01;
    rate
}

/// Quadrature grid for [`spectral_rate`]. Unset fields take defaults
/// derived from the resonator and the pulse.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width_mhz: Option<f64>,
}

/// Concrete quadrature nodes: resonator detunings `m·step` (MHz) for
/// `m = first..=last`. Anchoring nodes to multiples of the step makes grids
/// for `±Δ_d` exact mirror images.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolvedGrid {
    pub step: f64,
    pub first: i64,
    pub last: i64,
}

impl ResolvedGrid {
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (self.first..=self.last).map(move |m| m as f64 * self.step)
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }
}

impl IntegrationGrid {
    pub fn with_step(step_mhz: f64) -> Self {
        IntegrationGrid {
            step_mhz: Some(step_mhz),
            half_width_mhz: None,
        }
    }

    /// Largest admissible step: `min(κ/20, 1/(4·duration))`.
    pub fn step_limit(params: &DispersiveParams, duration_us: f64) -> f64 {
        (params.kappa / 20.0).min(1.0 / (4.0 * duration_us))
    }

    pub fn default_half_width(params: &DispersiveParams) -> f64 {
        100f64.max(40.0 * params.kappa).max(40.0 * params.chi.abs())
    }

    /// Nodes span `[min(0, Δ_d) − W, max(0, Δ_d) + W]` so both the kernel
    /// peak and the pulse's main lobe are covered.
    pub fn resolve(&self, params: &DispersiveParams, duration_us: f64) -> Result<ResolvedGrid> {
        let limit = Self::step_limit(params, duration_us);
        let step = self.step_mhz.unwrap_or(limit / 2.0);
        if !(step > 0.0) {
            return Err(Error::invalid("step_mhz", "must be positive"));
        }
        if step > limit {
            return Err(Error::Resolution(format!(
                "integration step {step} MHz exceeds min(κ/20, 1/(4T)) = {limit} MHz"
            )));
        }
        let half = self.half_width_mhz.unwrap_or_else(|| Self::default_half_width(params));
        if !(half > 0.0) {
            return Err(Error::invalid("half_width_mhz", "must be positive"));
        }
        let lo = params.delta_d.min(0.0) - half;
        let hi = params.delta_d.max(0.0) + half;
        Ok(ResolvedGrid {
            step,
            first: (lo / step).floor() as i64,
            last: (hi / step).ceil() as i64,
        })
    }
}

/// Spectrally broadened dephasing rate (1/µs) of `pulse` at the detuning in
/// `params`, by rectangle-rule quadrature over resonator detuning.
pub fn spectral_rate(
    params: &DispersiveParams,
    pulse: &ProbePulse,
    amp_cal: f64,
    grid: &IntegrationGrid,
) -> Result<f64> {
    params.validate()?;
    let duration_us = units::ns_to_us(pulse.shaped.span().max(pulse.shaped.dt()));
    let resolved = grid.resolve(params, duration_us)?;
    let t_eff = pulse.effective_duration_us();
    if t_eff == 0.0 || amp_cal == 0.0 {
        return Ok(0.0);
    }
    let nodes: Vec<f64> = resolved.nodes().collect();
    // component detuned by ν from the resonator sits at baseband ν − Δ_d
    let baseband: Vec<f64> = nodes.iter().map(|nu| nu - params.delta_d).collect();
    let spectrum = dtft(&pulse.shaped, &baseband)?;
    let (chi, kappa) = (params.chi_ang(), params.kappa_ang());
    let weight = kappa * amp_cal * amp_cal / (TAU * t_eff);
    let d_delta = angular(resolved.step);
    let sum: f64 = nodes
        .iter()
        .zip(&spectrum.amps)
        .map(|(&nu, s)| {
            let s_us = s / units::NS_PER_US;
            s_us.norm_sqr() * dephasing_kernel(angular(nu), chi, kappa)
        })
        .sum();
    Ok(weight * sum * d_delta)
}

/// `P_e = exp(−(Γ + 1/T₂)·τ)` with `gamma` in 1/µs and times in µs.
pub fn excited_population(gamma: f64, t2: f64, tau: f64) -> f64 {
    (-(gamma + 1.0 / t2) * tau).exp()
}

/// Excited-state population and Stark phase over an amplitude × detuning
/// grid. Row index is amplitude, column index is detuning.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DephasingMap {
    pub amps: Vec<f64>,
    /// (ω_r − ω_d)/2π in MHz.
    pub detunings: Vec<f64>,
    pub pe: Vec<Vec<f64>>,
    pub theta0: Vec<Vec<f64>>,
    pub drag_enabled: bool,
    /// Pulse duration used as τ, µs.
    pub tau_us: f64,
}

impl DephasingMap {
    /// Long-format CSV `amp,detuning_mhz,pe,theta0_rad`, amplitude-major.
    pub fn to_csv(&self) -> String {
        let rows = self.amps.iter().enumerate().flat_map(|(i, &a)| {
            self.detunings
                .iter()
                .enumerate()
                .map(move |(j, &d)| [a, d, self.pe[i][j], self.theta0[i][j]])
        });
        crate::io::csv(&["amp", "detuning_mhz", "pe", "theta0_rad"], rows)
    }

    pub fn column(&self, detuning: f64) -> Option<usize> {
        self.detunings.iter().position(|&d| d == detuning)
    }
}

/// Unit-amplitude rate and Stark phase for one detuning column.
fn map_column(
    params: &DispersiveParams,
    pulse_spec: &EnvelopeSpec,
    detuning: f64,
    drag: bool,
    amp_cal: f64,
    grid: &IntegrationGrid,
) -> Result<(f64, f64)> {
    let p = params.with_delta_d(detuning);
    // notch on the resonator: f_d − f_r
    let drag = if drag {
        DragParams::notch(-detuning)
    } else {
        DragParams::off()
    };
    let pulse = ProbePulse::new(pulse_spec.with_amplitude(1.0), drag)?;
    let gamma = spectral_rate(&p, &pulse, amp_cal, grid)?;
    let traj = simulate_cavity(&p, &pulse.shaped, amp_cal, p.ringdown_window_ns())?;
    let (_, phi) = traj.dephasing_integrals();
    Ok((gamma, phi))
}

/// Builds the `P_e` and `θ₀` maps. With DRAG the notch is placed on the
/// resonator, which is undefined at zero detuning.
///
/// Both the broadened rate and the Stark phase are quadratic in amplitude,
/// so each detuning column is computed once at unit amplitude and scaled.
pub fn dephasing_map(
    params: &DispersiveParams,
    pulse_spec: &EnvelopeSpec,
    amps: &[f64],
    detunings: &[f64],
    drag: bool,
    amp_cal: f64,
    grid: &IntegrationGrid,
) -> Result<DephasingMap> {
    params.validate()?;
    pulse_spec.validate()?;
    if drag && detunings.contains(&0.0) {
        return Err(Error::UndefinedNotch);
    }
    if let Some(a) = amps.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::invalid("amps", format!("{a} outside [0, 1]")));
    }
    let columns = detunings
        .par_iter()
        .map(|&d| map_column(params, pulse_spec, d, drag, amp_cal, grid))
        .collect::<Result<Vec<_>>>()?;
    let tau_us = units::ns_to_us(pulse_spec.duration());
    let pe = amps
        .iter()
        .map(|&a| {
            columns
                .iter()
                .map(|&(g, _)| excited_population(a * a * g, params.t2, tau_us))
                .collect()
        })
        .collect();
    let theta0 = amps
        .iter()
        .map(|&a| columns.iter().map(|&(_, phi)| a * a * phi).collect())
        .collect();
    Ok(DephasingMap {
        amps: amps.to_vec(),
        detunings: detunings.to_vec(),
        pe,
        theta0,
        drag_enabled: drag,
        tau_us,
    })
}
