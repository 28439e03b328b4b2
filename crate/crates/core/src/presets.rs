//! Named parameter sets for the reference device, plus bundled frequency
//! plans.
//!
//! Device: κ/2π = 2.2 MHz, χ/2π = 1.05 MHz, T₂ = 18 µs; readout pulses use
//! 5 ns cosine edges around a 200 ns plateau. The amplitude calibration
//! (`amp_cal`) and every grid resolution are choices made here.

use crate::config::{Axis, DephasingMapConfig, LinearRange, RamseyConfig, SpectrumConfig, WaveformConfig};
use crate::crosstalk::FrequencyPlan;
use crate::dephasing::IntegrationGrid;
use crate::dispersive::DispersiveParams;
use crate::error::{Error, Result};
use crate::waveform::{DragParams, EnvelopeSpec};

pub const KAPPA_MHZ: f64 = 2.2;
pub const CHI_MHZ: f64 = 1.05;
pub const T2_US: f64 = 18.0;
pub const EDGE_NS: f64 = 5.0;
pub const NOTCH_MHZ: f64 = 50.0;

/// Every preset name, in CLI listing order.
pub const NAMES: &[&str] = &[
    "fig1b",
    "fig1c-200ns",
    "fig1c-2us",
    "fig2",
    "fig3",
    "plan-two",
    "plan-four",
];

const PLAN_TWO: &str = include_str!("../presets/plan_two.json");
const PLAN_FOUR: &str = include_str!("../presets/plan_four.json");

pub fn device(delta_d: f64) -> DispersiveParams {
    DispersiveParams::new(KAPPA_MHZ, CHI_MHZ, delta_d, T2_US)
}

fn readout_envelope(plateau: f64) -> EnvelopeSpec {
    EnvelopeSpec::new(1.0, EDGE_NS, plateau, EDGE_NS, 0.1)
}

pub fn fig1b() -> WaveformConfig {
    WaveformConfig {
        envelope: readout_envelope(200.0),
        drag: DragParams::notch(NOTCH_MHZ),
    }
}

fn fig1c(plateau: f64, step: f64) -> SpectrumConfig {
    SpectrumConfig {
        envelope: readout_envelope(plateau),
        drag: DragParams::notch(NOTCH_MHZ),
        freqs: LinearRange::new(-150.0, 150.0, step),
        probe_mhz: Some(NOTCH_MHZ),
    }
}

pub fn fig1c_200ns() -> SpectrumConfig {
    fig1c(200.0, 0.25)
}

pub fn fig1c_2us() -> SpectrumConfig {
    fig1c(2000.0, 0.1)
}

/// Ramsey pseudo-readout, drive 10 MHz above the resonator.
pub fn fig2() -> RamseyConfig {
    RamseyConfig {
        params: device(-10.0),
        template: EnvelopeSpec::new(1.0, EDGE_NS, 0.0, EDGE_NS, 0.1),
        taus: LinearRange::new(0.0, 800.0, 4.0),
        amp_cal: 8.0,
        n_theta: 16,
        noise_sigma: 0.002,
        seed: 20240601,
    }
}

/// 210 ns readout over a 21 × 41 amplitude × detuning grid.
pub fn fig3() -> DephasingMapConfig {
    DephasingMapConfig {
        params: device(0.0),
        envelope: readout_envelope(200.0),
        amps: Axis::Range(LinearRange::new(0.0, 1.0, 0.05)),
        detunings: Axis::Range(LinearRange::new(-20.0, 20.0, 1.0)),
        amp_cal: 3.0,
        grid: IntegrationGrid::default(),
    }
}

/// Two resonators 50 MHz apart, each read by a 210 ns pulse.
pub fn plan_two() -> FrequencyPlan {
    FrequencyPlan::from_json(PLAN_TWO).expect("bundled plan parses")
}

pub fn plan_four() -> FrequencyPlan {
    FrequencyPlan::from_json(PLAN_FOUR).expect("bundled plan parses")
}

fn unknown(name: &str, kind: &str) -> Error {
    Error::invalid("preset", format!("no {kind} preset named '{name}'"))
}

pub fn waveform(name: &str) -> Result<WaveformConfig> {
    match name {
        "fig1b" => Ok(fig1b()),
        _ => Err(unknown(name, "waveform")),
    }
}

pub fn spectrum(name: &str) -> Result<SpectrumConfig> {
    match name {
        "fig1c-200ns" => Ok(fig1c_200ns()),
        "fig1c-2us" => Ok(fig1c_2us()),
        _ => Err(unknown(name, "spectrum")),
    }
}

pub fn ramsey(name: &str) -> Result<RamseyConfig> {
    match name {
        "fig2" => Ok(fig2()),
        _ => Err(unknown(name, "ramsey")),
    }
}

pub fn dephasing_map(name: &str) -> Result<DephasingMapConfig> {
    match name {
        "fig3" => Ok(fig3()),
        _ => Err(unknown(name, "dephasing-map")),
    }
}

pub fn plan(name: &str) -> Result<FrequencyPlan> {
    match name {
        "plan-two" => Ok(plan_two()),
        "plan-four" => Ok(plan_four()),
        _ => Err(unknown(name, "crosstalk")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        fig1b().envelope.validate().unwrap();
        for s in [fig1c_200ns(), fig1c_2us()] {
            s.envelope.validate().unwrap();
            s.drag.validate().unwrap();
        }
        fig2().params.validate().unwrap();
        fig2().template.validate().unwrap();
        let m = fig3();
        assert_eq!(m.amps.values().unwrap().len(), 21);
        assert_eq!(m.detunings.values().unwrap().len(), 41);
        assert_eq!(m.envelope.duration(), 210.0);
        plan_two().validate().unwrap();
        plan_four().validate().unwrap();
    }

    #[test]
    fn device_values() {
        let p = fig3().params;
        assert_eq!((p.kappa, 2.0 * p.chi, p.t2), (2.2, 2.1, 18.0));
        assert_eq!(fig1b().envelope.plateau, 200.0);
        assert_eq!(fig1c_2us().envelope.plateau, 2000.0);
    }

    #[test]
    fn plan_two_spacing() {
        let p = plan_two();
        assert_eq!((p.resonators[1].f_r - p.resonators[0].f_r).abs(), 50.0);
        assert!(p.pulses.iter().all(|q| q.envelope.duration() == 210.0));
    }

    #[test]
    fn lookup() {
        assert!(waveform("fig1b").is_ok());
        assert!(spectrum("fig1b").is_err());
        assert!(plan("plan-four").is_ok());
    }
}
