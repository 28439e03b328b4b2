//! Strict JSON configuration blocks for the figure runs.
//!
//! Every struct rejects unknown keys so a typo cannot silently fall back to
//! a default.

use serde::{Deserialize, Serialize};

use crate::dephasing::IntegrationGrid;
use crate::dispersive::DispersiveParams;
use crate::error::{Error, Result};
use crate::spectrum::uniform_grid;
use crate::waveform::{DragParams, EnvelopeSpec};

/// Inclusive uniform range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl LinearRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        LinearRange { start, stop, step }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        uniform_grid(self.start, self.stop, self.step)
    }
}

/// An axis given either as explicit values or as a range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range(LinearRange),
}

impl Axis {
    /// Range values are snapped to 12 decimals so `0.05·k` lands on the
    /// printed value.
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Axis::Values(v) => v.clone(),
            Axis::Range(r) => r.values()?.into_iter().map(|x| (x * 1e12).round() / 1e12).collect(),
        };
        if v.is_empty() {
            return Err(Error::invalid("axis", "no values"));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformConfig {
    pub envelope: EnvelopeSpec,
    pub drag: DragParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub envelope: EnvelopeSpec,
    pub drag: DragParams,
    /// Baseband grid, MHz.
    pub freqs: LinearRange,
    /// Frequency for the notch-depth summary; defaults to the notch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_mhz: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseyConfig {
    pub params: DispersiveParams,
    /// Pseudo-pulse shape; the plateau is replaced by each scanned τ.
    pub template: EnvelopeSpec,
    /// Plateau durations, ns.
    pub taus: LinearRange,
    pub amp_cal: f64,
    pub n_theta: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingMapConfig {
    pub params: DispersiveParams,
    pub envelope: EnvelopeSpec,
    pub amps: Axis,
    /// (ω_r − ω_d)/2π, MHz.
    pub detunings: Axis,
    pub amp_cal: f64,
    #[serde(default)]
    pub grid: IntegrationGrid,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let ok = r#"{"envelope": {"amplitude": 1, "rise_time": 5, "plateau": 200, "fall_time": 5, "sample_dt": 0.1},
                     "drag": {"notch_freq": 50, "enabled": true}}"#;
        assert!(serde_json::from_str::<WaveformConfig>(ok).is_ok());
        let typo = ok.replace("\"enabled\"", "\"enable\"");
        assert!(serde_json::from_str::<WaveformConfig>(&typo).is_err());
        let extra = ok.replace("\"drag\"", "\"colour\": 1, \"drag\"");
        assert!(serde_json::from_str::<WaveformConfig>(&extra).is_err());
    }

    #[test]
    fn axis_forms() {
        let a: Axis = serde_json::from_str("[1, 2.5]").unwrap();
        assert_eq!(a.values().unwrap(), vec![1.0, 2.5]);
        let r: Axis = serde_json::from_str(r#"{"start": 0, "stop": 1, "step": 0.05}"#).unwrap();
        let v = r.values().unwrap();
        assert_eq!(v.len(), 21);
        assert_eq!(v[3], 0.15);
        assert!(serde_json::from_str::<Axis>(r#"{"start": 0, "stop": 1, "step": 0.05, "x": 1}"#).is_err());
    }
}
