//! End-to-end runs behind each CLI command: build the pulses from a config,
//! compute, and summarize. File output is left to the caller.

use serde::Serialize;

use crate::config::{DephasingMapConfig, RamseyConfig, SpectrumConfig, WaveformConfig};
use crate::dephasing::{dephasing_map, DephasingMap};
use crate::error::{Error, Result};
use crate::ramsey::{
    dominant_frequency, fit_decay, fit_envelope_decay, modulation_depth, scan_plateau, BeatingScan, DecayFit,
    NoiseModel,
};
use crate::spectrum::{dtft, dtft_at, notch_depth, SpectrumGrid};
use crate::units;
use crate::waveform::ProbePulse;

#[derive(Clone, Debug, Serialize)]
pub struct WaveformSummary {
    pub samples: usize,
    pub duration_ns: f64,
    pub energy_plain: f64,
    pub energy_shaped: f64,
    pub drag_enabled: bool,
    pub notch_freq_mhz: f64,
}

pub fn run_waveform(cfg: &WaveformConfig) -> Result<(ProbePulse, WaveformSummary)> {
    let pulse = ProbePulse::new(cfg.envelope, cfg.drag)?;
    let summary = WaveformSummary {
        samples: pulse.envelope.len(),
        duration_ns: cfg.envelope.duration(),
        energy_plain: pulse.envelope.energy(),
        energy_shaped: pulse.shaped.energy(),
        drag_enabled: cfg.drag.enabled,
        notch_freq_mhz: cfg.drag.notch_freq,
    };
    Ok((pulse, summary))
}

#[derive(Clone, Debug)]
pub struct SpectrumRun {
    pub plain: SpectrumGrid,
    pub shaped: SpectrumGrid,
    /// `|S_plain(0)|`, the dB reference for both spectra.
    pub reference: f64,
    pub summary: SpectrumSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSummary {
    pub probe_mhz: Option<f64>,
    pub notch_depth_db: Option<f64>,
    pub points: usize,
}

pub fn run_spectrum(cfg: &SpectrumConfig) -> Result<SpectrumRun> {
    let pulse = ProbePulse::new(cfg.envelope, cfg.drag)?;
    let freqs = cfg.freqs.values()?;
    let plain = dtft(&pulse.envelope, &freqs)?;
    let shaped = dtft(&pulse.shaped, &freqs)?;
    let reference = dtft_at(&pulse.envelope, 0.0).norm();
    if reference == 0.0 {
        return Err(Error::Domain("pulse has zero area; no dB reference".into()));
    }
    let probe = cfg
        .probe_mhz
        .or((cfg.drag.notch_freq != 0.0).then_some(cfg.drag.notch_freq));
    let depth = probe
        .map(|f| notch_depth(&pulse.envelope, &pulse.shaped, f))
        .transpose()?;
    Ok(SpectrumRun {
        summary: SpectrumSummary {
            probe_mhz: probe,
            notch_depth_db: depth,
            points: freqs.len(),
        },
        plain,
        shaped,
        reference,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanSummary {
    /// Decay of the per-beat maxima, µs.
    pub t2_eff_us: f64,
    /// Decay fitted to every point, µs.
    pub t2_eff_all_points_us: f64,
    pub c0: f64,
    pub modulation_depth: f64,
    pub dominant_freq_mhz: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RamseySummary {
    pub beat_period_ns: f64,
    pub plain: ScanSummary,
    pub drag: Option<ScanSummary>,
    /// No-DRAG over DRAG modulation depth.
    pub depth_ratio: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RamseyRun {
    pub plain: BeatingScan,
    pub drag: Option<BeatingScan>,
    pub summary: RamseySummary,
}

fn summarize_scan(scan: &BeatingScan, period_ns: f64) -> Result<ScanSummary> {
    let c = scan.contrasts();
    let all: DecayFit = fit_decay(&scan.taus, &c)?;
    let span = scan.taus[scan.taus.len() - 1] - scan.taus[0];
    let env = if period_ns * 2.0 <= span {
        fit_envelope_decay(&scan.taus, &c, period_ns)?
    } else {
        all
    };
    Ok(ScanSummary {
        t2_eff_us: env.t2_eff,
        t2_eff_all_points_us: all.t2_eff,
        c0: env.c0,
        modulation_depth: modulation_depth(&scan.taus, &c, period_ns),
        dominant_freq_mhz: dominant_frequency(&scan.taus, &c)?,
    })
}

/// Paired no-DRAG / DRAG plateau scans. At zero detuning the DRAG scan is
/// skipped with a warning because its notch would be undefined.
pub fn run_ramsey(cfg: &RamseyConfig) -> Result<RamseyRun> {
    let taus = cfg.taus.values()?;
    if taus.len() < 4 {
        return Err(Error::invalid("taus", "need at least 4 plateau durations"));
    }
    let noise = NoiseModel {
        sigma: cfg.noise_sigma,
        seed: cfg.seed,
    };
    let span = taus[taus.len() - 1] - taus[0];
    let period = if cfg.params.delta_d != 0.0 {
        units::NS_PER_US / cfg.params.delta_d.abs()
    } else {
        span
    };
    let plain = scan_plateau(
        &cfg.params,
        &cfg.template,
        &taus,
        false,
        cfg.amp_cal,
        cfg.n_theta,
        &noise,
    )?;
    let mut warnings = Vec::new();
    let drag = if cfg.params.delta_d != 0.0 {
        Some(scan_plateau(
            &cfg.params,
            &cfg.template,
            &taus,
            true,
            cfg.amp_cal,
            cfg.n_theta,
            &noise,
        )?)
    } else {
        warnings.push("zero detuning: DRAG scan omitted".to_string());
        None
    };
    let plain_summary = summarize_scan(&plain, period)?;
    let drag_summary = drag.as_ref().map(|s| summarize_scan(s, period)).transpose()?;
    let depth_ratio = drag_summary
        .as_ref()
        .map(|d| plain_summary.modulation_depth / d.modulation_depth);
    Ok(RamseyRun {
        summary: RamseySummary {
            beat_period_ns: period,
            plain: plain_summary,
            drag: drag_summary,
            depth_ratio,
            warnings,
        },
        plain,
        drag,
    })
}

#[derive(Clone, Debug)]
pub struct MapRun {
    pub plain: DephasingMap,
    pub drag: DephasingMap,
    /// Detunings dropped from the DRAG map.
    pub omitted: Vec<f64>,
}

/// No-DRAG and DRAG maps on the same grid, minus zero detuning for DRAG.
pub fn run_dephasing_maps(cfg: &DephasingMapConfig) -> Result<MapRun> {
    let amps = cfg.amps.values()?;
    let detunings = cfg.detunings.values()?;
    if detunings.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("detunings", "must be strictly increasing"));
    }
    let (kept, omitted): (Vec<f64>, Vec<f64>) = detunings.iter().partition(|&&d| d != 0.0);
    let plain = dephasing_map(
        &cfg.params,
        &cfg.envelope,
        &amps,
        &detunings,
        false,
        cfg.amp_cal,
        &cfg.grid,
    )?;
    let drag = dephasing_map(&cfg.params, &cfg.envelope, &amps, &kept, true, cfg.amp_cal, &cfg.grid)?;
    Ok(MapRun { plain, drag, omitted })
}
