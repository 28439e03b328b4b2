//! Direct-summation spectra on arbitrary frequency grids.
//!
//! `S(f) = dt·Σₙ sₙ·exp(−i·2π·f·tₙ)` with `f` in MHz and `tₙ` in ns, so
//! amplitudes carry units of ns. With this sign, the DRAG zero of
//! [`crate::waveform::apply_drag`] lands at `f = +notch_freq`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::units;
use crate::waveform::IQWaveform;
use crate::C64;

/// Samples between exact phasor re-anchoring in the rotation recurrence.
const REANCHOR: usize = 256;

/// Complex spectral amplitudes on an explicit, strictly increasing grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumGrid {
    pub freqs: Vec<f64>,
    pub amps: Vec<C64>,
}

impl SpectrumGrid {
    pub fn magnitudes(&self) -> impl Iterator<Item = f64> + '_ {
        self.amps.iter().map(|a| a.norm())
    }

    /// CSV with header `f_mhz,re,im,abs_db`; `abs_db` is relative to
    /// `reference` (a pulse's own DC magnitude by convention).
    pub fn to_csv(&self, reference: f64) -> String {
        crate::io::csv(
            &["f_mhz", "re", "im", "abs_db"],
            self.freqs
                .iter()
                .zip(&self.amps)
                .map(|(&f, a)| [f, a.re, a.im, 20.0 * (a.norm() / reference).log10()]),
        )
    }
}

/// Uniform grid `start, start + step, …` up to and including `stop` (to
/// within a hundredth of a step).
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("step", "must be positive"));
    }
    if !(stop >= start) {
        return Err(Error::invalid("stop", "must not precede start"));
    }
    let n = ((stop - start) / step + 0.01).floor() as usize + 1;
    Ok((0..n).map(|k| start + k as f64 * step).collect())
}

/// Single-frequency transform.
pub fn dtft_at(wf: &IQWaveform, f_mhz: f64) -> C64 {
    let samples = wf.samples();
    let dt = wf.dt();
    let rot = C64::from_polar(1.0, -units::phase(f_mhz, dt));
    let mut acc = C64::new(0.0, 0.0);
    for (block, chunk) in samples.chunks(REANCHOR).enumerate() {
        let t0 = wf.time(block * REANCHOR);
        let mut w = C64::from_polar(1.0, -units::phase(f_mhz, t0));
        for &s in chunk {
            acc += s * w;
            w *= rot;
        }
    }
    acc * dt
}

/// Transform at every frequency in `freqs`. Each frequency is an independent
/// sequential sum, so the result does not depend on thread scheduling.
pub fn dtft(wf: &IQWaveform, freqs: &[f64]) -> Result<SpectrumGrid> {
    if freqs.is_empty() {
        return Err(Error::invalid("freqs", "frequency list is empty"));
    }
    if freqs.iter().any(|f| !f.is_finite()) {
        return Err(Error::invalid("freqs", "frequencies must be finite"));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("freqs", "frequencies must be strictly increasing"));
    }
    let amps = freqs.par_iter().map(|&f| dtft_at(wf, f)).collect();
    Ok(SpectrumGrid {
        freqs: freqs.to_vec(),
        amps,
    })
}

/// `20·log10(|S_drag(f)| / |S_plain(f)|)`; negative values mean suppression.
pub fn notch_depth(plain: &IQWaveform, dragged: &IQWaveform, f_mhz: f64) -> Result<f64> {
    if f_mhz == 0.0 || !f_mhz.is_finite() {
        return Err(Error::invalid("f", "notch-depth frequency must be nonzero and finite"));
    }
    let reference = dtft_at(plain, f_mhz).norm();
    if reference == 0.0 {
        return Err(Error::Domain(format!("plain spectrum vanishes at {f_mhz} MHz")));
    }
    Ok(20.0 * (dtft_at(dragged, f_mhz).norm() / reference).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{DragParams, EnvelopeSpec, ProbePulse};
    use proptest::prelude::*;

    fn pulse(plateau: f64, notch: f64) -> ProbePulse {
        ProbePulse::new(EnvelopeSpec::new(1.0, 5.0, plateau, 5.0, 0.1), DragParams::notch(notch)).unwrap()
    }

    /// Independent oracle: one `sin_cos` per sample, no recurrence.
    fn dtft_direct(wf: &IQWaveform, f: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (n, &s) in wf.samples().iter().enumerate() {
            acc += s * C64::from_polar(1.0, -std::f64::consts::TAU * f * wf.time(n) * 1e-3);
        }
        acc * wf.dt()
    }

    #[test]
    fn recurrence_matches_direct_sum() {
        let p = pulse(200.0, 50.0);
        for f in [-731.3, -50.0, 0.0, 3.7, 50.0, 499.9] {
            let a = dtft_at(&p.shaped, f);
            let b = dtft_direct(&p.shaped, f);
            assert!((a - b).norm() <= 1e-11 * b.norm().max(1.0), "f = {f}");
        }
    }

    #[test]
    fn dc_value_is_area() {
        let p = pulse(200.0, 50.0);
        let area: C64 = p.envelope.samples().iter().sum::<C64>() * p.envelope.dt();
        assert!((dtft_at(&p.envelope, 0.0) - area).norm() < 1e-12 * area.norm());
    }

    #[test]
    fn tone_peaks_at_its_frequency() {
        let f0 = 12.5;
        let dt = 0.5;
        let samples = (0..2000)
            .map(|n| C64::from_polar(1.0, units::phase(f0, n as f64 * dt)))
            .collect();
        let wf = IQWaveform::new(samples, dt, 0.0).unwrap();
        let freqs = uniform_grid(0.0, 25.0, 0.05).unwrap();
        let s = dtft(&wf, &freqs).unwrap();
        let (k, _) = s
            .magnitudes()
            .enumerate()
            .fold((0, 0.0), |best, (k, m)| if m > best.1 { (k, m) } else { best });
        assert!((freqs[k] - f0).abs() < 1e-9);
    }

    #[test]
    fn drag_notch_sits_at_positive_frequency() {
        let p = pulse(200.0, 50.0);
        let pos = notch_depth(&p.envelope, &p.shaped, 50.0).unwrap();
        let neg = notch_depth(&p.envelope, &p.shaped, -50.0).unwrap();
        assert!(pos < -40.0, "{pos}");
        // mirror side is amplified by |1 + 1| = 2
        assert!((neg - 20.0 * 2f64.log10()).abs() < 0.05, "{neg}");
    }

    #[test]
    fn notch_depth_identity_and_errors() {
        let p = pulse(200.0, 50.0);
        assert_eq!(notch_depth(&p.envelope, &p.envelope, 50.0).unwrap(), 0.0);
        assert!(notch_depth(&p.envelope, &p.shaped, 0.0).is_err());
        let zero = IQWaveform::zeros(10, 0.1).unwrap();
        assert!(matches!(notch_depth(&zero, &zero, 5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn long_pulse_notch() {
        let p = pulse(2000.0, 50.0);
        assert!(notch_depth(&p.envelope, &p.shaped, 50.0).unwrap() <= -40.0);
    }

    #[test]
    fn continuum_notch_identity() {
        let p = pulse(200.0, 50.0);
        let freqs = uniform_grid(-500.0, 500.0, 0.25).unwrap();
        let plain = dtft(&p.envelope, &freqs).unwrap();
        let drag = dtft(&p.shaped, &freqs).unwrap();
        let peak = plain.magnitudes().fold(0.0, f64::max);
        for ((f, p), d) in freqs.iter().zip(&plain.amps).zip(&drag.amps) {
            let err = (d - p * (1.0 - f / 50.0)).norm();
            assert!(err <= 1e-3 * peak, "f = {f}: {err}");
        }
    }

    #[test]
    fn discrete_parseval_over_one_period() {
        let p = pulse(200.0, 50.0);
        let wf = &p.shaped;
        let period = 1e3 / wf.dt();
        let step = 1e3 / (10.0 * wf.span());
        let m = (period / step).ceil() as usize;
        let df = period / m as f64;
        let freqs: Vec<f64> = (0..m).map(|k| -period / 2.0 + k as f64 * df).collect();
        let s = dtft(wf, &freqs).unwrap();
        let spectral: f64 = s.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * df * 1e-3;
        let temporal = wf.energy();
        assert!((spectral / temporal - 1.0).abs() < 1e-3);
    }

    #[test]
    fn grid_validation() {
        let wf = IQWaveform::zeros(4, 1.0).unwrap();
        assert!(dtft(&wf, &[]).is_err());
        assert!(dtft(&wf, &[1.0, 1.0]).is_err());
        assert!(dtft(&wf, &[2.0, 1.0]).is_err());
        assert_eq!(uniform_grid(0.0, 1.0, 0.25).unwrap().len(), 5);
    }

    proptest! {
        #[test]
        fn conjugate_symmetry_for_real_waveforms(
            vals in prop::collection::vec(-1.0f64..1.0, 4..64),
            f in 0.1f64..400.0,
        ) {
            let wf = IQWaveform::new(vals.iter().map(|&v| C64::new(v, 0.0)).collect(), 0.3, 1.7).unwrap();
            let pos = dtft_at(&wf, f);
            let neg = dtft_at(&wf, -f);
            let scale = pos.norm().max(1e-300);
            prop_assert!((neg - pos.conj()).norm() <= 1e-12 * scale.max(wf.energy().sqrt()));
        }

        #[test]
        fn dtft_is_linear(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
            b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
            c in -3.0f64..3.0,
            f in -200.0f64..200.0,
        ) {
            let mk = |v: &[(f64, f64)]| IQWaveform::new(v.iter().map(|&(r, i)| C64::new(r, i)).collect(), 0.5, 0.0).unwrap();
            let (wa, wb) = (mk(&a), mk(&b));
            let sum: Vec<C64> = wa.samples().iter().zip(wb.samples()).map(|(x, y)| x * c + y).collect();
            let ws = IQWaveform::new(sum, 0.5, 0.0).unwrap();
            let lhs = dtft_at(&ws, f);
            let rhs = dtft_at(&wa, f) * c + dtft_at(&wb, f);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()) * 16.0);
        }
    }
}
