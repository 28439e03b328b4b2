//! Cosine-flattop probe envelopes and the DRAG quadrature transform.
//!
//! An envelope rises as `A(1 − cos(πt/t_r))/2`, holds `A` for the plateau,
//! and falls with the mirrored cosine. The DRAG-shaped pulse is
//! `W(t) + i·Ẇ(t)/η` with `η = 2π·notch_freq`, which zeroes the spectrum
//! of the continuum pulse at baseband frequency `+notch_freq`.
//!
//! Sample grids are closed on the left and open on the right:
//! `t_n = t_start + n·dt` for `n = 0..N`, with `N = round(total/dt) + 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;
use crate::C64;

/// Cosine-flattop envelope parameters. Times are in ns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    /// Normalized drive amplitude in `[0, 1]`.
    pub amplitude: f64,
    pub rise_time: f64,
    pub plateau: f64,
    pub fall_time: f64,
    pub sample_dt: f64,
}

impl EnvelopeSpec {
    pub fn new(amplitude: f64, rise_time: f64, plateau: f64, fall_time: f64, sample_dt: f64) -> Self {
        EnvelopeSpec {
            amplitude,
            rise_time,
            plateau,
            fall_time,
            sample_dt,
        }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        EnvelopeSpec { amplitude, ..self }
    }

    pub fn with_plateau(self, plateau: f64) -> Self {
        EnvelopeSpec { plateau, ..self }
    }

    /// Total duration in ns.
    pub fn duration(&self) -> f64 {
        self.rise_time + self.plateau + self.fall_time
    }

    pub fn num_samples(&self) -> usize {
        (self.duration() / self.sample_dt).round() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("amplitude", self.amplitude),
            ("rise_time", self.rise_time),
            ("plateau", self.plateau),
            ("fall_time", self.fall_time),
            ("sample_dt", self.sample_dt),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if !(0.0..=1.0).contains(&self.amplitude) {
            return Err(Error::invalid(
                "amplitude",
                format!("{} outside [0, 1]", self.amplitude),
            ));
        }
        for (name, v) in [
            ("rise_time", self.rise_time),
            ("plateau", self.plateau),
            ("fall_time", self.fall_time),
        ] {
            if v < 0.0 {
                return Err(Error::invalid(name, format!("negative duration {v} ns")));
            }
        }
        if self.duration() <= 0.0 {
            return Err(Error::invalid("plateau", "total duration must be positive"));
        }
        if self.sample_dt <= 0.0 {
            return Err(Error::invalid("sample_dt", "must be positive"));
        }
        let edges = [self.rise_time, self.fall_time];
        let shortest = edges.iter().copied().filter(|&e| e > 0.0).fold(f64::INFINITY, f64::min);
        if shortest.is_finite() && self.sample_dt > shortest / 10.0 {
            return Err(Error::invalid(
                "sample_dt",
                format!(
                    "{} ns leaves a {shortest} ns edge with fewer than 10 samples",
                    self.sample_dt
                ),
            ));
        }
        Ok(())
    }

    /// Analytic envelope `W(t)`, with `t` in ns measured from the pulse start.
    pub fn value_at(&self, t: f64) -> f64 {
        let a = self.amplitude;
        let fall_start = self.rise_time + self.plateau;
        if t < 0.0 || t > self.duration() {
            0.0
        } else if t < self.rise_time {
            a * (1.0 - (PI * t / self.rise_time).cos()) / 2.0
        } else if t <= fall_start {
            a
        } else {
            a * (1.0 + (PI * (t - fall_start) / self.fall_time).cos()) / 2.0
        }
    }

    /// Analytic time derivative `Ẇ(t)` in 1/ns.
    pub fn derivative_at(&self, t: f64) -> f64 {
        let a = self.amplitude;
        let fall_start = self.rise_time + self.plateau;
        if t < 0.0 || t > self.duration() {
            0.0
        } else if t < self.rise_time {
            a * PI / (2.0 * self.rise_time) * (PI * t / self.rise_time).sin()
        } else if t <= fall_start {
            0.0
        } else {
            -a * PI / (2.0 * self.fall_time) * (PI * (t - fall_start) / self.fall_time).sin()
        }
    }

    fn sample_with(&self, f: impl Fn(&Self, f64) -> f64) -> Result<IQWaveform> {
        self.validate()?;
        let dt = self.sample_dt;
        let samples = (0..self.num_samples())
            .map(|n| C64::new(f(self, n as f64 * dt), 0.0))
            .collect();
        IQWaveform::new(samples, dt, 0.0)
    }
}

/// Uniformly sampled complex baseband envelope. `dt` and `t_start` are in ns.
#[derive(Clone, Debug, PartialEq)]
pub struct IQWaveform {
    samples: Vec<C64>,
    dt: f64,
    t_start: f64,
}

impl IQWaveform {
    pub fn new(samples: Vec<C64>, dt: f64, t_start: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "waveform must have at least one sample"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        if !t_start.is_finite() {
            return Err(Error::invalid("t_start", "must be finite"));
        }
        Ok(IQWaveform { samples, dt, t_start })
    }

    pub fn zeros(len: usize, dt: f64) -> Result<Self> {
        Self::new(vec![C64::new(0.0, 0.0); len], dt, 0.0)
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t_start + n as f64 * self.dt
    }

    /// Span from first to last sample, in ns.
    pub fn span(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    pub fn energy(&self) -> f64 {
        waveform_energy(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: C64) -> IQWaveform {
        IQWaveform {
            samples: self.samples.iter().map(|&s| s * c).collect(),
            ..*self
        }
    }

    pub fn same_grid(&self, other: &IQWaveform) -> bool {
        self.len() == other.len() && self.dt == other.dt && self.t_start == other.t_start
    }

    /// CSV with header `t_ns,i,q`.
    pub fn to_csv(&self) -> String {
        crate::io::csv(
            &["t_ns", "i", "q"],
            self.samples.iter().enumerate().map(|(n, s)| [self.time(n), s.re, s.im]),
        )
    }
}

/// DRAG configuration. `notch_freq` is an ordinary frequency in MHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragParams {
    pub notch_freq: f64,
    pub enabled: bool,
}

impl DragParams {
    pub fn off() -> Self {
        DragParams {
            notch_freq: 0.0,
            enabled: false,
        }
    }

    pub fn notch(notch_freq: f64) -> Self {
        DragParams {
            notch_freq,
            enabled: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.notch_freq.is_finite() {
            return Err(Error::invalid("notch_freq", "must be finite"));
        }
        if self.enabled && self.notch_freq == 0.0 {
            return Err(Error::UndefinedNotch);
        }
        Ok(())
    }

    /// Angular notch frequency in rad/ns, matching derivatives in 1/ns.
    pub fn eta(&self) -> f64 {
        units::angular_per_ns(self.notch_freq)
    }
}

impl Default for DragParams {
    fn default() -> Self {
        Self::off()
    }
}

pub fn sample_envelope(spec: &EnvelopeSpec) -> Result<IQWaveform> {
    spec.sample_with(EnvelopeSpec::value_at)
}

/// Analytic derivative of the envelope on the same grid, in 1/ns.
pub fn envelope_derivative(spec: &EnvelopeSpec) -> Result<IQWaveform> {
    spec.sample_with(EnvelopeSpec::derivative_at)
}

/// Returns `W + i·Ẇ/η`, or `W` unchanged when DRAG is disabled.
pub fn apply_drag(envelope: &IQWaveform, derivative: &IQWaveform, drag: &DragParams) -> Result<IQWaveform> {
    drag.validate()?;
    if !envelope.same_grid(derivative) {
        return Err(Error::GridMismatch(format!(
            "envelope has {} samples at dt={} from t={}, derivative has {} at dt={} from t={}",
            envelope.len(),
            envelope.dt,
            envelope.t_start,
            derivative.len(),
            derivative.dt,
            derivative.t_start
        )));
    }
    if !drag.enabled {
        return Ok(envelope.clone());
    }
    let scale = C64::new(0.0, 1.0 / drag.eta());
    let samples = envelope
        .samples
        .iter()
        .zip(&derivative.samples)
        .map(|(&w, &dw)| w + dw * scale)
        .collect();
    Ok(IQWaveform { samples, ..*envelope })
}

/// Rectangle-rule energy `dt·Σ|sₙ|²`, in ns.
pub fn waveform_energy(wf: &IQWaveform) -> f64 {
    wf.dt * wf.samples.iter().map(|s| s.norm_sqr()).sum::<f64>()
}

/// A probe pulse together with the plain envelope it was shaped from.
///
/// The plain envelope fixes the spectral normalization used by the dephasing
/// integral, so DRAG and non-DRAG variants share one amplitude calibration.
#[derive(Clone, Debug)]
pub struct ProbePulse {
    pub spec: EnvelopeSpec,
    pub drag: DragParams,
    pub envelope: IQWaveform,
    pub shaped: IQWaveform,
}

impl ProbePulse {
    pub fn new(spec: EnvelopeSpec, drag: DragParams) -> Result<Self> {
        let envelope = sample_envelope(&spec)?;
        let derivative = envelope_derivative(&spec)?;
        let shaped = apply_drag(&envelope, &derivative, &drag)?;
        Ok(ProbePulse {
            spec,
            drag,
            envelope,
            shaped,
        })
    }

    /// Equivalent rectangular duration `energy(W)/max|W|²` in µs; zero for an
    /// all-zero envelope.
    pub fn effective_duration_us(&self) -> f64 {
        let peak = self.envelope.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        units::ns_to_us(self.envelope.energy() / (peak * peak))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> EnvelopeSpec {
        EnvelopeSpec::new(1.0, 5.0, 200.0, 5.0, 0.1)
    }

    #[test]
    fn boundary_and_plateau_values() {
        let s = spec();
        assert_eq!(s.value_at(0.0), 0.0);
        assert_eq!(s.value_at(105.0), 1.0);
        assert!((s.value_at(2.5) - 0.5).abs() < 1e-15);
        assert!((s.value_at(207.5) - 0.5).abs() < 1e-15);
        assert!(s.value_at(210.0).abs() < 1e-15);
        assert_eq!(s.value_at(-1.0), 0.0);
        assert_eq!(s.value_at(211.0), 0.0);
    }

    #[test]
    fn derivative_peaks_mid_edge() {
        let s = spec().with_amplitude(0.4);
        assert_eq!(s.derivative_at(100.0), 0.0);
        let expect = 0.4 * PI / 10.0;
        assert!((s.derivative_at(2.5) - expect).abs() < 1e-15);
        assert!((s.derivative_at(207.5) + expect).abs() < 1e-15);
    }

    #[test]
    fn sample_count_and_energy() {
        let wf = sample_envelope(&spec()).unwrap();
        assert_eq!(wf.len(), 2101);
        assert!((wf.span() - 210.0).abs() < 1e-9);
        // continuum: A²(plateau + 3/8 (rise + fall))
        let continuum = 200.0 + 3.0 / 8.0 * 10.0;
        assert!((wf.energy() / continuum - 1.0).abs() < 5e-3);
    }

    #[test]
    fn validation_names_field() {
        let bad = [
            (
                EnvelopeSpec {
                    rise_time: -1.0,
                    ..spec()
                },
                "rise_time",
            ),
            (
                EnvelopeSpec {
                    sample_dt: 0.0,
                    ..spec()
                },
                "sample_dt",
            ),
            (
                EnvelopeSpec {
                    sample_dt: 1.0,
                    ..spec()
                },
                "sample_dt",
            ),
            (
                EnvelopeSpec {
                    amplitude: 1.5,
                    ..spec()
                },
                "amplitude",
            ),
            (EnvelopeSpec::new(1.0, 0.0, 0.0, 0.0, 0.1), "plateau"),
        ];
        for (s, field) in bad {
            match sample_envelope(&s) {
                Err(Error::Validation { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected validation error on {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn square_pulse_needs_no_edge_resolution() {
        let s = EnvelopeSpec::new(1.0, 0.0, 100.0, 0.0, 1.0);
        let wf = sample_envelope(&s).unwrap();
        assert_eq!(wf.len(), 101);
        assert!((wf.energy() - 101.0).abs() < 1e-12);
    }

    #[test]
    fn constant_unit_waveform_energy() {
        let wf = IQWaveform::new(vec![C64::new(1.0, 0.0); 100], 1.0, 0.0).unwrap();
        assert_eq!(waveform_energy(&wf), 100.0);
        assert_eq!(waveform_energy(&IQWaveform::zeros(10, 0.5).unwrap()), 0.0);
    }

    #[test]
    fn drag_quadrature_vanishes_on_plateau() {
        let p = ProbePulse::new(spec(), DragParams::notch(50.0)).unwrap();
        for n in 60..2040 {
            assert_eq!(p.shaped.samples()[n].im, 0.0, "sample {n}");
        }
        assert!(p.shaped.samples()[25].im > 0.0);
    }

    #[test]
    fn drag_disabled_is_identity() {
        let env = sample_envelope(&spec()).unwrap();
        let der = envelope_derivative(&spec()).unwrap();
        assert_eq!(apply_drag(&env, &der, &DragParams::off()).unwrap(), env);
    }

    #[test]
    fn zero_notch_is_undefined() {
        let env = sample_envelope(&spec()).unwrap();
        let der = envelope_derivative(&spec()).unwrap();
        let drag = DragParams::notch(0.0);
        assert_eq!(apply_drag(&env, &der, &drag), Err(Error::UndefinedNotch));
    }

    #[test]
    fn mismatched_grid_rejected() {
        let env = sample_envelope(&spec()).unwrap();
        let der = envelope_derivative(&spec().with_plateau(100.0)).unwrap();
        assert!(matches!(
            apply_drag(&env, &der, &DragParams::notch(50.0)),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn huge_notch_approaches_identity() {
        // 10⁶ × the ~5 MHz spectral width of a 210 ns pulse
        let p = ProbePulse::new(spec(), DragParams::notch(5.0e6)).unwrap();
        let rel = (p.shaped.energy() - p.envelope.energy()) / p.envelope.energy();
        assert!(rel.abs() < 1e-4, "rel = {rel}");
    }

    #[test]
    fn drag_energy_increase_is_quadrature_sum() {
        let s = EnvelopeSpec::new(1.0, 5.0, 2000.0, 5.0, 0.1);
        let p = ProbePulse::new(s, DragParams::notch(13.0)).unwrap();
        let der = envelope_derivative(&s).unwrap();
        let eta = DragParams::notch(13.0).eta();
        let oracle: f64 = s.sample_dt * der.samples().iter().map(|d| (d.re / eta).powi(2)).sum::<f64>();
        let increase = p.shaped.energy() - p.envelope.energy();
        assert!((increase - oracle).abs() <= 1e-9 * oracle);
        assert!(increase / p.envelope.energy() < 0.05);
    }

    #[test]
    fn central_difference_matches_analytic_derivative() {
        let s = spec();
        let wf = sample_envelope(&s).unwrap();
        let der = envelope_derivative(&s).unwrap();
        let dt = s.sample_dt;
        let w2max = s.amplitude * PI * PI / (2.0 * s.rise_time * s.rise_time);
        let joins = [0.0, 5.0, 205.0, 210.0];
        for n in 1..wf.len() - 1 {
            let t = wf.time(n);
            if joins.iter().any(|j| (t - j).abs() < 1.5 * dt) {
                continue;
            }
            let fd = (wf.samples()[n + 1].re - wf.samples()[n - 1].re) / (2.0 * dt);
            let err = (fd - der.samples()[n].re).abs();
            assert!(err <= 10.0 * dt * dt * w2max, "t = {t}: err {err}");
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let wf = sample_envelope(&EnvelopeSpec::new(0.0, 1.0, 1.0, 1.0, 0.1)).unwrap();
        let csv = wf.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t_ns,i,q"));
        assert_eq!(lines.count(), wf.len());
        assert!(!csv.contains('\r'));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pulse_spec() -> impl Strategy<Value = EnvelopeSpec> {
            (0.05f64..1.0, 2.0f64..30.0, 0.0f64..100.0, 2.0f64..30.0)
                .prop_map(|(a, rise, plateau, fall)| EnvelopeSpec::new(a, rise, plateau, fall, 0.1))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn drag_is_linear(spec in pulse_spec(), notch in prop_oneof![-300.0f64..-5.0, 5.0f64..300.0]) {
                let drag = DragParams::notch(notch);
                let w = sample_envelope(&spec).unwrap();
                let d = envelope_derivative(&spec).unwrap();
                let base = apply_drag(&w, &d, &drag).unwrap();
                for c in [2.0, -1.0] {
                    let scaled = apply_drag(&w.scaled(C64::new(c, 0.0)), &d.scaled(C64::new(c, 0.0)), &drag).unwrap();
                    for (x, y) in scaled.samples().iter().zip(base.samples()) {
                        prop_assert!((x - y * c).norm() <= 1e-12 * (y * c).norm().max(1e-300));
                    }
                }
            }

            #[test]
            fn drag_departs_by_at_most_derivative_over_eta(
                spec in pulse_spec(),
                notch in prop_oneof![-300.0f64..-5.0, 5.0f64..300.0],
            ) {
                let drag = DragParams::notch(notch);
                let w = sample_envelope(&spec).unwrap();
                let d = envelope_derivative(&spec).unwrap();
                let out = apply_drag(&w, &d, &drag).unwrap();
                for ((o, x), dx) in out.samples().iter().zip(w.samples()).zip(d.samples()) {
                    prop_assert!((o - x).norm() <= dx.norm() / drag.eta().abs() * (1.0 + 1e-12));
                }
            }

            #[test]
            fn drag_never_lowers_energy(spec in pulse_spec(), notch in prop_oneof![-300.0f64..-5.0, 5.0f64..300.0]) {
                let p = ProbePulse::new(spec, DragParams::notch(notch)).unwrap();
                prop_assert!(p.shaped.energy() > p.envelope.energy());
            }

            #[test]
            fn analytic_derivative_matches_central_difference(spec in pulse_spec(), frac in 0.05f64..0.95) {
                // away from joins: inside the rise edge
                let t = frac * spec.rise_time;
                let h = 1e-3;
                let fd = (spec.value_at(t + h) - spec.value_at(t - h)) / (2.0 * h);
                let second = spec.amplitude * (PI / spec.rise_time).powi(2) / 2.0;
                prop_assert!((fd - spec.derivative_at(t)).abs() <= 10.0 * h * h * second + 1e-12);
            }
        }
    }
}
