//! Built-in acceptance suite shared by `selftest` and the test target.
//!
//! Each criterion returns a [`CriterionResult`]; a criterion passes only if
//! its numerical checks hold and it finishes within its time budget.

use std::time::Instant;

use serde::Serialize;

use crate::config::{Axis, LinearRange};
use crate::crosstalk::{select_and_report, CrosstalkReport, FrequencyPlan};
use crate::dephasing::{monochromatic_rate, spectral_rate, IntegrationGrid};
use crate::dispersive::{
    drive_strength, fit_s21, s21_response, simulate_cavity, snr_proxy, steady_state_alpha, QubitState,
};
use crate::error::{Error, Result};
use crate::io::to_sorted_json;
use crate::presets;
use crate::ramsey::{fit_decay, fit_sinusoid, scan_plateau, NoiseModel};
use crate::runs::{run_dephasing_maps, run_ramsey};
use crate::spectrum::{dtft, notch_depth, uniform_grid};
use crate::units;
use crate::waveform::{DragParams, EnvelopeSpec, IQWaveform, ProbePulse};
use crate::C64;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_s: f64,
    pub limit_s: Option<f64>,
}

impl CriterionResult {
    /// `PASS A1 notch depth (0.12 s): ...`
    pub fn line(&self) -> String {
        format!(
            "{} {} {} ({:.2} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_s,
            self.detail
        )
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// Times `body`, which returns `(checks passed, detail)`. Errors count as
/// failures with the error text as detail.
fn timed(
    id: &'static str,
    name: &'static str,
    limit_s: Option<f64>,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> CriterionResult {
    let start = Instant::now();
    let outcome = body();
    let elapsed_s = start.elapsed().as_secs_f64();
    let (ok, mut detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    let in_time = limit_s.is_none_or(|l| elapsed_s < l);
    if !in_time {
        detail.push_str(&format!("; over the {:.0} s budget", limit_s.unwrap_or_default()));
    }
    CriterionResult {
        id,
        name,
        passed: ok && in_time,
        detail,
        elapsed_s,
        limit_s,
    }
}

/// DRAG suppresses the 50 MHz component by at least 40 dB for both the
/// 200 ns and the 2 µs readout. The budget applies per pulse.
pub fn a1_notch_depth() -> CriterionResult {
    let start = Instant::now();
    let mut worst_elapsed: f64 = 0.0;
    let mut parts = Vec::new();
    let mut ok = true;
    for (label, cfg) in [
        ("fig1c-200ns", presets::fig1c_200ns()),
        ("fig1c-2us", presets::fig1c_2us()),
    ] {
        let t = Instant::now();
        let depth = ProbePulse::new(cfg.envelope, cfg.drag).and_then(|p| notch_depth(&p.envelope, &p.shaped, 50.0));
        worst_elapsed = worst_elapsed.max(t.elapsed().as_secs_f64());
        match depth {
            Ok(d) => {
                ok &= d <= -40.0;
                parts.push(format!("{label} {d:.1} dB"));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{label} error: {e}"));
            }
        }
    }
    let in_time = worst_elapsed < 1.0;
    CriterionResult {
        id: "A1",
        name: "notch depth",
        passed: ok && in_time,
        detail: format!(
            "{} (limit -40 dB, slowest {worst_elapsed:.3} s of 1 s)",
            parts.join(", ")
        ),
        elapsed_s: start.elapsed().as_secs_f64(),
        limit_s: Some(1.0),
    }
}

/// `|Γ'/Γ − 1|` at 1, 3 and 10 MHz for a 2 µs plateau with the given
/// cosine edges (ns).
pub fn long_pulse_deviation(edge_ns: f64, dt: f64) -> Result<Vec<(f64, f64)>> {
    let amp_cal = 2.0;
    let pulse = ProbePulse::new(EnvelopeSpec::new(1.0, edge_ns, 2000.0, edge_ns, dt), DragParams::off())?;
    [1.0, 3.0, 10.0]
        .iter()
        .map(|&d| {
            let p = presets::device(d);
            let broad = spectral_rate(&p, &pulse, amp_cal, &IntegrationGrid::default())?;
            Ok((
                d,
                rel(broad, monochromatic_rate(&p, drive_strength(&p, amp_cal).norm())),
            ))
        })
        .collect()
}

/// Broadened rate of the 2 µs readout tracks the monochromatic rate. The
/// detail also reports a 1 µs-edge pulse, whose spectrum stays narrow.
pub fn a2_long_pulse() -> CriterionResult {
    timed("A2", "long-pulse consistency", Some(5.0), || {
        let fmt = |v: &[(f64, f64)]| {
            v.iter()
                .map(|(d, r)| format!("{d} MHz {:.1}%", 100.0 * r))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let sharp = long_pulse_deviation(presets::EDGE_NS, 0.1)?;
        let smooth = long_pulse_deviation(1000.0, 0.5)?;
        let worst = sharp.iter().map(|x| x.1).fold(0.0, f64::max);
        Ok((
            worst <= 0.05,
            format!("5 ns edges: {} (limit 5%); 1 µs edges: {}", fmt(&sharp), fmt(&smooth)),
        ))
    })
}

/// Pointer-state identity on a 5×5 grid, and the simulator reaching the
/// closed-form steady state.
pub fn a3_steady_state() -> CriterionResult {
    timed("A3", "steady-state identity", Some(10.0), || {
        let mut worst_identity: f64 = 0.0;
        for d in [-7.0, -1.05, 0.0, 0.4, 3.0] {
            for a in [0.01, 0.1, 0.5, 1.0, 3.0] {
                let p = presets::device(d);
                let eps = drive_strength(&p, a);
                let (g, e) = steady_state_alpha(&p, eps);
                let pointer = 2.0 * p.chi_ang() * (g * e.conj()).im;
                worst_identity = worst_identity.max(rel(pointer, monochromatic_rate(&p, eps.norm())));
            }
        }
        let mut worst_sim: f64 = 0.0;
        for d in [-3.0, 0.0, 5.0] {
            let p = presets::device(d);
            let t_end = units::us_to_ns(10.0 / p.kappa);
            let dt = 0.5;
            // odd count: no zero pad inside the last step
            let n = 2 * (t_end / (2.0 * dt)).round() as usize + 1;
            let wf = IQWaveform::new(vec![C64::new(1.0, 0.0); n], dt, 0.0)?;
            let traj = simulate_cavity(&p, &wf, 0.5, 0.0)?;
            let (g, e) = steady_state_alpha(&p, drive_strength(&p, 0.5));
            let last = traj.len() - 1;
            worst_sim = worst_sim
                .max((traj.alpha_g[last] - g).norm() / g.norm())
                .max((traj.alpha_e[last] - e).norm() / e.norm());
        }
        Ok((
            worst_identity <= 1e-12 && worst_sim <= 1e-3,
            format!("identity {worst_identity:.1e} (limit 1e-12), simulator endpoint {worst_sim:.1e} (limit 1e-3)"),
        ))
    })
}

/// Paired Ramsey scans of the `fig2` preset.
pub fn a4_ramsey_beating() -> CriterionResult {
    timed("A4", "Ramsey beating", Some(60.0), || {
        let run = run_ramsey(&presets::fig2())?;
        let s = &run.summary;
        let drag = s.drag.as_ref().expect("fig2 is detuned");
        let ratio = s.depth_ratio.unwrap_or(0.0);
        let freq_ok = rel(s.plain.dominant_freq_mhz, 10.0) <= 0.10;
        let ok = freq_ok && ratio >= 5.0 && drag.t2_eff_us > s.plain.t2_eff_us;
        Ok((
            ok,
            format!(
                "beat {:.2} MHz (10 ± 10%), depth ratio {ratio:.1} (≥ 5), T2eff DRAG {:.2} µs vs no-DRAG {:.2} µs",
                s.plain.dominant_freq_mhz, drag.t2_eff_us, s.plain.t2_eff_us
            ),
        ))
    })
}

/// `fig3` maps: no-DRAG minima near ±χ, DRAG above no-DRAG away from
/// resonance, zero detuning absent from the DRAG map.
pub fn a5_dephasing_maps() -> CriterionResult {
    timed("A5", "dephasing-map structure", Some(120.0), || {
        let cfg = presets::fig3();
        let run = run_dephasing_maps(&cfg)?;
        let (chi, kappa) = (cfg.params.chi, cfg.params.kappa);
        let mut rows_ok = 0;
        let mut rows = 0;
        for (i, &a) in run.plain.amps.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            rows += 1;
            let row = &run.plain.pe[i];
            let k = (0..row.len())
                .min_by(|&x, &y| row[x].total_cmp(&row[y]))
                .expect("non-empty row");
            let d = run.plain.detunings[k];
            if (d - chi).abs().min((d + chi).abs()) <= kappa / 2.0 {
                rows_ok += 1;
            }
        }
        let (mut wins, mut total) = (0usize, 0usize);
        for (j, &d) in run.drag.detunings.iter().enumerate() {
            if d.abs() < 5.0 {
                continue;
            }
            let jp = run.plain.column(d).expect("shared detuning");
            for i in 0..run.drag.amps.len() {
                total += 1;
                if run.drag.pe[i][j] >= run.plain.pe[i][jp] {
                    wins += 1;
                }
            }
        }
        let frac = wins as f64 / total.max(1) as f64;
        let zero_absent = run.drag.column(0.0).is_none() && run.omitted == [0.0];
        Ok((
            rows_ok == rows && frac >= 0.95 && zero_absent,
            format!(
                "minima near ±χ in {rows_ok}/{rows} rows, DRAG ≥ no-DRAG at {:.1}% of |Δd| ≥ 5 MHz points (≥ 95%), zero column {}",
                100.0 * frac,
                if zero_absent { "omitted" } else { "present" }
            ),
        ))
    })
}

/// S21, sinusoid and decay fits recover their generators.
pub fn a6_fit_round_trips() -> CriterionResult {
    timed("A6", "fit round-trips", Some(5.0), || {
        let p = presets::device(0.0);
        let freqs = uniform_grid(-10.0, 10.0, 0.02)?;
        let g = s21_response(&p, &freqs, QubitState::Ground);
        let e = s21_response(&p, &freqs, QubitState::Excited);
        let s21 = fit_s21(&freqs, &g, &e)?;
        let s21_err = rel(s21.kappa, 2.2).max(rel(s21.two_chi, 2.1));

        let thetas: Vec<f64> = (0..16).map(|k| std::f64::consts::TAU * k as f64 / 16.0).collect();
        let (c, th0, off) = (0.37, 1.234, 0.5);
        let signal: Vec<f64> = thetas.iter().map(|&t| off + c * (t + th0).sin()).collect();
        let fit = fit_sinusoid(&thetas, &signal)?;
        let sin_err = (fit.contrast - c)
            .abs()
            .max((fit.theta0 - th0).abs())
            .max((fit.offset - off).abs());

        let taus = uniform_grid(0.0, 3000.0, 20.0)?;
        let contrasts: Vec<f64> = taus
            .iter()
            .map(|&t| 0.45 * (-units::ns_to_us(t) / 1.41).exp())
            .collect();
        let decay = fit_decay(&taus, &contrasts)?;
        let decay_err = rel(decay.t2_eff, 1.41);
        Ok((
            s21_err <= 0.01 && sin_err <= 1e-12 && decay_err <= 0.01,
            format!(
                "S21 κ {:.4} 2χ {:.4} MHz, sinusoid error {sin_err:.1e}, T2 {:.4} µs",
                s21.kappa, s21.two_chi, decay.t2_eff
            ),
        ))
    })
}

/// Resonant 2 µs readout keeps its pointer separation under any notch in
/// the swept range.
pub fn a7_drag_neutrality() -> CriterionResult {
    timed("A7", "DRAG neutrality", Some(30.0), || {
        let p = presets::device(0.0);
        let spec = EnvelopeSpec::new(1.0, presets::EDGE_NS, 2000.0, presets::EDGE_NS, 0.1);
        let ring = p.ringdown_window_ns();
        let base = snr_proxy(&simulate_cavity(
            &p,
            &ProbePulse::new(spec, DragParams::off())?.shaped,
            1.0,
            ring,
        )?);
        let notches = [13.0, 20.0, 30.0, 50.0, 75.0, 100.0, 150.0, 201.0];
        let mut worst: (f64, f64) = (0.0, 0.0);
        for &n in &notches {
            let pulse = ProbePulse::new(spec, DragParams::notch(n))?;
            let r = rel(snr_proxy(&simulate_cavity(&p, &pulse.shaped, 1.0, ring)?), base);
            if r >= worst.0 {
                worst = (r, n);
            }
        }
        Ok((
            worst.0 <= 0.05,
            format!(
                "largest change {:.3}% at {} MHz over {} notches (limit 5%)",
                100.0 * worst.0,
                worst.1,
                notches.len()
            ),
        ))
    })
}

fn shifted(plan: &FrequencyPlan, shift: f64) -> FrequencyPlan {
    let mut out = plan.clone();
    for r in &mut out.resonators {
        r.f_r += shift;
    }
    for p in &mut out.pulses {
        p.carrier += shift;
    }
    out
}

/// Greedy notches on the bundled two-resonator plan.
pub fn a8_crosstalk() -> CriterionResult {
    timed("A8", "crosstalk suppression", Some(10.0), || {
        let plan = presets::plan_two();
        let (_, report) = select_and_report(&plan, plan.amp_cal)?;
        let worst_db = report
            .suppression_db
            .iter()
            .map(|s| s.db)
            .fold(f64::NEG_INFINITY, f64::max);
        let (_, again) = select_and_report(&plan, plan.amp_cal)?;
        let json = |r: &CrosstalkReport| to_sorted_json(r).map_err(|e| Error::Domain(e.to_string()));
        let deterministic = json(&report)? == json(&again)?;
        let moved = shifted(&plan, 123.25);
        let (_, frame) = select_and_report(&moved, moved.amp_cal)?;
        let mut frame_err: f64 = 0.0;
        for (ra, rb) in report.gamma.iter().zip(&frame.gamma) {
            for (a, b) in ra.iter().zip(rb) {
                frame_err = frame_err.max((a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE));
            }
        }
        let notches_same = report
            .notches
            .iter()
            .zip(&frame.notches)
            .all(|(a, b)| a.notch_freq == b.notch_freq);
        Ok((
            worst_db <= -13.0 && deterministic && frame_err <= 1e-12 && notches_same,
            format!(
                "weakest off-diagonal suppression {worst_db:.1} dB (≤ -13), deterministic {deterministic}, frame error {frame_err:.1e}"
            ),
        ))
    })
}

/// Parseval, fourth-order convergence, and byte-identical reruns.
pub fn a9_numerical_hygiene() -> CriterionResult {
    timed("A9", "numerical hygiene", None, || {
        let pulse = ProbePulse::new(presets::fig1b().envelope, presets::fig1b().drag)?;
        let wf = &pulse.shaped;
        let period = units::NS_PER_US / wf.dt();
        let m = (period / (units::NS_PER_US / (10.0 * wf.span()))).ceil() as usize;
        let df = period / m as f64;
        let freqs: Vec<f64> = (0..m).map(|k| -period / 2.0 + k as f64 * df).collect();
        let s = dtft(wf, &freqs)?;
        let spectral = s.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * df / units::NS_PER_US;
        let parseval = rel(spectral, wf.energy());

        let p = presets::device(-10.0);
        let end = |dt: f64| -> Result<C64> {
            let pulse = ProbePulse::new(EnvelopeSpec::new(1.0, 40.0, 80.0, 40.0, dt), DragParams::notch(10.0))?;
            let traj = simulate_cavity(&p, &pulse.shaped, 1.0, 0.0)?;
            Ok(traj.alpha_e[traj.len() - 1])
        };
        let (a, b, c) = (end(4.0)?, end(2.0)?, end(1.0)?);
        let order = ((a - b).norm() / (b - c).norm()).log2();

        let mut ramsey = presets::fig2();
        ramsey.taus = LinearRange::new(0.0, 200.0, 4.0);
        let noise = NoiseModel {
            sigma: ramsey.noise_sigma,
            seed: ramsey.seed,
        };
        let scan = || {
            scan_plateau(
                &ramsey.params,
                &ramsey.template,
                &ramsey.taus.values()?,
                false,
                ramsey.amp_cal,
                ramsey.n_theta,
                &noise,
            )
        };
        let scans_equal = scan()?.to_csv() == scan()?.to_csv();
        let mut map = presets::fig3();
        map.amps = Axis::Values(vec![0.0, 0.5, 1.0]);
        map.detunings = Axis::Values(vec![-6.0, -1.0, 0.0, 2.0, 7.0]);
        let (m1, m2) = (run_dephasing_maps(&map)?, run_dephasing_maps(&map)?);
        let maps_equal = m1.plain.to_csv() == m2.plain.to_csv() && m1.drag.to_csv() == m2.drag.to_csv();
        Ok((
            parseval <= 1e-3 && (3.5..=4.5).contains(&order) && scans_equal && maps_equal,
            format!(
                "Parseval {parseval:.1e} (≤ 1e-3), RK4 observed order {order:.2} (4 ± 0.5), reruns identical: scan {scans_equal}, maps {maps_equal}"
            ),
        ))
    })
}

/// Every criterion, in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        a1_notch_depth(),
        a2_long_pulse(),
        a3_steady_state(),
        a4_ramsey_beating(),
        a5_dephasing_maps(),
        a6_fit_round_trips(),
        a7_drag_neutrality(),
        a8_crosstalk(),
        a9_numerical_hygiene(),
    ]
}
