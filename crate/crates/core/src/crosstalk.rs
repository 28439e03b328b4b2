//! Multiplexed-readout crosstalk: dephasing that each probe pulse induces on
//! every qubit sharing the feedline, and greedy single-notch DRAG selection.
//!
//! Rates from different pulses on one victim are treated as additive; the
//! interference between simultaneous probe tones is not modeled. Each pulse
//! carries at most one notch.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dephasing::{spectral_rate, IntegrationGrid};
use crate::dispersive::DispersiveParams;
use crate::error::{Error, Result};
use crate::waveform::{DragParams, EnvelopeSpec, ProbePulse};

/// Relative tolerance under which two dephasing rates count as tied.
pub const TIE_RTOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorEntry {
    pub id: String,
    /// Absolute resonator frequency, MHz.
    pub f_r: f64,
    pub kappa: f64,
    pub chi: f64,
    /// T₂ of the qubit read out through this resonator, µs.
    pub t2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseAssignment {
    /// Id of the resonator this pulse reads out.
    pub target: String,
    pub envelope: EnvelopeSpec,
    /// Absolute carrier frequency, MHz.
    pub carrier: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drag: Option<DragParams>,
}

impl PulseAssignment {
    fn drag(&self) -> DragParams {
        self.drag.unwrap_or_default()
    }
}

fn default_amp_cal() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyPlan {
    pub resonators: Vec<ResonatorEntry>,
    pub pulses: Vec<PulseAssignment>,
    /// Probe amplitude calibration shared by every pulse.
    #[serde(default = "default_amp_cal")]
    pub amp_cal: f64,
}

impl FrequencyPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid("plan", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.resonators.is_empty() {
            return Err(Error::invalid("resonators", "plan has no resonators"));
        }
        for (i, r) in self.resonators.iter().enumerate() {
            if self.resonators[..i].iter().any(|o| o.id == r.id) {
                return Err(Error::invalid(
                    format!("resonators[{i}].id"),
                    format!("duplicate id {:?}", r.id),
                ));
            }
            self.params_for(i, r.f_r)
                .validate()
                .map_err(|e| Error::invalid(format!("resonators[{i}]"), e.to_string()))?;
        }
        for (j, p) in self.pulses.iter().enumerate() {
            if self.target_index(j).is_none() {
                return Err(Error::invalid(
                    format!("pulses[{j}].target"),
                    format!("unknown resonator {:?}", p.target),
                ));
            }
            if !p.carrier.is_finite() {
                return Err(Error::invalid(format!("pulses[{j}].carrier"), "must be finite"));
            }
            p.envelope
                .validate()
                .map_err(|e| Error::invalid(format!("pulses[{j}].envelope"), e.to_string()))?;
            p.drag().validate()?;
            if let Some(k) = self.pulses[..j].iter().position(|o| o.carrier == p.carrier) {
                return Err(Error::invalid(
                    format!("pulses[{j}].carrier"),
                    format!("carrier {} MHz duplicates pulses[{k}]", p.carrier),
                ));
            }
        }
        Ok(())
    }

    fn target_index(&self, pulse: usize) -> Option<usize> {
        let id = &self.pulses[pulse].target;
        self.resonators.iter().position(|r| &r.id == id)
    }

    /// Victim parameters for a drive at `carrier` MHz.
    fn params_for(&self, victim: usize, carrier: f64) -> DispersiveParams {
        let r = &self.resonators[victim];
        DispersiveParams::new(r.kappa, r.chi, r.f_r - carrier, r.t2)
    }
}

/// One row of the suppression table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuppressionEntry {
    pub victim: String,
    pub pulse: usize,
    pub baseline: f64,
    pub shaped: f64,
    /// `10·log10(shaped/baseline)`; negative is suppression.
    pub db: f64,
}

/// Outcome of the greedy notch choice for one pulse.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NotchChoice {
    pub pulse: usize,
    pub victim: String,
    /// `f_d − f_r` of the chosen victim, MHz.
    pub notch_freq: f64,
    pub baseline: f64,
    pub notched: f64,
    /// False when notching would raise the column's worst crosstalk entry.
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrosstalkReport {
    pub victims: Vec<String>,
    /// Target id per pulse column.
    pub pulses: Vec<String>,
    /// `gamma[i][j]`: dephasing (1/µs) on qubit `i` from pulse `j` as configured.
    pub gamma: Vec<Vec<f64>>,
    /// Same matrix with DRAG removed from every pulse.
    pub baseline: Vec<Vec<f64>>,
    pub suppression_db: Vec<SuppressionEntry>,
    pub notches: Vec<NotchChoice>,
}

impl CrosstalkReport {
    /// CSV of the configured matrix: header `victim,<pulse ids…>`.
    pub fn matrix_csv(&self) -> String {
        let mut out = String::from("victim");
        for (j, p) in self.pulses.iter().enumerate() {
            out.push_str(&format!(",pulse{j}:{p}"));
        }
        out.push('\n');
        for (i, v) in self.victims.iter().enumerate() {
            out.push_str(v);
            for g in &self.gamma[i] {
                out.push(',');
                out.push_str(&crate::io::fmt_f64(*g));
            }
            out.push('\n');
        }
        out
    }

    /// Off-diagonal entries of column `j`.
    pub fn off_diagonal(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let target = &self.pulses[j];
        self.victims
            .iter()
            .enumerate()
            .filter(move |(_, v)| *v != target)
            .map(move |(i, _)| (i, self.gamma[i][j]))
    }
}

fn column(plan: &FrequencyPlan, pulse: usize, drag: DragParams, amp_cal: f64) -> Result<Vec<f64>> {
    let p = &plan.pulses[pulse];
    let probe = ProbePulse::new(p.envelope, drag)?;
    (0..plan.resonators.len())
        .into_par_iter()
        .map(|i| {
            spectral_rate(
                &plan.params_for(i, p.carrier),
                &probe,
                amp_cal,
                &IntegrationGrid::default(),
            )
        })
        .collect()
}

fn transpose(cols: Vec<Vec<f64>>, rows: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
}

/// Dephasing matrix for the plan as configured, with a DRAG-free baseline.
pub fn crosstalk_matrix(plan: &FrequencyPlan, amp_cal: f64) -> Result<CrosstalkReport> {
    plan.validate()?;
    let n = plan.resonators.len();
    let gamma_cols = (0..plan.pulses.len())
        .map(|j| column(plan, j, plan.pulses[j].drag(), amp_cal))
        .collect::<Result<Vec<_>>>()?;
    let base_cols = (0..plan.pulses.len())
        .map(|j| {
            if plan.pulses[j].drag().enabled {
                column(plan, j, DragParams::off(), amp_cal)
            } else {
                Ok(gamma_cols[j].clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let gamma = transpose(gamma_cols, n);
    let baseline = transpose(base_cols, n);

    let victims: Vec<String> = plan.resonators.iter().map(|r| r.id.clone()).collect();
    let mut suppression_db = Vec::new();
    for (j, p) in plan.pulses.iter().enumerate() {
        for (i, v) in victims.iter().enumerate() {
            if *v == p.target {
                continue;
            }
            let (b, s) = (baseline[i][j], gamma[i][j]);
            suppression_db.push(SuppressionEntry {
                victim: v.clone(),
                pulse: j,
                baseline: b,
                shaped: s,
                db: 10.0 * (s / b).log10(),
            });
        }
    }
    Ok(CrosstalkReport {
        victims,
        pulses: plan.pulses.iter().map(|p| p.target.clone()).collect(),
        gamma,
        baseline,
        suppression_db,
        notches: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NotchSelection {
    pub plan: FrequencyPlan,
    pub choices: Vec<NotchChoice>,
}

/// For each pulse, notch the victim that suffers the most baseline
/// crosstalk. Ties (within [`TIE_RTOL`]) go to the smaller `|f_d − f_r|`,
/// then to the positive notch frequency, then to the lower resonator index.
/// A notch that would raise the column's worst off-diagonal entry is
/// recorded but not applied.
pub fn select_notches(plan: &FrequencyPlan, amp_cal: f64) -> Result<NotchSelection> {
    plan.validate()?;
    if plan.resonators.len() < 2 {
        return Err(Error::invalid(
            "resonators",
            "notch selection needs at least two resonators",
        ));
    }
    let mut out = plan.clone();
    let mut choices = Vec::with_capacity(plan.pulses.len());
    for (j, p) in plan.pulses.iter().enumerate() {
        let target = plan.target_index(j).expect("validated");
        let base = column(plan, j, DragParams::off(), amp_cal)?;
        let candidates: Vec<(usize, f64, f64)> = (0..plan.resonators.len())
            .filter(|&i| i != target)
            .map(|i| (i, base[i], p.carrier - plan.resonators[i].f_r))
            .collect();
        let Some(&(victim, worst, notch)) = candidates
            .iter()
            .reduce(|best, c| if prefer(c, best) { c } else { best })
        else {
            continue;
        };
        if notch == 0.0 {
            return Err(Error::UndefinedNotch);
        }
        let drag = DragParams::notch(notch);
        let notched = column(plan, j, drag, amp_cal)?;
        let max_after = candidates.iter().map(|c| notched[c.0]).fold(0.0, f64::max);
        let accepted = max_after <= worst && notched[victim] < worst;
        if accepted {
            out.pulses[j].drag = Some(drag);
        } else {
            out.pulses[j].drag = None;
        }
        choices.push(NotchChoice {
            pulse: j,
            victim: plan.resonators[victim].id.clone(),
            notch_freq: notch,
            baseline: worst,
            notched: notched[victim],
            accepted,
        });
    }
    Ok(NotchSelection { plan: out, choices })
}

/// Whether candidate `a` beats `b`; tuples are `(index, rate, notch)`.
fn prefer(a: &(usize, f64, f64), b: &(usize, f64, f64)) -> bool {
    let scale = a.1.abs().max(b.1.abs());
    if (a.1 - b.1).abs() > TIE_RTOL * scale {
        return a.1 > b.1;
    }
    if a.2.abs() != b.2.abs() {
        return a.2.abs() < b.2.abs();
    }
    if (a.2 > 0.0) != (b.2 > 0.0) {
        return a.2 > 0.0;
    }
    a.0 < b.0
}

/// Runs [`select_notches`] and reports the resulting plan.
pub fn select_and_report(plan: &FrequencyPlan, amp_cal: f64) -> Result<(FrequencyPlan, CrosstalkReport)> {
    let selection = select_notches(plan, amp_cal)?;
    let mut report = crosstalk_matrix(&selection.plan, amp_cal)?;
    report.notches = selection.choices;
    Ok((selection.plan, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resonator(id: &str, f_r: f64) -> ResonatorEntry {
        ResonatorEntry {
            id: id.into(),
            f_r,
            kappa: 2.2,
            chi: 1.05,
            t2: 18.0,
        }
    }

    fn pulse(target: &str, carrier: f64, plateau: f64) -> PulseAssignment {
        PulseAssignment {
            target: target.into(),
            envelope: EnvelopeSpec::new(1.0, 5.0, plateau, 5.0, 0.1),
            carrier,
            drag: None,
        }
    }

    fn plan(res: Vec<ResonatorEntry>, pulses: Vec<PulseAssignment>) -> FrequencyPlan {
        FrequencyPlan {
            resonators: res,
            pulses,
            amp_cal: 1.0,
        }
    }

    #[test]
    fn single_resonator_is_one_by_one() {
        let p = plan(vec![resonator("q0", 7000.0)], vec![pulse("q0", 7000.0, 200.0)]);
        let r = crosstalk_matrix(&p, 1.0).unwrap();
        assert_eq!(r.gamma.len(), 1);
        assert_eq!(r.gamma[0].len(), 1);
        assert!(r.suppression_db.is_empty());
        assert!(r.gamma[0][0] > 0.0);
    }

    #[test]
    fn far_neighbor_crosstalk_is_small() {
        let p = plan(
            vec![resonator("a", 7000.0), resonator("b", 7200.0)],
            vec![pulse("a", 7000.0, 2000.0), pulse("b", 7200.0, 2000.0)],
        );
        let r = crosstalk_matrix(&p, 1.0).unwrap();
        assert!(r.gamma[1][0] < 1e-3 * r.gamma[0][0]);
        assert!(r.gamma[0][1] < 1e-3 * r.gamma[1][1]);
    }

    #[test]
    fn notch_lands_on_only_neighbor() {
        let p = plan(
            vec![resonator("a", 7000.0), resonator("b", 7050.0)],
            vec![pulse("a", 7000.0, 200.0), pulse("b", 7050.0, 200.0)],
        );
        let sel = select_notches(&p, 1.0).unwrap();
        assert_eq!(sel.choices[0].victim, "b");
        assert_eq!(sel.choices[0].notch_freq, -50.0);
        assert_eq!(sel.choices[1].victim, "a");
        assert_eq!(sel.choices[1].notch_freq, 50.0);
        assert!(sel.choices.iter().all(|c| c.accepted));
        let (_, report) = select_and_report(&p, 1.0).unwrap();
        for e in &report.suppression_db {
            assert!(e.db <= -13.0, "{e:?}");
        }
    }

    #[test]
    fn near_neighbor_wins() {
        let p = plan(
            vec![
                resonator("a", 7000.0),
                resonator("near", 7030.0),
                resonator("far", 7150.0),
            ],
            vec![pulse("a", 7000.0, 200.0)],
        );
        let base = crosstalk_matrix(&p, 1.0).unwrap();
        assert!(base.gamma[1][0] > base.gamma[2][0]);
        let sel = select_notches(&p, 1.0).unwrap();
        assert_eq!(sel.choices[0].victim, "near");
        assert!(sel.choices[0].accepted);
    }

    #[test]
    fn symmetric_tie_is_deterministic() {
        let p = plan(
            vec![resonator("lo", 6950.0), resonator("a", 7000.0), resonator("hi", 7050.0)],
            vec![pulse("a", 7000.0, 200.0)],
        );
        let first = select_notches(&p, 1.0).unwrap();
        // carrier above "lo" gives f_d − f_r = +50
        assert_eq!(first.choices[0].victim, "lo");
        assert_eq!(first.choices[0].notch_freq, 50.0);
        for _ in 0..3 {
            assert_eq!(select_notches(&p, 1.0).unwrap(), first);
        }
    }

    #[test]
    fn greedy_never_raises_column_max() {
        let p = plan(
            vec![
                resonator("lo", 6950.0),
                resonator("a", 7000.0),
                resonator("hi", 7040.0),
                resonator("x", 7120.0),
            ],
            vec![pulse("a", 7000.0, 200.0), pulse("hi", 7040.0, 200.0)],
        );
        let before = crosstalk_matrix(&p, 1.0).unwrap();
        let (_, after) = select_and_report(&p, 1.0).unwrap();
        for j in 0..p.pulses.len() {
            let mb = before.off_diagonal(j).map(|e| e.1).fold(0.0, f64::max);
            let ma = after.off_diagonal(j).map(|e| e.1).fold(0.0, f64::max);
            assert!(ma <= mb);
        }
        for c in after.notches.iter().filter(|c| c.accepted) {
            assert!(c.notched < c.baseline);
        }
    }

    #[test]
    fn worst_victim_on_carrier_is_ill_posed() {
        let p = plan(
            vec![resonator("a", 7000.0), resonator("b", 7050.0)],
            vec![pulse("a", 7050.0, 200.0)],
        );
        assert_eq!(select_notches(&p, 1.0).unwrap_err(), Error::UndefinedNotch);
    }

    #[test]
    fn enabled_zero_notch_rejected() {
        let mut pl = pulse("a", 7000.0, 200.0);
        pl.drag = Some(DragParams::notch(0.0));
        let p = plan(vec![resonator("a", 7000.0)], vec![pl]);
        assert_eq!(crosstalk_matrix(&p, 1.0).unwrap_err(), Error::UndefinedNotch);
    }

    #[test]
    fn plan_validation() {
        let dup = plan(vec![resonator("a", 7000.0), resonator("a", 7100.0)], vec![]);
        assert!(dup.validate().is_err());
        let orphan = plan(vec![resonator("a", 7000.0)], vec![pulse("zz", 7000.0, 100.0)]);
        assert!(orphan.validate().is_err());
        let same_carrier = plan(
            vec![resonator("a", 7000.0), resonator("b", 7100.0)],
            vec![pulse("a", 7000.0, 100.0), pulse("b", 7000.0, 100.0)],
        );
        assert!(same_carrier.validate().is_err());
        assert!(FrequencyPlan::from_json(r#"{"resonators": [], "pulses": [], "bogus": 1}"#).is_err());
    }

    #[test]
    fn frame_invariance() {
        let mk = |shift: f64| {
            plan(
                vec![resonator("a", 7000.0 + shift), resonator("b", 7050.0 + shift)],
                vec![pulse("a", 7000.0 + shift, 200.0), pulse("b", 7050.0 + shift, 200.0)],
            )
        };
        let a = select_and_report(&mk(0.0), 1.0).unwrap().1;
        let b = select_and_report(&mk(-1234.5), 1.0).unwrap().1;
        for i in 0..2 {
            for j in 0..2 {
                let (x, y) = (a.gamma[i][j], b.gamma[i][j]);
                assert!((x - y).abs() <= 1e-12 * x.abs());
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(6))]

            #[test]
            fn report_is_frame_invariant(shift in -3000.0f64..3000.0, spacing in 20.0f64..120.0) {
                let base = plan(
                    vec![resonator("a", 7000.0), resonator("b", 7000.0 + spacing)],
                    vec![pulse("a", 7000.0, 200.0), pulse("b", 7000.0 + spacing, 200.0)],
                );
                let mut moved = base.clone();
                for r in &mut moved.resonators {
                    r.f_r += shift;
                }
                for p in &mut moved.pulses {
                    p.carrier += shift;
                }
                let (_, a) = select_and_report(&base, 1.0).unwrap();
                let (_, b) = select_and_report(&moved, 1.0).unwrap();
                for (x, y) in a.gamma.iter().flatten().zip(b.gamma.iter().flatten()) {
                    prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(f64::MIN_POSITIVE));
                }
            }

            #[test]
            fn greedy_never_raises_a_column_maximum(spacing in 15.0f64..150.0, third in 160.0f64..300.0) {
                let p = plan(
                    vec![resonator("a", 7000.0), resonator("b", 7000.0 + spacing), resonator("c", 7000.0 - third)],
                    vec![pulse("a", 7000.0, 200.0), pulse("b", 7000.0 + spacing, 200.0)],
                );
                let (_, report) = select_and_report(&p, 1.0).unwrap();
                for (j, choice) in report.notches.iter().enumerate() {
                    let after = report.off_diagonal(j).map(|(_, g)| g).fold(0.0, f64::max);
                    let before = (0..3)
                        .filter(|&i| report.victims[i] != report.pulses[j])
                        .map(|i| report.baseline[i][j])
                        .fold(0.0, f64::max);
                    prop_assert!(after <= before);
                    if choice.accepted {
                        prop_assert!(choice.notched < choice.baseline);
                    }
                }
            }
        }
    }
}
