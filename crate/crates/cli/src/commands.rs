use std::fs;
use std::path::{Path, PathBuf};

use drag_readout::acceptance;
use drag_readout::crosstalk::{crosstalk_matrix, select_and_report};
use drag_readout::io::to_sorted_json;
use drag_readout::presets;
use drag_readout::runs::{run_dephasing_maps, run_ramsey, run_spectrum, run_waveform};
use serde::Serialize;

use crate::failure::Failure;
use crate::run_config::RunConfig;
use crate::svg::{self, Series};
use crate::Common;

/// Resolved inputs: the config file (if any), output directory and flags.
struct Ctx {
    file: Option<RunConfig>,
    base: PathBuf,
    out: PathBuf,
    svg: bool,
    seed: Option<u64>,
    preset: Option<String>,
}

impl Ctx {
    fn new(c: &Common) -> Result<Self, Failure> {
        if c.config.is_some() && c.preset.is_some() {
            return Err(Failure::Validation("give either --config or --preset, not both".into()));
        }
        let (file, base) = match &c.config {
            Some(path) => (
                Some(RunConfig::load(path)?),
                path.parent().map(Path::to_path_buf).unwrap_or_default(),
            ),
            None => (None, PathBuf::new()),
        };
        let io = file.as_ref().map(|f| &f.io);
        let out = c
            .out
            .clone()
            .or_else(|| io.and_then(|i| i.out.as_ref().map(|o| base.join(o))))
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Ctx {
            svg: c.svg || io.is_some_and(|i| i.svg),
            seed: c.seed.or(file.as_ref().and_then(|f| f.seed)),
            preset: c.preset.clone(),
            file,
            base,
            out,
        })
    }

    /// The command's block from `--config`, or the named preset.
    fn pick<T>(
        &mut self,
        block: impl FnOnce(&mut RunConfig) -> Option<T>,
        name: &str,
        preset: impl FnOnce(&str) -> drag_readout::Result<T>,
    ) -> Result<T, Failure> {
        if let Some(file) = self.file.as_mut() {
            return block(file).ok_or_else(|| Failure::Validation(format!("config has no \"{name}\" block")));
        }
        match &self.preset {
            Some(p) => Ok(preset(p)?),
            None => Err(Failure::Validation("give --config or --preset".into())),
        }
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), Failure> {
        fs::create_dir_all(&self.out).map_err(|e| Failure::Io(format!("{}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Failure> {
        let text = to_sorted_json(value).map_err(|e| Failure::Validation(e.to_string()))?;
        self.write(name, &text)
    }
}

pub fn waveform(c: &Common) -> Result<(), Failure> {
    let mut ctx = Ctx::new(c)?;
    let cfg = ctx.pick(|f| f.waveform.take(), "waveform", presets::waveform)?;
    let (pulse, summary) = run_waveform(&cfg)?;
    ctx.write("waveform_plain.csv", &pulse.envelope.to_csv())?;
    ctx.write("waveform_drag.csv", &pulse.shaped.to_csv())?;
    ctx.write_json("waveform_summary.json", &summary)?;
    if ctx.svg {
        let t: Vec<f64> = (0..pulse.shaped.len()).map(|n| pulse.shaped.time(n)).collect();
        let i: Vec<f64> = pulse.shaped.samples().iter().map(|s| s.re).collect();
        let q: Vec<f64> = pulse.shaped.samples().iter().map(|s| s.im).collect();
        let plot = svg::line_plot(
            "Probe envelope",
            "t (ns)",
            "amplitude",
            &[
                Series {
                    label: "I",
                    x: &t,
                    y: &i,
                },
                Series {
                    label: "Q (DRAG)",
                    x: &t,
                    y: &q,
                },
            ],
        );
        ctx.write("waveform.svg", &plot)?;
    }
    let gain = if summary.energy_plain > 0.0 {
        100.0 * (summary.energy_shaped / summary.energy_plain - 1.0)
    } else {
        0.0
    };
    println!(
        "energy: plain {:.6} ns, shaped {:.6} ns ({gain:+.3}%), {} samples",
        summary.energy_plain, summary.energy_shaped, summary.samples
    );
    Ok(())
}

pub fn spectrum(c: &Common) -> Result<(), Failure> {
    let mut ctx = Ctx::new(c)?;
    let cfg = ctx.pick(|f| f.spectrum.take(), "spectrum", presets::spectrum)?;
    let run = run_spectrum(&cfg)?;
    ctx.write("spectrum_plain.csv", &run.plain.to_csv(run.reference))?;
    ctx.write("spectrum_drag.csv", &run.shaped.to_csv(run.reference))?;
    ctx.write_json("spectrum_summary.json", &run.summary)?;
    if ctx.svg {
        let db = |g: &drag_readout::spectrum::SpectrumGrid| -> Vec<f64> {
            g.magnitudes().map(|m| 20.0 * (m / run.reference).log10()).collect()
        };
        let (p, d) = (db(&run.plain), db(&run.shaped));
        let plot = svg::line_plot(
            "Pulse spectrum",
            "f (MHz)",
            "|S| (dB)",
            &[
                Series {
                    label: "no DRAG",
                    x: &run.plain.freqs,
                    y: &p,
                },
                Series {
                    label: "DRAG",
                    x: &run.shaped.freqs,
                    y: &d,
                },
            ],
        );
        ctx.write("spectrum.svg", &plot)?;
    }
    match (run.summary.probe_mhz, run.summary.notch_depth_db) {
        (Some(f), Some(db)) => println!("notch depth at {f} MHz: {db:.2} dB"),
        _ => println!("no notch frequency to report"),
    }
    Ok(())
}

pub fn ramsey(c: &Common) -> Result<(), Failure> {
    let mut ctx = Ctx::new(c)?;
    let mut cfg = ctx.pick(|f| f.ramsey.take(), "ramsey", presets::ramsey)?;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    let run = run_ramsey(&cfg)?;
    ctx.write("ramsey_plain.csv", &run.plain.to_csv())?;
    if let Some(d) = &run.drag {
        ctx.write("ramsey_drag.csv", &d.to_csv())?;
    }
    ctx.write_json("ramsey_summary.json", &run.summary)?;
    if ctx.svg {
        let pc = run.plain.contrasts();
        let dc = run.drag.as_ref().map(|d| d.contrasts());
        let mut series = vec![Series {
            label: "no DRAG",
            x: &run.plain.taus,
            y: &pc,
        }];
        if let (Some(d), Some(dc)) = (&run.drag, &dc) {
            series.push(Series {
                label: "DRAG",
                x: &d.taus,
                y: dc,
            });
        }
        ctx.write(
            "ramsey.svg",
            &svg::line_plot("Ramsey contrast", "plateau (ns)", "contrast", &series),
        )?;
    }
    for w in &run.summary.warnings {
        eprintln!("warning:{w}");
    }
    let s = &run.summary;
    print!(
        "T2eff no-DRAG {:.3} µs, modulation depth {:.4}",
        s.plain.t2_eff_us, s.plain.modulation_depth
    );
    if let Some(d) = &s.drag {
        print!("; DRAG {:.3} µs, depth {:.4}", d.t2_eff_us, d.modulation_depth);
    }
    println!();
    Ok(())
}

#[derive(Serialize)]
struct MapMetadata<'a> {
    params: &'a drag_readout::dispersive::DispersiveParams,
    envelope: &'a drag_readout::waveform::EnvelopeSpec,
    amp_cal: f64,
    tau_us: f64,
    rows: usize,
    columns_plain: usize,
    columns_drag: usize,
    omitted_drag_detunings_mhz: &'a [f64],
}

pub fn dephasing_map(c: &Common) -> Result<(), Failure> {
    let mut ctx = Ctx::new(c)?;
    let cfg = ctx.pick(|f| f.dephasing_map.take(), "dephasing_map", presets::dephasing_map)?;
    let run = run_dephasing_maps(&cfg)?;
    ctx.write("map_plain.csv", &run.plain.to_csv())?;
    ctx.write("map_drag.csv", &run.drag.to_csv())?;
    ctx.write_json(
        "map_metadata.json",
        &MapMetadata {
            params: &cfg.params,
            envelope: &cfg.envelope,
            amp_cal: cfg.amp_cal,
            tau_us: run.plain.tau_us,
            rows: run.plain.amps.len(),
            columns_plain: run.plain.detunings.len(),
            columns_drag: run.drag.detunings.len(),
            omitted_drag_detunings_mhz: &run.omitted,
        },
    )?;
    if ctx.svg {
        for (name, m) in [("map_plain.svg", &run.plain), ("map_drag.svg", &run.drag)] {
            let title = if m.drag_enabled {
                "P_e with DRAG"
            } else {
                "P_e without DRAG"
            };
            ctx.write(
                name,
                &svg::heatmap(title, "detuning (MHz)", "amplitude", &m.detunings, &m.amps, &m.pe),
            )?;
        }
    }
    for d in &run.omitted {
        eprintln!("warning:zero_detuning_omitted:DRAG map skips detuning {d} MHz (notch undefined)");
    }
    println!(
        "maps: {} amplitudes × {} detunings (DRAG: {})",
        run.plain.amps.len(),
        run.plain.detunings.len(),
        run.drag.detunings.len()
    );
    Ok(())
}

pub fn crosstalk(c: &Common, select: bool) -> Result<(), Failure> {
    let mut ctx = Ctx::new(c)?;
    let base = ctx.base.clone();
    let plan = match ctx.file.as_mut() {
        Some(f) => f
            .crosstalk
            .take()
            .ok_or_else(|| Failure::Validation("config has no \"crosstalk\" block".into()))?
            .resolve(&base)?,
        None => match &ctx.preset {
            Some(p) => presets::plan(p)?,
            None => return Err(Failure::Validation("give --config or --preset".into())),
        },
    };
    let report = if select {
        let (chosen, report) = select_and_report(&plan, plan.amp_cal)?;
        ctx.write_json("crosstalk_plan.json", &chosen)?;
        report
    } else {
        crosstalk_matrix(&plan, plan.amp_cal)?
    };
    ctx.write_json("crosstalk_report.json", &report)?;
    ctx.write("crosstalk_matrix.csv", &report.matrix_csv())?;
    if ctx.svg {
        let cols: Vec<f64> = (0..report.pulses.len()).map(|j| j as f64).collect();
        let rows: Vec<f64> = (0..report.victims.len()).map(|i| i as f64).collect();
        let logg: Vec<Vec<f64>> = report
            .gamma
            .iter()
            .map(|r| r.iter().map(|g| g.max(1e-300).log10()).collect())
            .collect();
        ctx.write(
            "crosstalk.svg",
            &svg::heatmap("log10 dephasing rate", "pulse", "victim", &cols, &rows, &logg),
        )?;
    }
    for s in &report.suppression_db {
        println!("pulse {} -> {}: {:.2} dB", report.pulses[s.pulse], s.victim, s.db);
    }
    Ok(())
}

pub fn selftest(c: &Common) -> Result<(), Failure> {
    let ctx = c
        .out
        .clone()
        .map(|out| -> Result<Ctx, Failure> {
            fs::create_dir_all(&out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
            Ok(Ctx {
                file: None,
                base: PathBuf::new(),
                out,
                svg: false,
                seed: None,
                preset: None,
            })
        })
        .transpose()?;
    let results = acceptance::run_all();
    for r in &results {
        println!("{}", r.line());
    }
    if let Some(ctx) = ctx {
        ctx.write_json("selftest.json", &results)?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure::Selftest(failed));
    }
    Ok(())
}

pub fn presets() -> Result<(), Failure> {
    for name in presets::NAMES {
        println!("{name}");
    }
    Ok(())
}
