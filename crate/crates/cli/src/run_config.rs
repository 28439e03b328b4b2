use std::path::{Path, PathBuf};

use drag_readout::config::{DephasingMapConfig, RamseyConfig, SpectrumConfig, WaveformConfig};
use drag_readout::crosstalk::FrequencyPlan;
use serde::Deserialize;

use crate::failure::Failure;

/// Top-level config file: one block per command plus output settings.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub waveform: Option<WaveformConfig>,
    pub spectrum: Option<SpectrumConfig>,
    pub ramsey: Option<RamseyConfig>,
    pub dephasing_map: Option<DephasingMapConfig>,
    pub crosstalk: Option<PlanSource>,
    #[serde(default)]
    pub io: IoConfig,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoConfig {
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
}

/// A plan given inline or as a path relative to the config file.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum PlanSource {
    File { plan_file: PathBuf },
    Inline(FrequencyPlan),
}

/// Parses strictly; any unknown key anywhere is an error.
pub fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Validation(format!("{what}: {e}")))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        parse(&text, &path.display().to_string())
    }
}

impl PlanSource {
    pub fn resolve(self, base: &Path) -> Result<FrequencyPlan, Failure> {
        match self {
            PlanSource::Inline(plan) => Ok(plan),
            PlanSource::File { plan_file } => {
                let path = base.join(plan_file);
                let text =
                    std::fs::read_to_string(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
                Ok(FrequencyPlan::from_json(&text)?)
            }
        }
    }
}
