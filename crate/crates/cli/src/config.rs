//! Run configuration: a TOML file of settings, overridden by command-line flags.

use std::fs;
use std::path::Path;

use cogroup::evaluation::SplitConfig;
use cogroup::ga::OptimizerConfig;
use cogroup::ingest::Orientation;
use cogroup::model_select::{default_mu_grid, AicFormula, TuneConfig};
use cogroup::network::NetworkInferenceConfig;
use cogroup::synth::SynthSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SNAPSHOT_FILE: &str = "run_config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSettings {
    pub orientation: Orientation,
    pub max_zero_fraction: f64,
    pub css_quantile: f64,
    pub css_scale: f64,
}

impl Default for IngestSettings {
    fn default() -> Self {
        IngestSettings {
            orientation: Orientation::SamplesAsRows,
            max_zero_fraction: 0.8,
            css_quantile: 0.5,
            css_scale: cogroup::ingest::CSS_SCALE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub mu_grid: Vec<f64>,
    pub runs: usize,
    pub top_k: Option<usize>,
    pub k_min: usize,
    pub k_max: usize,
    pub sweep_repeats: usize,
    pub aic_formula: AicFormula,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            mu_grid: default_mu_grid(),
            runs: 10,
            top_k: None,
            k_min: 2,
            k_max: 50,
            sweep_repeats: 10,
            aic_formula: AicFormula::Standard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSettings {
    pub repeats: usize,
    pub methods: Vec<String>,
    pub split: SplitConfig,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        EvaluationSettings {
            repeats: 100,
            methods: ["graph", "baseline", "graph-l1", "baseline-l1"]
                .map(String::from)
                .to_vec(),
            split: SplitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsSettings {
    pub resolution: f64,
    pub louvain_seeds: usize,
    /// Edges at or below this weight do not count as links in the location report.
    pub edge_threshold: f64,
    /// Edges at or below this weight are left out of graph exports.
    pub display_threshold: f64,
}

impl Default for AnalyticsSettings {
    fn default() -> Self {
        AnalyticsSettings {
            resolution: 1.0,
            louvain_seeds: cogroup::analytics::DEFAULT_LOUVAIN_SEEDS,
            edge_threshold: 0.0,
            display_threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every random stream derives from it.
    pub seed: u64,
    pub ingest: IngestSettings,
    pub network: NetworkInferenceConfig,
    pub optimizer: OptimizerConfig,
    pub search: SearchSettings,
    pub tune: TuneConfig,
    pub evaluation: EvaluationSettings,
    pub analytics: AnalyticsSettings,
    pub synth: SynthSpec,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Usage(format!("cannot serialize config: {e}")))
    }

    /// Write the resolved configuration next to a command's outputs.
    pub fn write_snapshot(&self, dir: &Path) -> Result<(), CliError> {
        let text = format!(
            "# resolved configuration, format version {}\n{}",
            cogroup::FORMAT_VERSION,
            self.to_toml()?
        );
        fs::create_dir_all(dir).map_err(|e| cogroup::Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let path = dir.join(SNAPSHOT_FILE);
        fs::write(&path, text).map_err(|e| cogroup::Error::Io { path, source: e })?;
        Ok(())
    }
}
