use std::fs;
use std::path::{Path, PathBuf};

use ffsonar::evaluate::EvaluationConfig;
use ffsonar::synth::{DatasetSpec, FillerClass};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a run needs; all randomness comes from `seeds`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub seeds: Seeds,
    pub dataset: DatasetConfig,
    pub evaluation: EvaluationConfig,
    pub roundtrip: RoundtripConfig,
    pub plot: PlotConfig,
}

/// Relative paths are resolved against the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub dataset_dir: PathBuf,
    /// Models trained on the whole dataset are written here; an empty
    /// string skips training them.
    pub model_dir: Option<PathBuf>,
    /// Report files get `.txt`, `.csv` and `.toml` appended.
    pub report: PathBuf,
    pub plot_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            dataset_dir: "dataset".into(),
            model_dir: Some("models".into()),
            report: "report".into(),
            plot_dir: "plots".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub dataset: u64,
    pub cv: u64,
    pub roundtrip: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            dataset: 1,
            cv: 5,
            roundtrip: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub n_per_class: usize,
    #[serde(flatten)]
    pub spec: DatasetSpec,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_per_class: 430,
            spec: DatasetSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundtripConfig {
    pub n_targets: usize,
    /// Gate SNR of the noisy pass; omitted means noiseless only.
    pub snr_db: Option<f64>,
}

impl Default for RoundtripConfig {
    fn default() -> Self {
        Self {
            n_targets: 20,
            snr_db: Some(20.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotConfig {
    /// Dataset recording whose traces and descriptors are dumped.
    pub example_id: usize,
    /// Reference shells for the analytic form-function dump.
    pub radius_m: f64,
    pub thickness_m: f64,
    pub fillers: Vec<FillerClass>,
    pub grid_points: usize,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            example_id: 0,
            radius_m: 0.05,
            thickness_m: 0.005,
            fillers: FillerClass::ALL.to_vec(),
            grid_points: 1501,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.dataset
            .spec
            .validate()
            .map_err(|e| CliError::Config(format!("dataset: {e}")))?;
        if self.dataset.n_per_class == 0 {
            return Err(CliError::Config("dataset.n_per_class must be at least 1".into()));
        }
        if self.evaluation.folds < 2 {
            return Err(CliError::Config("evaluation.folds must be at least 2".into()));
        }
        if self.evaluation.descriptors.is_empty() || self.evaluation.classifiers.is_empty() {
            return Err(CliError::Config(
                "evaluation needs at least one descriptor and one classifier".into(),
            ));
        }
        if self.plot.grid_points < 2 {
            return Err(CliError::Config("plot.grid_points must be at least 2".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds = Seeds {
            dataset: seed,
            cv: seed,
            roundtrip: seed,
        };
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_survives_toml() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = RunConfig::parse("[dataset]\nn_per_class = 3\n[seeds]\ndataset = 9\n").unwrap();
        assert_eq!(cfg.dataset.n_per_class, 3);
        assert_eq!(cfg.seeds.dataset, 9);
        assert_eq!(cfg.seeds.cv, Seeds::default().cv);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(matches!(RunConfig::parse("[seeds]\nbogus = 1\n"), Err(CliError::Config(_))));
        assert!(matches!(
            RunConfig::parse("[dataset]\nn_per_class = 0\n"),
            Err(CliError::Config(_))
        ));
    }
}
