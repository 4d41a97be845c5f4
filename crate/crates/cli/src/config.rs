//! Run configuration: one JSON file drives every stage.
//!
//! Unknown keys are rejected so a typo fails loudly instead of silently
//! falling back to a default. The effective configuration, defaults filled
//! in, is echoed to standard error so every run records what it actually did.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ecgonn::augment::AugmentConfig;
use ecgonn::beats::SegmentParams;
use ecgonn::dataset::SplitPlan;
use ecgonn::selfonn::ModelConfig;
use ecgonn::synth::{read_synth_manifest, SynthConfig};
use ecgonn::train::TrainConfig;

use crate::{usage, CliError};

/// Environment variable naming the default archive directory.
pub const DATA_DIR_ENV: &str = "ECGONN_DATA_DIR";

/// Which records train and which evaluate.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SplitChoice {
    /// Archive convention: the first patient group trains, the second evaluates.
    #[default]
    Forward,
    /// The same two groups with the roles swapped.
    Reversed,
    /// The split a generated corpus declares in its own manifest.
    Synthetic,
    /// Explicit record lists.
    Custom { train: Vec<String>, eval: Vec<String> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Archive directory; the --data-dir flag and the environment override it.
    pub data_dir: Option<PathBuf>,
    pub split: SplitChoice,
    /// When set, replaces the seed of every stage below.
    pub seed: Option<u64>,
    /// Beat window geometry; derived from the sampling rate when absent.
    pub segment: Option<SegmentParams>,
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Rare-class rebalancing; null disables it.
    pub augment: Option<AugmentConfig>,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_dir: None,
            split: SplitChoice::default(),
            seed: None,
            segment: None,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            augment: Some(AugmentConfig::default()),
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads the file when given, starts from defaults otherwise, then
    /// applies the seed override and sanity-checks the result.
    pub fn load(path: Option<&Path>, seed_flag: Option<u64>) -> Result<Self, CliError> {
        let mut config = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str::<RunConfig>(&text)
                    .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = seed_flag {
            config.seed = Some(seed);
        }
        if let Some(seed) = config.seed {
            config.train.seed = seed;
            config.synth.seed = seed;
            if let Some(augment) = config.augment.as_mut() {
                augment.seed = seed;
            }
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.model.classes != 3 {
            return Err(usage(format!(
                "model.classes must be 3, got {}",
                self.model.classes
            )));
        }
        if self.model.in_channels == 0 || self.model.input_len == 0 {
            return Err(usage("model.in_channels and model.input_len must be positive"));
        }
        if self.train.epochs == 0 {
            return Err(usage("train.epochs must be positive"));
        }
        if self.train.batch_size == 0 {
            return Err(usage("train.batch_size must be positive"));
        }
        if !(self.train.base_lr.is_finite() && self.train.base_lr > 0.0) {
            return Err(usage(format!(
                "train.base_lr must be a positive number, got {}",
                self.train.base_lr
            )));
        }
        if let Some(segment) = &self.segment {
            if segment.len == 0 {
                return Err(usage("segment.len must be positive"));
            }
        }
        // Absent an explicit window the segmenter cuts SegmentParams::for_fs
        // windows, so the model must expect that length.
        let effective_len = self
            .segment
            .map(|s| s.len)
            .unwrap_or_else(|| SegmentParams::for_fs(360.0).len);
        if effective_len != self.model.input_len {
            return Err(usage(format!(
                "beat window length ({effective_len}) must match model.input_len ({})",
                self.model.input_len
            )));
        }
        if let Some(augment) = &self.augment {
            if augment.snr_choices_db.is_empty() {
                return Err(usage("augment.snr_choices_db must not be empty"));
            }
            if !(augment.target_fraction.is_finite() && augment.target_fraction >= 0.0) {
                return Err(usage(format!(
                    "augment.target_fraction must be non-negative, got {}",
                    augment.target_fraction
                )));
            }
        }
        if self.synth.records == 0 {
            return Err(usage("synth.records must be positive"));
        }
        if !(self.synth.fs.is_finite() && self.synth.fs > 0.0) {
            return Err(usage(format!(
                "synth.fs must be a positive number, got {}",
                self.synth.fs
            )));
        }
        if let SplitChoice::Custom { train, eval } = &self.split {
            if train.is_empty() || eval.is_empty() {
                return Err(usage("split.custom needs non-empty train and eval lists"));
            }
        }
        Ok(())
    }

    /// Prints the effective configuration so the run log captures it.
    pub fn echo(&self) -> Result<(), CliError> {
        eprintln!("config: {}", serde_json::to_string(self)?);
        Ok(())
    }

    /// Resolves the record split against a data directory.
    pub fn plan(&self, data_dir: &Path) -> Result<SplitPlan, CliError> {
        let plan = match &self.split {
            SplitChoice::Forward => SplitPlan::mit_forward(),
            SplitChoice::Reversed => SplitPlan::mit_reversed(),
            SplitChoice::Synthetic => {
                let manifest = read_synth_manifest(data_dir).map_err(|e| {
                    CliError::Runtime(anyhow::Error::new(e).context(format!(
                        "no synthetic corpus manifest in {}",
                        data_dir.display()
                    )))
                })?;
                SplitPlan::from_synth_manifest(&manifest)?
            }
            SplitChoice::Custom { train, eval } => {
                SplitPlan::from_lists(train.clone(), eval.clone())?
            }
        };
        Ok(plan)
    }
}

/// Picks the archive directory: flag, then config, then environment.
pub fn resolve_data_dir(
    flag: Option<PathBuf>,
    from_config: Option<&Path>,
) -> Result<PathBuf, CliError> {
    if let Some(dir) = flag {
        return Ok(dir);
    }
    if let Some(dir) = from_config {
        return Ok(dir.to_path_buf());
    }
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        if !dir.is_empty() {
            return Ok(PathBuf::from(dir));
        }
    }
    Err(usage(format!(
        "no data directory: pass --data-dir, set data_dir in the config, or set {DATA_DIR_ENV}"
    )))
}
