//! JSON configuration of a comparison run.
//!
//! Errors carry a JSON pointer to the offending field, e.g.
//! `/arms/1/batch_size`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{generate_synthetic, load_csv, Dataset, SyntheticSpec};
use crate::error::{Error, Result};
use crate::harness::{Arm, Experiment, SplitSpec};
use crate::losses::SurrogateParams;
use crate::nn::{LossKind, TrainConfig, MAX_HIDDEN_LAYERS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    Csv { path: PathBuf, label_col: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
}

fn default_hidden() -> Vec<usize> {
    vec![16]
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: default_hidden(),
        }
    }
}

fn default_learning_rate() -> f64 {
    0.1
}

fn default_max_epochs() -> usize {
    40
}

fn default_k() -> f64 {
    SurrogateParams::default().k
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub loss_kind: LossKind,
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_k")]
    pub surrogate_k: f64,
    #[serde(default = "default_true")]
    pub shuffle_each_epoch: bool,
}

impl ArmConfig {
    fn default_name(&self) -> String {
        let kind = match self.loss_kind {
            LossKind::CrossEntropy => "cross_entropy",
            LossKind::AucBinary => "auc_binary",
            LossKind::AucMulticlass => "auc_multiclass",
        };
        format!("{kind}_b{}", self.batch_size)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            max_epochs: self.max_epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            loss_kind: self.loss_kind,
            surrogate: SurrogateParams {
                k: self.surrogate_k,
                ..SurrogateParams::default()
            },
            shuffle_each_epoch: self.shuffle_each_epoch,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub model: ModelConfig,
    pub arms: Vec<ArmConfig>,
    #[serde(default)]
    pub split: SplitSpec,
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

impl CompareConfig {
    /// Parses, fills defaults (arm names included) and validates.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut config: CompareConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = pointer_of(e.path());
            Error::config(pointer, e.into_inner().to_string())
        })?;
        for arm in &mut config.arms {
            if arm.name.is_none() {
                arm.name = Some(arm.default_name());
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        CompareConfig::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if let DatasetSource::Synthetic(spec) = &self.dataset {
            spec.validate()
                .map_err(|e| Error::config("/dataset/synthetic", strip_prefix(e)))?;
        }
        if self.model.hidden.len() > MAX_HIDDEN_LAYERS {
            return Err(Error::config(
                "/model/hidden",
                format!("at most {MAX_HIDDEN_LAYERS} hidden layers supported"),
            ));
        }
        if let Some(i) = self.model.hidden.iter().position(|&h| h == 0) {
            return Err(Error::config(
                format!("/model/hidden/{i}"),
                "layer width must be positive",
            ));
        }
        if self.arms.is_empty() {
            return Err(Error::config("/arms", "need at least one arm"));
        }
        for (i, arm) in self.arms.iter().enumerate() {
            let at = |field: &str| format!("/arms/{i}/{field}");
            if arm.batch_size < 2 {
                return Err(Error::config(
                    at("batch_size"),
                    "batch size must be at least 2",
                ));
            }
            if arm.max_epochs < 1 {
                return Err(Error::config(at("max_epochs"), "must be at least 1"));
            }
            if !(arm.learning_rate.is_finite() && arm.learning_rate >= 0.0) {
                return Err(Error::config(
                    at("learning_rate"),
                    "must be finite and non-negative",
                ));
            }
            if !(arm.surrogate_k.is_finite() && arm.surrogate_k > 0.0) {
                return Err(Error::config(
                    at("surrogate_k"),
                    "must be finite and positive",
                ));
            }
            let name = arm.name.as_deref().unwrap_or_default();
            if self.arms[..i]
                .iter()
                .any(|a| a.name.as_deref() == Some(name))
            {
                return Err(Error::config(
                    at("name"),
                    format!("duplicate arm name `{name}`"),
                ));
            }
        }
        let split = &self.split;
        if split.ratios.iter().any(|r| !(r.is_finite() && *r > 0.0))
            || (split.ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::config(
                "/split/ratios",
                "ratios must be positive and sum to 1",
            ));
        }
        if split.n_repeats < 1 {
            return Err(Error::config("/split/n_repeats", "must be at least 1"));
        }
        Ok(())
    }

    /// Loads or generates the dataset. Relative CSV paths resolve against
    /// `base_dir` when given.
    pub fn load_dataset(&self, base_dir: Option<&Path>) -> Result<Dataset> {
        let dataset = match &self.dataset {
            DatasetSource::Synthetic(spec) => generate_synthetic(spec)?,
            DatasetSource::Csv { path, label_col } => {
                let path = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                load_csv(&path, label_col)?
            }
        };
        self.check_dataset(&dataset)?;
        Ok(dataset)
    }

    /// Checks that every arm can train on a dataset with this many classes.
    pub fn check_dataset(&self, dataset: &Dataset) -> Result<()> {
        let k = dataset.n_classes();
        if k < 2 {
            return Err(Error::config(
                "/dataset",
                "dataset needs at least 2 classes",
            ));
        }
        for (i, arm) in self.arms.iter().enumerate() {
            if arm.loss_kind == LossKind::AucBinary && k != 2 {
                return Err(Error::config(
                    format!("/arms/{i}/loss_kind"),
                    format!("auc_binary needs 2 classes, dataset has {k}"),
                ));
            }
            if arm.batch_size < k {
                return Err(Error::config(
                    format!("/arms/{i}/batch_size"),
                    format!("batch size must be at least the number of classes ({k})"),
                ));
            }
        }
        Ok(())
    }

    pub fn experiment(&self) -> Experiment {
        Experiment {
            arms: self
                .arms
                .iter()
                .map(|a| Arm {
                    name: a.name.clone().unwrap_or_else(|| a.default_name()),
                    train: a.train_config(),
                })
                .collect(),
            hidden: self.model.hidden.clone(),
            split: self.split.clone(),
        }
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::InvalidParams(msg) => msg,
        other => other.to_string(),
    }
}
