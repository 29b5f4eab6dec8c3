//! Run configuration: one TOML file driving every pipeline stage.
//!
//! Every field has a default, so an empty file (or no file at all) is a
//! valid configuration; unknown keys are rejected to catch typos early.
//! Command-line flags override their config counterparts.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyze::IntervalMethod;
use crate::corpus::{Category, ColumnMap};
use crate::gbt::{Loss, TrainParams};
use crate::textprep::{load_stoplist, CleanConfig, StemmerKind};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },
    #[error("invalid config value: {what}")]
    Invalid { what: String },
    #[error(transparent)]
    Stoplist(#[from] crate::textprep::TextPrepError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsSection,
    pub columns: ColumnsSection,
    pub clean: CleanSection,
    pub dtm: DtmSection,
    pub corpus: CorpusSection,
    pub train: TrainSection,
    pub evaluate: EvaluateSection,
    pub analyze: AnalyzeSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source: Box::new(source),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    /// Labeled input CSV.
    pub input: Option<PathBuf>,
    /// Directory all outputs are written under.
    pub out_dir: Option<PathBuf>,
    /// Fitted model JSON (written by `train`, read by `evaluate`/`analyze`).
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnsSection {
    pub id: String,
    pub group: String,
    pub text: String,
    pub label: String,
    pub coder: String,
}

impl Default for ColumnsSection {
    fn default() -> Self {
        ColumnsSection {
            id: "id".into(),
            group: "group".into(),
            text: "text".into(),
            label: "label".into(),
            coder: "coder".into(),
        }
    }
}

impl ColumnsSection {
    pub fn to_column_map(&self) -> ColumnMap {
        ColumnMap {
            id: self.id.clone(),
            group: self.group.clone(),
            text: self.text.clone(),
            label: Some(self.label.clone()),
            coder: Some(self.coder.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanSection {
    /// Replacement stop-word list, one word per line; `None` keeps the
    /// bundled list.
    pub stoplist: Option<PathBuf>,
    pub strip_urls: bool,
    /// Keep the bodies of #hashtag and @mention tokens as ordinary words.
    pub keep_tag_bodies: bool,
    /// `"porter"` or `"none"`.
    pub stemmer: String,
}

impl Default for CleanSection {
    fn default() -> Self {
        CleanSection {
            stoplist: None,
            strip_urls: true,
            keep_tag_bodies: true,
            stemmer: "porter".into(),
        }
    }
}

impl CleanSection {
    pub fn to_clean_config(&self) -> Result<CleanConfig, ConfigError> {
        let stoplist = match &self.stoplist {
            Some(path) => load_stoplist(path)?,
            None => crate::textprep::default_stoplist(),
        };
        let stemmer = StemmerKind::from_str(&self.stemmer).map_err(|e| ConfigError::Invalid {
            what: e.to_string(),
        })?;
        Ok(CleanConfig {
            stoplist,
            strip_urls: self.strip_urls,
            keep_hash_mention_bodies: self.keep_tag_bodies,
            stemmer,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtmSection {
    /// Maximum allowed absence fraction per term; see the pruning rule.
    pub max_sparsity: f64,
}

impl Default for DtmSection {
    fn default() -> Self {
        DtmSection { max_sparsity: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    /// Subsample this many documents before splitting; `None` keeps all.
    pub sample_size: Option<usize>,
    pub train_fraction: f64,
    /// Category whose presence the binary classifier learns.
    pub target: String,
    /// Coder whose labels are ground truth; `None` means the first coder
    /// in sorted order.
    pub coder: Option<String>,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            sample_size: None,
            train_fraction: 0.7,
            target: "Performative".into(),
            coder: None,
        }
    }
}

impl CorpusSection {
    pub fn target_category(&self) -> Result<Category, ConfigError> {
        Category::from_str(&self.target).map_err(|other| ConfigError::Invalid {
            what: format!("unknown target category {other:?}"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// `"logistic"`, `"squared"`, or `"absolute"`.
    pub loss: String,
    pub n_rounds: u32,
    pub learning_rate: f64,
    pub max_depth: u32,
    pub min_node_weight: f64,
    pub positive_class_weight: Option<f64>,
    pub threshold: f64,
    /// Cross-validation folds for early stopping; 0 disables it.
    pub folds: usize,
    pub seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let p = TrainParams::default();
        TrainSection {
            loss: p.loss.as_str().into(),
            n_rounds: p.n_rounds,
            learning_rate: p.learning_rate,
            max_depth: p.max_depth,
            min_node_weight: p.min_node_weight,
            positive_class_weight: p.positive_class_weight,
            threshold: p.threshold,
            folds: 5,
            seed: p.seed,
        }
    }
}

impl TrainSection {
    pub fn to_params(&self) -> Result<TrainParams, ConfigError> {
        let loss = Loss::from_str(&self.loss).map_err(|e| ConfigError::Invalid {
            what: e.to_string(),
        })?;
        Ok(TrainParams {
            loss,
            n_rounds: self.n_rounds,
            learning_rate: self.learning_rate,
            max_depth: self.max_depth,
            min_node_weight: self.min_node_weight,
            positive_class_weight: self.positive_class_weight,
            threshold: self.threshold,
            seed: self.seed,
        })
    }
}

/// Which labeled documents `evaluate` scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    /// The held-out side of the train/test split.
    #[default]
    Test,
    /// Every labeled document, split ignored.
    All,
}

impl FromStr for Partition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "test" => Ok(Partition::Test),
            "all" => Ok(Partition::All),
            other => Err(format!("unknown partition {other:?}; use test or all")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    /// `"test"` (held-out side of the split) or `"all"`.
    pub partition: String,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            partition: "test".into(),
        }
    }
}

impl EvaluateSection {
    pub fn partition(&self) -> Result<Partition, ConfigError> {
        Partition::from_str(&self.partition).map_err(|what| ConfigError::Invalid { what })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeSection {
    /// Interval confidence level: 0.90, 0.95, or 0.99.
    pub confidence: f64,
    /// `"normal"` or `"wilson"`.
    pub interval: String,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        AnalyzeSection {
            confidence: 0.95,
            interval: "normal".into(),
        }
    }
}

impl AnalyzeSection {
    pub fn method(&self) -> Result<IntervalMethod, ConfigError> {
        match self.interval.trim().to_lowercase().as_str() {
            "normal" => Ok(IntervalMethod::Normal),
            "wilson" => Ok(IntervalMethod::Wilson),
            other => Err(ConfigError::Invalid {
                what: format!("unknown interval method {other:?}; use normal or wilson"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn empty_config_is_all_defaults() {
        let config: RunConfig = toml::from_str("").unwrap();
        assert_eq!(config, RunConfig::default());
        assert_eq!(config.train.to_params().unwrap(), TrainParams::default());
        assert_eq!(config.evaluate.partition().unwrap(), Partition::Test);
        assert_eq!(config.analyze.method().unwrap(), IntervalMethod::Normal);
        assert_eq!(config.dtm.max_sparsity, 0.95);
        assert_eq!(config.train.folds, 5);
    }

    #[test]
    fn sections_override_individually() {
        let text = r#"
            [paths]
            input = "coded.csv"
            out_dir = "runs/a"

            [columns]
            text = "tweet_text"

            [clean]
            strip_urls = false
            stemmer = "none"

            [corpus]
            target = "moral"
            coder = "expert"
            train_fraction = 0.8

            [train]
            loss = "squared"
            n_rounds = 40
            folds = 0

            [evaluate]
            partition = "all"

            [analyze]
            confidence = 0.99
            interval = "wilson"
        "#;
        let config: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(config.paths.input.as_deref(), Some(Path::new("coded.csv")));
        assert_eq!(config.columns.to_column_map().text, "tweet_text");
        assert_eq!(config.columns.to_column_map().id, "id");
        let clean = config.clean.to_clean_config().unwrap();
        assert!(!clean.strip_urls);
        assert_eq!(clean.stemmer, StemmerKind::None);
        assert_eq!(config.corpus.target_category().unwrap(), Category::Moral);
        let params = config.train.to_params().unwrap();
        assert_eq!(params.loss, Loss::Squared);
        assert_eq!(params.n_rounds, 40);
        assert_eq!(params.max_depth, 6);
        assert_eq!(config.evaluate.partition().unwrap(), Partition::All);
        assert_eq!(config.analyze.method().unwrap(), IntervalMethod::Wilson);
        assert_eq!(config.analyze.confidence, 0.99);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[train]\nlearning_rat = 0.1").is_err());
        assert!(toml::from_str::<RunConfig>("[trian]\nseed = 1").is_err());
    }

    #[test]
    fn bad_enumerations_fail_with_context() {
        let config: RunConfig = toml::from_str("[train]\nloss = \"hinge\"").unwrap();
        assert!(config.train.to_params().is_err());
        let config: RunConfig = toml::from_str("[corpus]\ntarget = \"sarcasm\"").unwrap();
        assert!(config.corpus.target_category().is_err());
        let config: RunConfig = toml::from_str("[evaluate]\npartition = \"half\"").unwrap();
        assert!(config.evaluate.partition().is_err());
    }

    #[test]
    fn custom_stoplist_is_loaded_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stop.txt");
        let mut file = std::fs::File::create(&path).unwrap();
        writeln!(file, "# comment\nfoo\nBAR\n").unwrap();
        let section = CleanSection {
            stoplist: Some(path),
            ..CleanSection::default()
        };
        let clean = section.to_clean_config().unwrap();
        assert!(clean.stoplist.contains("foo"));
        assert!(clean.stoplist.contains("bar"));
        assert!(!clean.stoplist.contains("the"));
    }

    #[test]
    fn load_reports_missing_files_and_parse_errors() {
        let err = RunConfig::load(Path::new("/nonexistent/config.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Io { .. }));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "not = [valid").unwrap();
        let err = RunConfig::load(&path).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }));
    }
}
