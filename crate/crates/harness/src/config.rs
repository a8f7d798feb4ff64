//! Run configuration: one JSON file, overridable from the command line.

use std::path::{Path, PathBuf};

use reasoneval_core::deduction::DEFAULT_KS;
use reasoneval_core::delineation::DelineatorConfig;
use reasoneval_core::findings::{AntonymMap, FlipMode, Lexicon};
use reasoneval_core::kb::{BuiltinCleaner, BuiltinEmbedder, Cleaner, Embedder, LabelVocabulary, Strategy, SynonymTable};
use reasoneval_core::limits::NormalLimits;
use serde::{Deserialize, Serialize};

use crate::provider::{Endpoint, ProviderCleaner, ProviderEmbedder};

pub const WORKERS_ENV: &str = "REASONEVAL_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbedderConfig {
    Builtin {
        #[serde(default = "builtin_dim")]
        dim: usize,
        #[serde(default = "yes")]
        log_tf: bool,
    },
    Provider { name: String, dim: usize, endpoint: Endpoint },
}

fn builtin_dim() -> usize {
    reasoneval_core::kb::BUILTIN_DIM
}

fn yes() -> bool {
    true
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig::Builtin { dim: builtin_dim(), log_tf: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CleanerConfig {
    Builtin,
    Provider { name: String, endpoint: Endpoint },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub limits: NormalLimits,
    pub delineator: DelineatorConfig,
    pub seed: u64,
    pub ks: Vec<usize>,
    pub flip: FlipMode,
    pub workers: Option<usize>,
    pub kb_dir: Option<PathBuf>,
    pub lexicon_path: Option<PathBuf>,
    pub antonyms_path: Option<PathBuf>,
    pub synonyms_path: Option<PathBuf>,
    pub labels_path: Option<PathBuf>,
    pub embedder: EmbedderConfig,
    pub cleaners: Vec<CleanerConfig>,
    pub strategies: Vec<Strategy>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            limits: NormalLimits::default(),
            delineator: DelineatorConfig::default(),
            seed: 0,
            ks: DEFAULT_KS.to_vec(),
            flip: FlipMode::All,
            workers: None,
            kb_dir: None,
            lexicon_path: None,
            antonyms_path: None,
            synonyms_path: None,
            labels_path: None,
            embedder: EmbedderConfig::default(),
            cleaners: vec![CleanerConfig::Builtin],
            strategies: vec![Strategy::ExactQuote, Strategy::StructuredSynthesis],
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid {what}: {msg}")]
    Invalid { what: String, msg: String },
}

fn invalid(what: &str, msg: impl ToString) -> ConfigError {
    ConfigError::Invalid { what: what.to_string(), msg: msg.to_string() }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let cfg: Config = serde_json::from_str(&read(path)?).map_err(|e| invalid("config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.limits.validate().map_err(|e| invalid("limits", e))?;
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(invalid("ks", "need at least one k, each ≥ 1"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        if let EmbedderConfig::Builtin { dim: 0, .. } | EmbedderConfig::Provider { dim: 0, .. } = self.embedder {
            return Err(invalid("embedder", "dim must be positive"));
        }
        if self.cleaners.is_empty() || self.strategies.is_empty() {
            return Err(invalid("cleaners", "need at least one cleaner and one strategy"));
        }
        Ok(())
    }

    /// Worker count: explicit setting, then the environment, then the
    /// number of available cores.
    pub fn resolve_workers(&self) -> Result<usize, ConfigError> {
        if let Some(w) = self.workers {
            return Ok(w);
        }
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            return match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(invalid(WORKERS_ENV, format!("expected a positive integer, got `{v}`"))),
            };
        }
        Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn embedder(&self) -> Box<dyn Embedder> {
        match &self.embedder {
            EmbedderConfig::Builtin { dim, log_tf } => Box::new(BuiltinEmbedder { dim: *dim, log_tf: *log_tf }),
            EmbedderConfig::Provider { name, dim, endpoint } => Box::new(ProviderEmbedder::new(name, *dim, endpoint.clone())),
        }
    }

    pub fn cleaners(&self) -> Vec<Box<dyn Cleaner>> {
        self.cleaners
            .iter()
            .map(|c| -> Box<dyn Cleaner> {
                match c {
                    CleanerConfig::Builtin => Box::new(BuiltinCleaner::new(&self.limits)),
                    CleanerConfig::Provider { name, endpoint } => Box::new(ProviderCleaner::new(name, endpoint.clone())),
                }
            })
            .collect()
    }

    pub fn assets(&self) -> Result<Assets, ConfigError> {
        let lexicon = match &self.lexicon_path {
            Some(p) => Lexicon::from_json(&read(p)?, &self.limits).map_err(|e| invalid("lexicon", e))?,
            None => Lexicon::builtin(&self.limits),
        };
        let antonyms = match &self.antonyms_path {
            Some(p) => AntonymMap::from_json(&read(p)?).map_err(|e| invalid("antonym map", e))?,
            None => AntonymMap::builtin(),
        };
        let synonyms = match &self.synonyms_path {
            Some(p) => SynonymTable::from_json(&read(p)?).map_err(|e| invalid("synonym table", e))?,
            None => SynonymTable::builtin(),
        };
        let vocabulary = match &self.labels_path {
            Some(p) => LabelVocabulary::from_json(&read(p)?).map_err(|e| invalid("label vocabulary", e))?,
            None => LabelVocabulary::builtin(),
        };
        Ok(Assets { lexicon, antonyms, synonyms, vocabulary })
    }
}

/// Shared read-only assets for a run.
pub struct Assets {
    pub lexicon: Lexicon,
    pub antonyms: AntonymMap,
    pub synonyms: SynonymTable,
    pub vocabulary: LabelVocabulary,
}
