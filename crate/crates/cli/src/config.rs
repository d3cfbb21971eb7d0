//! Path resolution: command-line flag, then config file, then a default
//! file name under `$STATUTE_HOME`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

pub const HOME_ENV: &str = "STATUTE_HOME";
pub const CONFIG_FILE: &str = "statelaw.toml";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub corpus_path: Option<PathBuf>,
    pub census_path: Option<PathBuf>,
    pub index_path: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub tagged_path: Option<PathBuf>,
    pub store_path: Option<PathBuf>,
    pub keyword_config: Option<PathBuf>,
    pub ui_config: Option<PathBuf>,
    pub tokens_path: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub listen_addr: Option<String>,
}

/// Which configured path a flag falls back to.
#[derive(Debug, Clone, Copy)]
pub enum Slot {
    Corpus,
    Census,
    Index,
    Model,
    Tagged,
    Store,
}

impl Slot {
    fn file_name(self) -> &'static str {
        match self {
            Slot::Corpus => "corpus.jsonl",
            Slot::Census => "census.jsonl",
            Slot::Index => "index.sidx",
            Slot::Model => "model.crf",
            Slot::Tagged => "tagged.jsonl",
            Slot::Store => "tasks.log",
        }
    }

    fn flag(self) -> &'static str {
        match self {
            Slot::Corpus => "corpus",
            Slot::Census => "census",
            Slot::Index => "index",
            Slot::Model => "model",
            Slot::Tagged => "tagged",
            Slot::Store => "store",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Paths {
    config: CliConfig,
    home: Option<PathBuf>,
}

impl Paths {
    /// Loads `explicit`, or `$STATUTE_HOME/statelaw.toml` when present.
    pub fn load(explicit: Option<&Path>) -> Result<Self, CliError> {
        let home = std::env::var_os(HOME_ENV).filter(|h| !h.is_empty()).map(PathBuf::from);
        let file = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => home.as_ref().map(|h| h.join(CONFIG_FILE)).filter(|p| p.exists()),
        };
        let config = match file {
            None => CliConfig::default(),
            Some(p) => {
                let body = std::fs::read_to_string(&p).map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))?;
                toml::from_str(&body).map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))?
            }
        };
        Ok(Paths { config, home })
    }

    pub fn config(&self) -> &CliConfig {
        &self.config
    }

    pub fn resolve(&self, flag: Option<PathBuf>, slot: Slot) -> Result<PathBuf, CliError> {
        let configured = match slot {
            Slot::Corpus => &self.config.corpus_path,
            Slot::Census => &self.config.census_path,
            Slot::Index => &self.config.index_path,
            Slot::Model => &self.config.model_path,
            Slot::Tagged => &self.config.tagged_path,
            Slot::Store => &self.config.store_path,
        };
        flag.or_else(|| configured.clone())
            .or_else(|| self.home.as_ref().map(|h| h.join(slot.file_name())))
            .ok_or_else(|| CliError::Usage(format!("--{} is required (or set {HOME_ENV} or a config file)", slot.flag())))
    }

    /// Optional file: flag, then config, then the default name under the
    /// home directory if that file exists.
    pub fn optional(&self, flag: Option<PathBuf>, configured: &Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
        flag.or_else(|| configured.clone())
            .or_else(|| self.home.as_ref().map(|h| h.join(default_name)).filter(|p| p.exists()))
    }
}
