//! Experiment config file (TOML). Every key is optional; command-line
//! flags override file values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use codemix::corpus::{InputFormat, SplitOptions};
use codemix::models::{CnnConfig, LinearTextConfig};
use codemix::providers::ProviderConfig;
use codemix::{LidConfig, Task};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data: DataSection,
    pub split: SplitSection,
    pub translit: TranslitSection,
    pub provider: ProviderSection,
    pub convert: ConvertSection,
    /// Overrides of the identifier defaults.
    pub lid: toml::Table,
    /// Overrides of the linear model defaults.
    pub linear: toml::Table,
    /// Overrides of the task-specific CNN defaults.
    pub cnn: toml::Table,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub path: Option<PathBuf>,
    pub format: String,
    pub task: String,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection { path: None, format: "records".into(), task: "sarcasm".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub seed: u64,
    pub test_frac: f64,
    pub val_frac: f64,
    pub stratify: bool,
}

impl Default for SplitSection {
    fn default() -> Self {
        let d = SplitOptions::default();
        SplitSection { seed: d.seed, test_frac: d.test_frac, val_frac: d.val_frac, stratify: d.stratify }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslitSection {
    pub rules: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub schwa_deletion: bool,
}

impl Default for TranslitSection {
    fn default() -> Self {
        TranslitSection { rules: None, lexicon: None, schwa_deletion: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderSection {
    /// "http", "mock-echo" or "mock-dictionary".
    pub kind: Option<String>,
    pub endpoint: String,
    pub cache: Option<PathBuf>,
    /// Lookup table for the dictionary mock.
    pub dictionary: Option<PathBuf>,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_base_secs: f64,
    pub backoff_factor: f64,
    pub batch_size: usize,
    pub rate_limit: u32,
}

impl Default for ProviderSection {
    fn default() -> Self {
        let d = ProviderConfig::default();
        ProviderSection {
            kind: None,
            endpoint: d.endpoint,
            cache: None,
            dictionary: None,
            timeout_secs: d.timeout_secs,
            max_retries: d.max_retries,
            backoff_base_secs: d.backoff_base_secs,
            backoff_factor: d.backoff_factor,
            batch_size: d.batch_size,
            rate_limit: d.rate_limit,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvertSection {
    pub variant: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Applies `overrides` on top of `base`, rejecting keys `base` lacks.
fn overlay<T: Serialize + DeserializeOwned>(base: T, overrides: &toml::Table, section: &str) -> Result<T> {
    let mut table = toml::Table::try_from(&base).with_context(|| format!("serializing [{section}] defaults"))?;
    for (k, v) in overrides {
        if !table.contains_key(k) {
            bail!("unknown key {k:?} in [{section}]");
        }
        table.insert(k.clone(), v.clone());
    }
    table.try_into().with_context(|| format!("invalid value in [{section}]"))
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let src = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&src).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(src: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(src)?;
        // Surface bad model overrides at load time.
        cfg.lid_config(None)?;
        cfg.linear_config(None)?;
        cfg.cnn_config(Task::Sarcasm, None)?;
        Ok(cfg)
    }

    pub fn task(&self) -> Result<Task> {
        self.data.task.parse().map_err(anyhow::Error::msg)
    }

    pub fn format(&self) -> Result<InputFormat> {
        self.data.format.parse().map_err(anyhow::Error::msg)
    }

    pub fn split_options(&self, seed: Option<u64>) -> SplitOptions {
        SplitOptions {
            seed: seed.unwrap_or(self.split.seed),
            test_frac: self.split.test_frac,
            val_frac: self.split.val_frac,
            stratify: self.split.stratify,
        }
    }

    pub fn lid_config(&self, seed: Option<u64>) -> Result<LidConfig> {
        let mut c = overlay(LidConfig::default(), &self.lid, "lid")?;
        if let Some(s) = seed {
            c.seed = s;
        }
        Ok(c)
    }

    pub fn linear_config(&self, seed: Option<u64>) -> Result<LinearTextConfig> {
        let mut c = overlay(LinearTextConfig::default(), &self.linear, "linear")?;
        if let Some(s) = seed {
            c.seed = s;
        }
        Ok(c)
    }

    pub fn cnn_config(&self, task: Task, seed: Option<u64>) -> Result<CnnConfig> {
        let mut c = overlay(CnnConfig::for_task(task), &self.cnn, "cnn")?;
        if let Some(s) = seed {
            c.seed = s;
        }
        Ok(c)
    }

    pub fn provider_config(&self) -> ProviderConfig {
        let p = &self.provider;
        ProviderConfig {
            endpoint: p.endpoint.clone(),
            api_key: None,
            timeout_secs: p.timeout_secs,
            max_retries: p.max_retries,
            backoff_base_secs: p.backoff_base_secs,
            backoff_factor: p.backoff_factor,
            batch_size: p.batch_size,
            rate_limit: p.rate_limit,
        }
        .with_env_key()
    }
}
