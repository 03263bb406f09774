use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backends::DecodeConfig;
use crate::budget::BudgetConfig;
use crate::error::{Error, Result};
use crate::filtering::FilterConfig;
use crate::text::DEFAULT_MAX_PARAGRAPH_CHARS;

pub const MOCK: &str = "mock";

/// Where each backend lives: `"mock"` or a base URL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub generator: String,
    pub answerer: String,
    pub classifier: String,
    pub timeout_ms: u64,
    pub retries: u32,
    /// Upper bound on concurrent requests per backend client.
    pub max_in_flight: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            generator: MOCK.into(),
            answerer: MOCK.into(),
            classifier: MOCK.into(),
            timeout_ms: 30_000,
            retries: 2,
            max_in_flight: 8,
        }
    }
}

impl BackendConfig {
    /// Points every backend at the same base URL, or at the mocks.
    pub fn all(endpoint: &str) -> Self {
        Self {
            generator: endpoint.into(),
            answerer: endpoint.into(),
            classifier: endpoint.into(),
            ..Self::default()
        }
    }

    pub fn is_mock(&self) -> bool {
        self.generator == MOCK && self.answerer == MOCK
    }

    pub fn validate(&self) -> Result<()> {
        for (name, e) in [
            ("generator", &self.generator),
            ("answerer", &self.answerer),
            ("classifier", &self.classifier),
        ] {
            if e != MOCK && !(e.starts_with("http://") || e.starts_with("https://")) {
                return Err(Error::InvalidConfig(format!(
                    "{name} endpoint {e:?} must be \"mock\" or an http(s) URL"
                )));
            }
        }
        if self.max_in_flight == 0 {
            return Err(Error::InvalidConfig("max_in_flight must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub backend: BackendConfig,
    pub decode: DecodeConfig,
    pub filter: FilterConfig,
    pub budget: BudgetConfig,
    /// Paragraph worker threads. Left out of output snapshots since it
    /// never changes results.
    #[serde(skip_serializing)]
    pub workers: usize,
    pub max_paragraph_chars: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            backend: BackendConfig::default(),
            decode: DecodeConfig::default(),
            filter: FilterConfig::default(),
            budget: BudgetConfig::default(),
            workers: 4,
            max_paragraph_chars: DEFAULT_MAX_PARAGRAPH_CHARS,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.backend.validate()?;
        self.filter.validate()?;
        self.budget.validate()?;
        let d = &self.decode;
        if d.k == 0 || !(d.p > 0.0 && d.p <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "bad decode parameters k={} p={}",
                d.k, d.p
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if self.max_paragraph_chars == 0 {
            return Err(Error::InvalidConfig("max_paragraph_chars must be at least 1".into()));
        }
        Ok(())
    }

    /// Parses TOML, or JSON when `json` is set.
    pub fn parse(text: &str, json: bool) -> Result<Self> {
        let config: Self = if json {
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    /// Loads a config file: JSON for `.json`, TOML otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::parse(&text, json)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }
}
