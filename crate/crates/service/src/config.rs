use std::path::{Path, PathBuf};

use faqbot_core::dialogue::DialogueConfig;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

/// Environment variables that override file settings.
pub const ENV_BIND: &str = "FAQBOT_BIND";
pub const ENV_VERIFY_TOKEN: &str = "FAQBOT_VERIFY_TOKEN";
pub const ENV_ARTIFACT: &str = "FAQBOT_ARTIFACT";
pub const ENV_CATALOG: &str = "FAQBOT_CATALOG";
pub const ENV_RULES_DIR: &str = "FAQBOT_RULES_DIR";
pub const ENV_SNAPSHOT: &str = "FAQBOT_SNAPSHOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    pub artifact: PathBuf,
    pub catalog: PathBuf,
    /// Directory with the three rule files; built-in rules when absent.
    #[serde(default)]
    pub rules_dir: Option<PathBuf>,
    #[serde(default)]
    pub verify_token: String,
    /// Rewritten after every turn when set.
    #[serde(default)]
    pub snapshot: Option<PathBuf>,
    /// Echo webhook replies in the response body.
    #[serde(default = "default_local_mode")]
    pub local_mode: bool,
    #[serde(default)]
    pub dialogue: DialogueConfig,
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

fn default_local_mode() -> bool {
    true
}

impl ServiceConfig {
    pub fn new(
        artifact: impl Into<PathBuf>,
        catalog: impl Into<PathBuf>,
        verify_token: impl Into<String>,
    ) -> Self {
        Self {
            bind: default_bind(),
            artifact: artifact.into(),
            catalog: catalog.into(),
            rules_dir: None,
            verify_token: verify_token.into(),
            snapshot: None,
            local_mode: true,
            dialogue: DialogueConfig::default(),
        }
    }

    pub fn from_toml(src: &str) -> Result<Self, ServiceError> {
        toml::from_str(src).map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Reads a TOML file and applies the process environment overrides.
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&src)?;
        config.apply_env(std::env::vars());
        Ok(config)
    }

    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) {
        for (key, value) in vars {
            match key.as_str() {
                ENV_BIND => self.bind = value,
                ENV_VERIFY_TOKEN => self.verify_token = value,
                ENV_ARTIFACT => self.artifact = value.into(),
                ENV_CATALOG => self.catalog = value.into(),
                ENV_RULES_DIR => self.rules_dir = Some(value.into()),
                ENV_SNAPSHOT => self.snapshot = Some(value.into()),
                _ => {}
            }
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.verify_token.is_empty() {
            return Err(ServiceError::Config(
                "verify_token must not be empty".into(),
            ));
        }
        self.dialogue
            .validate()
            .map_err(|e| ServiceError::Config(e.to_string()))
    }
}
