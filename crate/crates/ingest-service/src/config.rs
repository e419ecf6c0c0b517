use std::collections::HashSet;
use std::path::PathBuf;

use serde::Deserialize;
use telemetry_model::AuthToken;
use thiserror::Error;

/// Receipt stamps render in El Salvador local time unless configured.
pub const DEFAULT_DISPLAY_OFFSET_S: i32 = -6 * 3600;

fn default_bind() -> String {
    "127.0.0.1:8080".to_string()
}

fn default_display_offset() -> i32 {
    DEFAULT_DISPLAY_OFFSET_S
}

/// Service configuration, usually loaded from a TOML file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    pub store_path: PathBuf,
    /// Seconds east of UTC used for the CSV "stamp" column.
    #[serde(default = "default_display_offset")]
    pub display_offset_s: i32,
    pub tokens: Vec<AuthToken>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("duplicate token {0:?} in token table")]
    DuplicateToken(String),
    #[error("invalid token entry: {0}")]
    BadToken(String),
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut seen = HashSet::new();
        for entry in &self.tokens {
            entry
                .validate()
                .map_err(|e| ConfigError::BadToken(e.to_string()))?;
            if !seen.insert(entry.token.as_str()) {
                return Err(ConfigError::DuplicateToken(entry.token.clone()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(tokens: Vec<AuthToken>) -> ServiceConfig {
        ServiceConfig {
            bind: default_bind(),
            store_path: PathBuf::from("/tmp/store"),
            display_offset_s: DEFAULT_DISPLAY_OFFSET_S,
            tokens,
        }
    }

    fn token(t: &str, d: &str) -> AuthToken {
        AuthToken { token: t.into(), device_id: d.into() }
    }

    #[test]
    fn duplicate_tokens_rejected() {
        let cfg = config(vec![token("tok", "A"), token("tok", "B")]);
        assert_eq!(
            cfg.validate(),
            Err(ConfigError::DuplicateToken("tok".into()))
        );
    }

    #[test]
    fn empty_token_rejected() {
        let cfg = config(vec![token("", "A")]);
        assert!(matches!(cfg.validate(), Err(ConfigError::BadToken(_))));
    }

    #[test]
    fn distinct_tokens_pass() {
        config(vec![token("t1", "A"), token("t2", "B")])
            .validate()
            .unwrap();
    }
}
