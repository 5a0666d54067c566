//! Service configuration: a TOML file with environment overrides.

use std::path::{Path, PathBuf};

use interview_core::{EngineConfig, LiveConfig, Mode};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Mock,
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoreKind {
    #[default]
    File,
    Memory,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSettings {
    pub kind: BackendKind,
    pub live: LiveConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoreSettings {
    pub kind: StoreKind,
    pub path: PathBuf,
}

impl Default for StoreSettings {
    fn default() -> Self {
        Self {
            kind: StoreKind::File,
            path: PathBuf::from("sessions.json"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    /// Extra `*.json` trees served next to the bundled `mini` tree; the file stem is the name.
    pub tree_dir: Option<PathBuf>,
    pub store: StoreSettings,
    pub backend: BackendSettings,
    pub mode: Mode,
    pub engine: EngineConfig,
    /// When set, requests other than `/healthz` must carry it in `x-interview-secret`.
    pub shared_secret: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            tree_dir: None,
            store: StoreSettings::default(),
            backend: BackendSettings::default(),
            mode: Mode::Psycot,
            engine: EngineConfig::default(),
            shared_secret: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path}: {message}")]
    File { path: String, message: String },
    #[error("environment variable {name}: {message}")]
    Env { name: String, message: String },
}

pub const ENV_PREFIX: &str = "INTERVIEW_";

impl ServiceConfig {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Reads `path` if given (defaults otherwise), then applies process environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let err = |message: String| ConfigError::File {
                    path: p.display().to_string(),
                    message,
                };
                let text = std::fs::read_to_string(p).map_err(|e| err(e.to_string()))?;
                Self::parse(&text).map_err(|e| err(e.to_string()))?
            }
            None => Self::default(),
        };
        config.apply_env(std::env::vars())?;
        Ok(config)
    }

    /// Recognized: `INTERVIEW_LISTEN`, `INTERVIEW_TREE_DIR`, `INTERVIEW_STORE`
    /// (`file`|`memory`), `INTERVIEW_STORE_PATH`, `INTERVIEW_BACKEND` (`mock`|`live`),
    /// `INTERVIEW_BASE_URL`, `INTERVIEW_MODEL`, `INTERVIEW_MODE`, `INTERVIEW_SHARED_SECRET`.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        for (name, value) in vars {
            let Some(key) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let bad = |message: &str| ConfigError::Env {
                name: name.clone(),
                message: message.to_string(),
            };
            match key {
                "LISTEN" => self.listen = value,
                "TREE_DIR" => self.tree_dir = Some(value.into()),
                "STORE" => {
                    self.store.kind = match value.as_str() {
                        "file" => StoreKind::File,
                        "memory" => StoreKind::Memory,
                        _ => return Err(bad("expected file or memory")),
                    }
                }
                "STORE_PATH" => self.store.path = value.into(),
                "BACKEND" => {
                    self.backend.kind = match value.as_str() {
                        "mock" => BackendKind::Mock,
                        "live" => BackendKind::Live,
                        _ => return Err(bad("expected mock or live")),
                    }
                }
                "BASE_URL" => self.backend.live.base_url = value,
                "MODEL" => self.backend.live.model = value,
                "MODE" => self.mode = value.parse().map_err(|_| bad("expected vanilla, cot or psycot"))?,
                "SHARED_SECRET" => self.shared_secret = (!value.is_empty()).then_some(value),
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_env() {
        let mut c = ServiceConfig::parse(
            r#"
            listen = "0.0.0.0:9000"
            mode = "cot"
            [store]
            kind = "memory"
            [backend]
            kind = "live"
            [backend.live]
            model = "m1"
            [engine]
            threshold = 3
            "#,
        )
        .unwrap();
        assert_eq!(c.listen, "0.0.0.0:9000");
        assert_eq!(c.mode, Mode::Cot);
        assert_eq!(c.engine.threshold, 3);
        assert_eq!(c.engine.forced_choice_retries, 2);
        assert_eq!(c.backend.live.model, "m1");
        let env = [
            ("INTERVIEW_LISTEN", "127.0.0.1:1"),
            ("INTERVIEW_MODEL", "m2"),
            ("INTERVIEW_STORE_PATH", "/tmp/x.json"),
            ("INTERVIEW_SHARED_SECRET", "s"),
            ("PATH", "/bin"),
        ];
        c.apply_env(env.map(|(k, v)| (k.to_string(), v.to_string()))).unwrap();
        assert_eq!(c.listen, "127.0.0.1:1");
        assert_eq!(c.backend.live.model, "m2");
        assert_eq!(c.store.path, PathBuf::from("/tmp/x.json"));
        assert_eq!(c.shared_secret.as_deref(), Some("s"));
    }

    #[test]
    fn bad_values_are_rejected() {
        let mut c = ServiceConfig::default();
        let err = c.apply_env([("INTERVIEW_BACKEND".to_string(), "gpt".to_string())]);
        assert!(matches!(err, Err(ConfigError::Env { .. })));
        assert!(ServiceConfig::parse("listen = 3").is_err());
        assert!(ServiceConfig::parse("colour = \"red\"").is_err());
    }
}
