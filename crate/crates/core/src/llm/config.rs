use serde::Deserialize;

use super::LlmError;

/// Overrides `http.url` when set.
pub const URL_ENV_VAR: &str = "NLPLAN_LLM_URL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Scripted,
    Http,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    pub url: String,
    pub timeout_ms: u64,
    pub completion_path: String,
    pub tokenize_path: String,
    pub embedding_path: String,
    pub embedding_dimension: Option<usize>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            url: "http://127.0.0.1:8080".to_string(),
            timeout_ms: 120_000,
            completion_path: "/completion".to_string(),
            tokenize_path: "/tokenize".to_string(),
            embedding_path: "/embedding".to_string(),
            embedding_dimension: None,
        }
    }
}

/// Backend selection file:
///
/// ```toml
/// backend = "http"          # or "scripted"
/// latency_s = 0.0           # scripted backend: reported per-call latency
/// [http]
/// url = "http://127.0.0.1:8080"
/// timeout_ms = 60000
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub backend: BackendKind,
    pub latency_s: f64,
    pub http: HttpConfig,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            backend: BackendKind::Scripted,
            latency_s: 0.0,
            http: HttpConfig::default(),
        }
    }
}

impl BackendConfig {
    pub fn from_toml(text: &str) -> Result<Self, LlmError> {
        let cfg: BackendConfig =
            toml::from_str(text).map_err(|e| LlmError::InvalidRequest(format!("backend config: {e}")))?;
        if !(cfg.latency_s >= 0.0 && cfg.latency_s.is_finite()) {
            return Err(LlmError::InvalidRequest("latency_s must be non-negative".into()));
        }
        Ok(cfg)
    }

    /// Applies the [`URL_ENV_VAR`] override, if present.
    pub fn with_env(mut self) -> Self {
        if let Ok(url) = std::env::var(URL_ENV_VAR) {
            if !url.trim().is_empty() {
                self.http.url = url.trim().to_string();
            }
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_dotted_and_table_forms() {
        let a = BackendConfig::from_toml("backend = \"http\"\nhttp.url = \"http://h:1\"\nhttp.timeout_ms = 5").unwrap();
        assert_eq!(a.backend, BackendKind::Http);
        assert_eq!(a.http.url, "http://h:1");
        assert_eq!(a.http.timeout_ms, 5);
        let b = BackendConfig::from_toml("[http]\nurl = \"http://h:2\"").unwrap();
        assert_eq!(b.backend, BackendKind::Scripted);
        assert_eq!(b.http.completion_path, "/completion");
        assert!(BackendConfig::from_toml("backend = \"gpu\"").is_err());
        assert!(BackendConfig::from_toml("latency_s = -1.0").is_err());
    }
}
