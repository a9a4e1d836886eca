use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::config::HttpConfig;
use super::embed::{Embedder, Embedding};
use super::{GenerationRequest, GenerationResult, LlmBackend, LlmError};

/// Client for a llama.cpp-style server (`/completion`, `/tokenize`,
/// `/embedding`). The grammar travels in GBNF form so servers that support
/// constrained decoding can apply it while sampling.
pub struct HttpBackend {
    id: String,
    config: HttpConfig,
    agent: ureq::Agent,
    dimension: Mutex<Option<usize>>,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(true)
            .build()
            .into();
        HttpBackend {
            id: format!("http:{}", config.url),
            dimension: Mutex::new(config.embedding_dimension),
            config,
            agent,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.url.trim_end_matches('/'), path)
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value, LlmError> {
        let timeout = Duration::from_millis(self.config.timeout_ms);
        let map_err = |e: ureq::Error| match e {
            ureq::Error::Timeout(_) => LlmError::Timeout(timeout),
            ureq::Error::StatusCode(code) => LlmError::Protocol(format!("HTTP status {code}")),
            ureq::Error::Json(e) => LlmError::Protocol(format!("invalid JSON body: {e}")),
            other => LlmError::BackendUnavailable(other.to_string()),
        };
        let response = self.agent.post(&self.url(path)).send_json(body).map_err(map_err)?;
        response.into_body().read_json::<Value>().map_err(map_err)
    }
}

fn embedding_values(v: &Value) -> Option<Vec<f64>> {
    let field = match v {
        Value::Array(items) => items.first()?.get("embedding")?,
        other => other.get("embedding")?,
    };
    let flat = match field.as_array()?.first() {
        Some(Value::Array(_)) => field.as_array()?.first()?,
        _ => field,
    };
    flat.as_array()?.iter().map(Value::as_f64).collect()
}

impl Embedder for HttpBackend {
    fn dimension(&self) -> usize {
        self.dimension.lock().expect("dimension lock").unwrap_or(0)
    }

    fn embed(&self, text: &str) -> Result<Embedding, LlmError> {
        let reply = self.post(&self.config.embedding_path, &json!({ "content": text }))?;
        let values = embedding_values(&reply)
            .ok_or_else(|| LlmError::EmbeddingFailed("response has no numeric `embedding`".into()))?;
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(LlmError::EmbeddingFailed("empty or non-finite embedding".into()));
        }
        let mut dim = self.dimension.lock().expect("dimension lock");
        match *dim {
            Some(d) if d != values.len() => {
                return Err(LlmError::EmbeddingFailed(format!(
                    "expected dimension {d}, got {}",
                    values.len()
                )))
            }
            None => *dim = Some(values.len()),
            _ => {}
        }
        Ok(Embedding { values })
    }
}

impl LlmBackend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &GenerationRequest) -> Result<GenerationResult, LlmError> {
        let mut body = json!({
            "prompt": request.prompt,
            "n_predict": request.max_tokens,
            "temperature": request.temperature,
            "stop": request.stop_sequences,
        });
        if let Some(g) = &request.grammar {
            body["grammar"] = json!(g.source());
        }
        if let Some(seed) = request.seed {
            body["seed"] = json!(seed);
        }
        let started = Instant::now();
        let reply = self.post(&self.config.completion_path, &body)?;
        let latency = started.elapsed();
        let text = reply
            .get("content")
            .and_then(Value::as_str)
            .ok_or_else(|| LlmError::Protocol("response has no string `content`".into()))?
            .to_string();
        let token_count = reply
            .get("tokens_predicted")
            .and_then(Value::as_u64)
            .map(|n| n as usize)
            .unwrap_or_else(|| text.split_whitespace().count());
        Ok(GenerationResult {
            text,
            token_count,
            backend_id: self.id.clone(),
            latency,
        })
    }

    fn tokenize(&self, text: &str) -> Result<Vec<u32>, LlmError> {
        let reply = self.post(&self.config.tokenize_path, &json!({ "content": text }))?;
        reply
            .get("tokens")
            .and_then(Value::as_array)
            .and_then(|ts| ts.iter().map(|t| t.as_u64().map(|n| n as u32)).collect())
            .ok_or_else(|| LlmError::Protocol("response has no integer `tokens`".into()))
    }
}
