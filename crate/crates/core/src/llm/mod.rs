//! Text-generation and embedding backends.
//!
//! [`LlmBackend`] is the seam between the planning layer and whatever serves
//! the model. Two backends ship: [`ScriptedBackend`], a deterministic
//! rule-driven stand-in used by tests and experiments, and [`HttpBackend`],
//! a client for a local llama.cpp-style completion server.
//!
//! Grammar enforcement happens in [`generate`], not in the backends: every
//! grammar-constrained completion is re-checked with the Earley recognizer
//! before it is handed back, so a server that ignores the grammar yields
//! [`LlmError::GrammarViolation`] instead of malformed text.

mod config;
mod embed;
mod grammar;
mod http;
mod scripted;

use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

pub use config::{BackendConfig, BackendKind, HttpConfig, URL_ENV_VAR};
pub use embed::{cosine, BagOfWordsEmbedder, Embedder, Embedding, REFERENCE_DIMENSION};
pub use grammar::{recognize, GrammarError, GrammarSpec};
pub use http::HttpBackend;
pub use scripted::{Responder, ScriptedBackend};

pub const DEFAULT_PLAN_MAX_TOKENS: u32 = 512;
pub const DEFAULT_CHECK_MAX_TOKENS: u32 = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("backend timed out after {0:?}")]
    Timeout(Duration),
    #[error("output rejected by grammar `{root}`: {text:?}")]
    GrammarViolation { root: String, text: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("embedding failed: {0}")]
    EmbeddingFailed(String),
    #[error("unexpected backend response: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone)]
pub struct GenerationRequest {
    pub prompt: String,
    pub grammar: Option<GrammarSpec>,
    pub max_tokens: u32,
    pub temperature: f64,
    pub stop_sequences: Vec<String>,
    pub seed: Option<u64>,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        GenerationRequest {
            prompt: prompt.into(),
            grammar: None,
            max_tokens: DEFAULT_PLAN_MAX_TOKENS,
            temperature: 0.0,
            stop_sequences: Vec::new(),
            seed: None,
        }
    }

    pub fn with_grammar(mut self, grammar: GrammarSpec) -> Self {
        self.grammar = Some(grammar);
        self
    }

    pub fn with_max_tokens(mut self, n: u32) -> Self {
        self.max_tokens = n;
        self
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.prompt.is_empty() {
            return Err(LlmError::InvalidRequest("empty prompt".into()));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be at least 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(LlmError::InvalidRequest("temperature must be a non-negative number".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationResult {
    pub text: String,
    pub token_count: usize,
    pub backend_id: String,
    /// Time the backend spent on the call. Measured for remote backends,
    /// configured for the scripted one; never slept.
    #[serde(with = "secs")]
    pub latency: Duration,
}

mod secs {
    use serde::Serializer;
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }
}

/// A text-generation service. Implementations return raw completions;
/// callers should go through [`generate`], which enforces the grammar.
pub trait LlmBackend: Embedder + Send + Sync {
    fn id(&self) -> &str;

    fn complete(&self, request: &GenerationRequest) -> Result<GenerationResult, LlmError>;

    fn tokenize(&self, text: &str) -> Result<Vec<u32>, LlmError>;
}

/// Runs `request` on `backend` and validates grammar-constrained output.
pub fn generate(
    backend: &dyn LlmBackend,
    request: &GenerationRequest,
) -> Result<GenerationResult, LlmError> {
    request.validate()?;
    let result = backend.complete(request)?;
    if let Some(grammar) = &request.grammar {
        if !grammar.recognize(&result.text) {
            return Err(LlmError::GrammarViolation {
                root: grammar.root().to_string(),
                text: result.text,
            });
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_validation() {
        assert!(GenerationRequest::new("").validate().is_err());
        assert!(GenerationRequest::new("x").with_max_tokens(0).validate().is_err());
        let mut r = GenerationRequest::new("x");
        r.temperature = -1.0;
        assert!(r.validate().is_err());
        assert!(GenerationRequest::new("x").validate().is_ok());
    }

    #[test]
    fn grammar_violation_is_an_error() {
        let backend = ScriptedBackend::new().with_responder(|_: &GenerationRequest| {
            Some("Sure! Here is the plan: navigate then greet.".to_string())
        });
        let req = GenerationRequest::new("plan").with_grammar(GrammarSpec::json());
        assert!(matches!(
            generate(&backend, &req),
            Err(LlmError::GrammarViolation { .. })
        ));
        let ok = ScriptedBackend::new().with_responder(|_: &GenerationRequest| Some(r#"{"plan":[]}"#.into()));
        let out = generate(&ok, &req).unwrap();
        assert!(serde_json::from_str::<serde_json::Value>(&out.text).is_ok());
    }
}
