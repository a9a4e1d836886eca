use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;
use std::time::Duration;

use super::embed::{BagOfWordsEmbedder, Embedder, Embedding};
use super::{GenerationRequest, GenerationResult, LlmBackend, LlmError};

/// Rule consulted by [`ScriptedBackend`] for each completion request.
pub trait Responder: Send + Sync {
    fn respond(&self, request: &GenerationRequest) -> Option<String>;
}

impl<F> Responder for F
where
    F: Fn(&GenerationRequest) -> Option<String> + Send + Sync,
{
    fn respond(&self, request: &GenerationRequest) -> Option<String> {
        self(request)
    }
}

struct Canned {
    prompt_contains: String,
    text: String,
}

#[derive(Default)]
struct Vocab {
    ids: HashMap<String, u32>,
    words: Vec<String>,
}

/// Deterministic backend driven by one-shot canned replies and responder
/// rules. Tokens are whitespace-separated words; embeddings come from the
/// reference bag-of-words embedder.
pub struct ScriptedBackend {
    id: String,
    responders: Vec<Box<dyn Responder>>,
    canned: Mutex<VecDeque<Canned>>,
    latency: Duration,
    embedder: BagOfWordsEmbedder,
    vocab: Mutex<Vocab>,
    history: Mutex<Vec<String>>,
}

impl Default for ScriptedBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl ScriptedBackend {
    pub fn new() -> Self {
        ScriptedBackend {
            id: "scripted".to_string(),
            responders: Vec::new(),
            canned: Mutex::new(VecDeque::new()),
            latency: Duration::ZERO,
            embedder: BagOfWordsEmbedder::default(),
            vocab: Mutex::new(Vocab::default()),
            history: Mutex::new(Vec::new()),
        }
    }

    pub fn with_responder(mut self, responder: impl Responder + 'static) -> Self {
        self.responders.push(Box::new(responder));
        self
    }

    /// Reported per-call latency. Not slept; consumers account for it.
    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = latency;
        self
    }

    /// Queues a reply used once, by the first request whose prompt contains
    /// `prompt_contains`. Queued replies take precedence over responders.
    pub fn push_once(&self, prompt_contains: impl Into<String>, text: impl Into<String>) {
        self.canned.lock().expect("canned lock").push_back(Canned {
            prompt_contains: prompt_contains.into(),
            text: text.into(),
        });
    }

    pub fn pending_canned(&self) -> usize {
        self.canned.lock().expect("canned lock").len()
    }

    /// Prompts received so far, in order.
    pub fn history(&self) -> Vec<String> {
        self.history.lock().expect("history lock").clone()
    }

    pub fn detokenize(&self, ids: &[u32]) -> Result<String, LlmError> {
        let vocab = self.vocab.lock().expect("vocab lock");
        let words = ids
            .iter()
            .map(|&id| {
                vocab
                    .words
                    .get(id as usize)
                    .map(String::as_str)
                    .ok_or_else(|| LlmError::InvalidRequest(format!("unknown token id {id}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(words.join(" "))
    }

    fn reply(&self, request: &GenerationRequest) -> Option<String> {
        {
            let mut canned = self.canned.lock().expect("canned lock");
            if let Some(pos) = canned
                .iter()
                .position(|c| request.prompt.contains(&c.prompt_contains))
            {
                return canned.remove(pos).map(|c| c.text);
            }
        }
        self.responders.iter().find_map(|r| r.respond(request))
    }
}

impl Embedder for ScriptedBackend {
    fn dimension(&self) -> usize {
        self.embedder.dimension()
    }

    fn embed(&self, text: &str) -> Result<Embedding, LlmError> {
        self.embedder.embed(text)
    }
}

impl LlmBackend for ScriptedBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &GenerationRequest) -> Result<GenerationResult, LlmError> {
        self.history
            .lock()
            .expect("history lock")
            .push(request.prompt.clone());
        let text = self.reply(request).ok_or_else(|| {
            LlmError::BackendUnavailable("no scripted reply matches the prompt".into())
        })?;
        Ok(GenerationResult {
            token_count: text.split_whitespace().count(),
            text,
            backend_id: self.id.clone(),
            latency: self.latency,
        })
    }

    fn tokenize(&self, text: &str) -> Result<Vec<u32>, LlmError> {
        let mut vocab = self.vocab.lock().expect("vocab lock");
        Ok(text
            .split_whitespace()
            .map(|w| {
                if let Some(&id) = vocab.ids.get(w) {
                    return id;
                }
                let id = vocab.words.len() as u32;
                vocab.words.push(w.to_string());
                vocab.ids.insert(w.to_string(), id);
                id
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::generate;

    #[test]
    fn tokenizer_counts_words_and_round_trips() {
        let b = ScriptedBackend::new();
        assert_eq!(b.tokenize("greet angel").unwrap().len(), 2);
        assert!(b.tokenize("").unwrap().is_empty());
        let prompt = "you are the planning module of a robot";
        let ids = b.tokenize(prompt).unwrap();
        assert_eq!(ids.len(), prompt.split(' ').count());
        assert_eq!(b.detokenize(&ids).unwrap(), prompt);
        assert_eq!(b.tokenize("robot robot").unwrap()[0], b.tokenize("robot").unwrap()[0]);
    }

    #[test]
    fn canned_replies_are_consumed_once_before_rules() {
        let b = ScriptedBackend::new().with_responder(|_: &GenerationRequest| Some("rule".to_string()));
        b.push_once("check", "canned");
        let check = GenerationRequest::new("please check");
        let other = GenerationRequest::new("something else");
        assert_eq!(generate(&b, &other).unwrap().text, "rule");
        assert_eq!(generate(&b, &check).unwrap().text, "canned");
        assert_eq!(generate(&b, &check).unwrap().text, "rule");
        assert_eq!(b.history().len(), 3);
    }

    #[test]
    fn identical_requests_give_identical_results() {
        let b = ScriptedBackend::new()
            .with_latency(Duration::from_secs(5))
            .with_responder(|r: &GenerationRequest| Some(format!("echo {}", r.prompt.len())));
        let r = GenerationRequest::new("same");
        assert_eq!(generate(&b, &r).unwrap(), generate(&b, &r).unwrap());
        assert_eq!(generate(&b, &r).unwrap().latency, Duration::from_secs(5));
    }

    #[test]
    fn no_rule_means_unavailable() {
        let b = ScriptedBackend::new();
        assert!(matches!(
            generate(&b, &GenerationRequest::new("x")),
            Err(LlmError::BackendUnavailable(_))
        ));
    }
}
