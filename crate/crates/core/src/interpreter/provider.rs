//! Text-completion providers.

use super::exemplar::critique_of_prompt;
use super::GenerationConfig;
use crate::http::{HttpFailure, JsonClient};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ProviderError {
    #[error(transparent)]
    Http(#[from] HttpFailure),
    #[error("no cassette entry for prompt ending in {0:?}")]
    CassetteMiss(String),
    #[error("cassette has {available} completions for the prompt, {requested} requested")]
    CassetteShort { available: usize, requested: usize },
    #[error("no rule matches critique {0:?}")]
    NoRule(String),
    #[error("provider returned {got} completions, {expected} requested")]
    Arity { expected: usize, got: usize },
    #[error("{0}")]
    Io(String),
}

impl ProviderError {
    pub fn retriable(&self) -> bool {
        match self {
            ProviderError::Http(h) => h.retriable(),
            _ => false,
        }
    }

    pub fn status(&self) -> Option<u16> {
        match self {
            ProviderError::Http(h) => h.status,
            _ => None,
        }
    }
}

/// Sends a prompt with sampling parameters and returns `config.n_trials`
/// completions, in sampling order.
pub trait CompletionProvider: Send + Sync {
    fn complete(&self, prompt: &str, config: &GenerationConfig) -> Result<Vec<String>, ProviderError>;
}

impl<P: CompletionProvider + ?Sized> CompletionProvider for std::sync::Arc<P> {
    fn complete(&self, prompt: &str, config: &GenerationConfig) -> Result<Vec<String>, ProviderError> {
        (**self).complete(prompt, config)
    }
}

/// Returns the same text for every trial.
#[derive(Debug, Clone)]
pub struct EchoProvider(pub String);

impl CompletionProvider for EchoProvider {
    fn complete(&self, _prompt: &str, config: &GenerationConfig) -> Result<Vec<String>, ProviderError> {
        Ok(vec![self.0.clone(); config.n_trials])
    }
}

/// A line of a rule table: case-insensitive substring of the critique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRule {
    #[serde(rename = "match")]
    pub pattern: String,
    pub completion: String,
}

/// Deterministic lookup of the critique (last prompt line) against an
/// ordered rule list; the first matching rule answers every trial.
#[derive(Debug, Clone)]
pub struct RuleTableProvider {
    rules: Vec<CompletionRule>,
}

impl RuleTableProvider {
    pub fn new(rules: Vec<CompletionRule>) -> Self {
        RuleTableProvider { rules }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        crate::jsonl::read(path)
            .map(Self::new)
            .map_err(|e| ProviderError::Io(e.to_string()))
    }

    pub fn lookup(&self, critique: &str) -> Option<&str> {
        let lower = critique.to_lowercase();
        self.rules
            .iter()
            .find(|r| lower.contains(&r.pattern.to_lowercase()))
            .map(|r| r.completion.as_str())
    }
}

impl CompletionProvider for RuleTableProvider {
    fn complete(&self, prompt: &str, config: &GenerationConfig) -> Result<Vec<String>, ProviderError> {
        let critique = critique_of_prompt(prompt);
        let hit = self
            .lookup(critique)
            .ok_or_else(|| ProviderError::NoRule(critique.to_string()))?;
        Ok(vec![hit.to_string(); config.n_trials])
    }
}

/// One recorded exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub prompt: String,
    pub completions: Vec<String>,
}

/// Replays recorded completions keyed by the exact prompt.
#[derive(Debug, Clone, Default)]
pub struct CassetteProvider {
    entries: HashMap<String, Vec<String>>,
}

impl CassetteProvider {
    pub fn from_entries(entries: impl IntoIterator<Item = CassetteEntry>) -> Self {
        CassetteProvider {
            entries: entries.into_iter().map(|e| (e.prompt, e.completions)).collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let entries: Vec<CassetteEntry> = crate::jsonl::read(path).map_err(|e| ProviderError::Io(e.to_string()))?;
        Ok(Self::from_entries(entries))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl CompletionProvider for CassetteProvider {
    fn complete(&self, prompt: &str, config: &GenerationConfig) -> Result<Vec<String>, ProviderError> {
        let recorded = self
            .entries
            .get(prompt)
            .ok_or_else(|| ProviderError::CassetteMiss(critique_of_prompt(prompt).to_string()))?;
        if recorded.len() < config.n_trials {
            return Err(ProviderError::CassetteShort {
                available: recorded.len(),
                requested: config.n_trials,
            });
        }
        Ok(recorded[..config.n_trials].to_vec())
    }
}

/// Wraps a provider and appends every successful exchange to a cassette file.
pub struct RecordingProvider<P> {
    inner: P,
    path: PathBuf,
    lock: Mutex<()>,
}

impl<P: CompletionProvider> RecordingProvider<P> {
    pub fn new(inner: P, path: impl Into<PathBuf>) -> Self {
        RecordingProvider {
            inner,
            path: path.into(),
            lock: Mutex::new(()),
        }
    }
}

impl<P: CompletionProvider> CompletionProvider for RecordingProvider<P> {
    fn complete(&self, prompt: &str, config: &GenerationConfig) -> Result<Vec<String>, ProviderError> {
        let completions = self.inner.complete(prompt, config)?;
        let entry = CassetteEntry {
            prompt: prompt.to_string(),
            completions: completions.clone(),
        };
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        crate::jsonl::append(&self.path, &entry).map_err(|e| ProviderError::Io(e.to_string()))?;
        Ok(completions)
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
    n: usize,
    frequency_penalty: f64,
    presence_penalty: f64,
}

#[derive(Deserialize)]
struct CompletionChoice {
    text: String,
    #[serde(default)]
    index: usize,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<CompletionChoice>,
}

/// Client for an OpenAI-compatible `/v1/completions` endpoint. Penalties are
/// always sent as zero.
pub struct HttpCompletionProvider {
    client: JsonClient,
    model: String,
}

impl HttpCompletionProvider {
    /// `endpoint` is the full completions URL.
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        HttpCompletionProvider {
            client: JsonClient::new(endpoint, api_key, Duration::from_secs(60)),
            model: model.into(),
        }
    }

    /// Reads the bearer token from the environment variable `key_var`, if set.
    pub fn from_env(endpoint: impl Into<String>, model: impl Into<String>, key_var: &str) -> Self {
        Self::new(endpoint, model, std::env::var(key_var).ok())
    }

    pub fn endpoint(&self) -> &str {
        self.client.endpoint()
    }
}

impl CompletionProvider for HttpCompletionProvider {
    fn complete(&self, prompt: &str, config: &GenerationConfig) -> Result<Vec<String>, ProviderError> {
        let req = CompletionRequest {
            model: &self.model,
            prompt,
            temperature: config.temperature,
            top_p: config.top_p,
            max_tokens: config.max_tokens,
            n: config.n_trials,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
        };
        let mut resp: CompletionResponse = self.client.post(&req)?;
        if resp.choices.len() != config.n_trials {
            return Err(ProviderError::Arity {
                expected: config.n_trials,
                got: resp.choices.len(),
            });
        }
        resp.choices.sort_by_key(|c| c.index);
        Ok(resp.choices.into_iter().map(|c| c.text).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::testserver;

    #[test]
    fn rule_table_first_match_wins() {
        let p = RuleTableProvider::new(vec![
            CompletionRule {
                pattern: "date".into(),
                completion: " a more romantic place.".into(),
            },
            CompletionRule {
                pattern: "good".into(),
                completion: " something else.".into(),
            },
        ]);
        let out = p
            .complete("a=>I prefer b.\nNot GOOD for a Date=>I prefer", &GenerationConfig::default())
            .unwrap();
        assert_eq!(out, [" a more romantic place."]);
        assert!(matches!(
            p.complete("x=>I prefer", &GenerationConfig::default()),
            Err(ProviderError::NoRule(_))
        ));
    }

    #[test]
    fn cassette_replays_and_reports_misses() {
        let p = CassetteProvider::from_entries([CassetteEntry {
            prompt: "p".into(),
            completions: vec!["a".into(), "b".into()],
        }]);
        let mut cfg = GenerationConfig::default();
        assert_eq!(p.complete("p", &cfg).unwrap(), ["a"]);
        cfg.n_trials = 3;
        assert!(matches!(p.complete("p", &cfg), Err(ProviderError::CassetteShort { .. })));
        assert!(matches!(p.complete("q", &cfg), Err(ProviderError::CassetteMiss(_))));
    }

    #[test]
    fn recording_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let rec = RecordingProvider::new(EchoProvider(" x.".into()), &path);
        let cfg = GenerationConfig::default();
        rec.complete("prompt one", &cfg).unwrap();
        let replay = CassetteProvider::load(&path).unwrap();
        assert_eq!(replay.complete("prompt one", &cfg).unwrap(), [" x."]);
    }

    #[test]
    fn http_provider_sends_sampling_params() {
        let (url, bodies) = testserver::serve(vec![(
            200,
            r#"{"choices":[{"text":" b","index":1},{"text":" a","index":0}]}"#.into(),
        )]);
        let p = HttpCompletionProvider::new(url, "davinci", Some("k".into()));
        let cfg = GenerationConfig {
            n_trials: 2,
            ..GenerationConfig::default()
        };
        assert_eq!(p.complete("hi=>I prefer", &cfg).unwrap(), [" a", " b"]);
        let sent: serde_json::Value = serde_json::from_str(&bodies.recv().unwrap()).unwrap();
        assert_eq!(sent["temperature"], 0.7);
        assert_eq!(sent["top_p"], 1.0);
        assert_eq!(sent["max_tokens"], 20);
        assert_eq!(sent["n"], 2);
        assert_eq!(sent["presence_penalty"], 0.0);
        assert_eq!(sent["model"], "davinci");
    }

    #[test]
    fn http_provider_failure_is_retriable() {
        let (url, _) = testserver::serve(vec![(503, r#"{"error":"busy"}"#.into())]);
        let err = HttpCompletionProvider::new(url, "m", None)
            .complete("p", &GenerationConfig::default())
            .unwrap_err();
        assert!(err.retriable());
        assert_eq!(err.status(), Some(503));
    }
}
