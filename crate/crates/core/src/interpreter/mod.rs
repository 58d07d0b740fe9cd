//! Critique-to-preference interpretation.
//!
//! The critique is appended to a few-shot prompt of `critique=>preference`
//! lines and terminated with `=>I prefer`, so the completion provider
//! continues with the preferred feature. The completion is cut at its first
//! sentence end and re-prefixed: `" a more romantic place.\n..."` becomes
//! `"I prefer a more romantic place."`.

mod exemplar;
mod provider;

pub use exemplar::{build_prompt, default_exemplars, load_exemplars, Category, Exemplar, PREFERENCE_PREFIX};
pub use provider::{
    CassetteEntry, CassetteProvider, CompletionProvider, CompletionRule, EchoProvider, HttpCompletionProvider,
    ProviderError, RecordingProvider, RuleTableProvider,
};

use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Token overlap with the critique at or above which a completion is
/// flagged as a near-copy.
pub const NEAR_COPY_OVERLAP: f64 = 0.8;

#[derive(Debug, thiserror::Error)]
pub enum InterpretError {
    #[error("critique is empty")]
    EmptyCritique,
    #[error("at least one exemplar is required")]
    NoExemplars,
    #[error("invalid exemplar: {0}")]
    BadExemplar(String),
    #[error("invalid generation config: {0}")]
    BadConfig(String),
    #[error("completion provider failed: {0}")]
    Provider(#[from] ProviderError),
    #[error("provider returned no completions")]
    NoCompletions,
    #[error("every completion is empty after cleaning: {0:?}")]
    Degenerate(Vec<String>),
}

impl InterpretError {
    pub fn retriable(&self) -> bool {
        matches!(self, InterpretError::Provider(p) if p.retriable())
    }
}

/// Sampling parameters sent with each prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    /// Completions sampled per critique (1..=3).
    pub n_trials: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            temperature: 0.7,
            top_p: 1.0,
            max_tokens: 20,
            n_trials: 1,
        }
    }
}

impl GenerationConfig {
    pub const MAX_TRIALS: usize = 3;

    pub fn validate(&self) -> Result<(), InterpretError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(InterpretError::BadConfig(format!("temperature {}", self.temperature)));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(InterpretError::BadConfig(format!("top_p {}", self.top_p)));
        }
        if self.max_tokens == 0 {
            return Err(InterpretError::BadConfig("max_tokens must be positive".into()));
        }
        if !(1..=Self::MAX_TRIALS).contains(&self.n_trials) {
            return Err(InterpretError::BadConfig(format!("n_trials {} not in 1..=3", self.n_trials)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceResult {
    pub critique: String,
    pub preference: String,
    pub raw_completions: Vec<String>,
    pub selected_index: usize,
    /// The selected completion mostly repeats the critique's words.
    pub near_copy: bool,
}

/// Reduces a raw completion to the preferred feature: first line only, cut
/// after the first sentence terminator, a repeated "I prefer" dropped, and
/// trailing punctuation removed. Returns `None` if nothing remains.
pub fn clean_completion(raw: &str) -> Option<String> {
    let text = raw.trim_start();
    let text = text.split('\n').next().unwrap_or("");
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut cut = text.len();
    for (i, &(pos, c)) in chars.iter().enumerate() {
        if matches!(c, '.' | '!' | '?') {
            let next = chars.get(i + 1).map(|&(_, n)| n);
            if next.is_none_or(char::is_whitespace) {
                cut = pos;
                break;
            }
        }
    }
    let mut body = text[..cut].trim();
    if let Some(rest) = strip_prefix_ci(body, PREFERENCE_PREFIX) {
        body = rest.trim_start();
    }
    let body = body.trim_end_matches(|c: char| c.is_whitespace() || matches!(c, '.' | '!' | '?' | ',' | ';' | ':'));
    (!body.is_empty()).then(|| body.to_string())
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    let head = s.get(..prefix.len())?;
    if !head.eq_ignore_ascii_case(prefix) {
        return None;
    }
    let rest = &s[prefix.len()..];
    (rest.is_empty() || rest.starts_with(char::is_whitespace)).then_some(rest)
}

/// `"I prefer " + body + "."`
pub fn preference_from_completion(raw: &str) -> Option<String> {
    clean_completion(raw).map(|body| format!("{PREFERENCE_PREFIX} {body}."))
}

/// Picks one completion out of several trials.
pub trait SelectionPolicy: Send + Sync {
    fn select(&self, critique: &str, completions: &[String]) -> Result<usize, InterpretError>;
}

fn usable(completions: &[String]) -> Result<Vec<(usize, String)>, InterpretError> {
    if completions.is_empty() {
        return Err(InterpretError::NoCompletions);
    }
    let cleaned: Vec<(usize, String)> = completions
        .iter()
        .enumerate()
        .filter_map(|(i, c)| clean_completion(c).map(|b| (i, b)))
        .collect();
    if cleaned.is_empty() {
        return Err(InterpretError::Degenerate(completions.to_vec()));
    }
    Ok(cleaned)
}

/// First non-empty completion (index 0 whenever it is usable).
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstGeneration;

impl SelectionPolicy for FirstGeneration {
    fn select(&self, _critique: &str, completions: &[String]) -> Result<usize, InterpretError> {
        Ok(usable(completions)?[0].0)
    }
}

/// Shortest cleaned completion that is not a near-copy of the critique;
/// ties go to the earlier trial. Falls back to the shortest overall when
/// every completion is a near-copy.
#[derive(Debug, Clone, Copy, Default)]
pub struct LengthPenalty;

impl SelectionPolicy for LengthPenalty {
    fn select(&self, critique: &str, completions: &[String]) -> Result<usize, InterpretError> {
        let cleaned = usable(completions)?;
        let shortest = |it: &mut dyn Iterator<Item = &(usize, String)>| {
            it.min_by_key(|(i, b)| (b.chars().count(), *i)).map(|(i, _)| *i)
        };
        let pick = shortest(&mut cleaned.iter().filter(|(_, b)| !is_near_copy(b, critique)))
            .or_else(|| shortest(&mut cleaned.iter()))
            .expect("non-empty");
        Ok(pick)
    }
}

/// Default selection over sampled completions.
pub fn select_generation(completions: &[String]) -> Result<usize, InterpretError> {
    FirstGeneration.select("", completions)
}

pub fn is_near_copy(completion: &str, critique: &str) -> bool {
    crate::text::token_overlap(completion, critique) >= NEAR_COPY_OVERLAP
}

/// Prompts the provider once for `config.n_trials` completions and keeps the
/// one chosen by `policy`.
pub fn transform(
    critique: &str,
    exemplars: &[Exemplar],
    config: &GenerationConfig,
    provider: &dyn CompletionProvider,
    policy: &dyn SelectionPolicy,
) -> Result<PreferenceResult, InterpretError> {
    config.validate()?;
    let prompt = build_prompt(critique, exemplars)?;
    let raw = provider.complete(&prompt, config)?;
    let selected_index = policy.select(critique, &raw)?;
    let body = clean_completion(&raw[selected_index]).ok_or_else(|| InterpretError::Degenerate(raw.clone()))?;
    Ok(PreferenceResult {
        critique: critique.trim().to_string(),
        near_copy: is_near_copy(&body, critique),
        preference: format!("{PREFERENCE_PREFIX} {body}."),
        raw_completions: raw,
        selected_index,
    })
}

/// Joins statements with single spaces, each ending in exactly one terminal
/// mark; a part without one gets a period.
pub fn compound_statement<S: AsRef<str>>(parts: &[S]) -> String {
    parts
        .iter()
        .map(|p| terminate(p.as_ref()))
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn terminate(part: &str) -> String {
    let t = part.trim();
    if t.is_empty() {
        return String::new();
    }
    let body = t.trim_end_matches('.');
    if body.len() < t.len() {
        return format!("{body}.");
    }
    if t.ends_with(['!', '?']) {
        return t.to_string();
    }
    format!("{t}.")
}

/// Bundles exemplars, sampling config, provider and selection policy.
#[derive(Clone)]
pub struct Interpreter {
    pub exemplars: Vec<Exemplar>,
    pub config: GenerationConfig,
    provider: Arc<dyn CompletionProvider>,
    policy: Arc<dyn SelectionPolicy>,
}

impl Interpreter {
    pub fn new(provider: Arc<dyn CompletionProvider>) -> Self {
        Interpreter {
            exemplars: default_exemplars(),
            config: GenerationConfig::default(),
            provider,
            policy: Arc::new(FirstGeneration),
        }
    }

    pub fn with_exemplars(mut self, exemplars: Vec<Exemplar>) -> Self {
        self.exemplars = exemplars;
        self
    }

    pub fn with_config(mut self, config: GenerationConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_policy(mut self, policy: Arc<dyn SelectionPolicy>) -> Self {
        self.policy = policy;
        self
    }

    pub fn transform(&self, critique: &str) -> Result<PreferenceResult, InterpretError> {
        transform(critique, &self.exemplars, &self.config, self.provider.as_ref(), self.policy.as_ref())
    }
}

impl std::fmt::Debug for Interpreter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Interpreter")
            .field("exemplars", &self.exemplars.len())
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}
