//! Sentence positivity scorers.

use crate::http::{HttpFailure, JsonClient};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::time::Duration;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ScoreError {
    #[error(transparent)]
    Http(#[from] HttpFailure),
    #[error("scorer returned {got} scores for {expected} sentences")]
    Arity { expected: usize, got: usize },
    #[error("scorer returned out-of-range score {0}")]
    OutOfRange(f64),
}

/// Maps a sentence to a positivity ("joy") score in `[0, 1]`.
pub trait PositivityScorer: Send + Sync {
    fn score(&self, sentence: &str) -> Result<f64, ScoreError>;

    fn score_batch(&self, sentences: &[&str]) -> Result<Vec<f64>, ScoreError> {
        sentences.iter().map(|s| self.score(s)).collect()
    }

    /// Whether [`PositivityScorer::score_batch`] should be preferred to
    /// per-sentence calls (network scorers).
    fn prefers_batches(&self) -> bool {
        false
    }
}

const DEFAULT_LEXICON: &str = include_str!("../../data/positivity_lexicon.tsv");

const NEGATORS: &[&str] = &[
    "not", "no", "never", "nothing", "without", "hardly", "nor", "dont", "doesnt", "didnt", "isnt", "wasnt",
    "arent", "werent", "cant", "cannot", "wont", "wouldnt", "couldnt", "shouldnt",
];

/// How many preceding tokens a negator reaches.
const NEGATION_WINDOW: usize = 3;

/// Word-list baseline: mean valence of lexicon hits, with a hit's sign
/// flipped when a negator appears within the preceding three tokens.
/// The mean is clamped to `[0, 1]`; a sentence without hits scores 0.
#[derive(Debug, Clone)]
pub struct LexiconScorer {
    valence: HashMap<String, f64>,
}

impl Default for LexiconScorer {
    fn default() -> Self {
        Self::from_tsv(DEFAULT_LEXICON).expect("bundled lexicon parses")
    }
}

impl LexiconScorer {
    /// Parses `word<TAB>valence` lines; `#` starts a comment line.
    pub fn from_tsv(text: &str) -> Result<Self, String> {
        let mut valence = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, v) = line
                .split_once('\t')
                .ok_or_else(|| format!("line {}: expected word<TAB>valence", n + 1))?;
            let v: f64 = v.trim().parse().map_err(|e| format!("line {}: {e}", n + 1))?;
            if !(-1.0..=1.0).contains(&v) {
                return Err(format!("line {}: valence {v} outside [-1, 1]", n + 1));
            }
            valence.insert(word.trim().to_lowercase(), v);
        }
        Ok(LexiconScorer { valence })
    }

    pub fn score_text(&self, sentence: &str) -> f64 {
        let tokens = crate::text::words(sentence);
        let mut sum = 0.0;
        let mut hits = 0usize;
        for (i, tok) in tokens.iter().enumerate() {
            let Some(&v) = self.valence.get(tok) else { continue };
            let lo = i.saturating_sub(NEGATION_WINDOW);
            let negated = tokens[lo..i].iter().any(|t| NEGATORS.contains(&t.as_str()));
            sum += if negated { -v } else { v };
            hits += 1;
        }
        if hits == 0 {
            return 0.0;
        }
        (sum / hits as f64).clamp(0.0, 1.0)
    }
}

impl PositivityScorer for LexiconScorer {
    fn score(&self, sentence: &str) -> Result<f64, ScoreError> {
        Ok(self.score_text(sentence))
    }
}

/// Scores every sentence with the same value.
#[derive(Debug, Clone, Copy)]
pub struct ConstantScorer(pub f64);

impl PositivityScorer for ConstantScorer {
    fn score(&self, _sentence: &str) -> Result<f64, ScoreError> {
        Ok(self.0.clamp(0.0, 1.0))
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    sentences: &'a [&'a str],
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

/// External emotion/positivity service.
///
/// Protocol: `POST {"sentences": [..]}` -> `{"scores": [..]}`, one score in
/// `[0, 1]` per sentence in request order.
pub struct HttpPositivityScorer {
    client: JsonClient,
}

impl HttpPositivityScorer {
    pub fn new(endpoint: impl Into<String>, bearer: Option<String>) -> Self {
        HttpPositivityScorer {
            client: JsonClient::new(endpoint, bearer, Duration::from_secs(60)),
        }
    }
}

impl PositivityScorer for HttpPositivityScorer {
    fn score(&self, sentence: &str) -> Result<f64, ScoreError> {
        Ok(self.score_batch(&[sentence])?[0])
    }

    fn score_batch(&self, sentences: &[&str]) -> Result<Vec<f64>, ScoreError> {
        let resp: ScoreResponse = self.client.post(&ScoreRequest { sentences })?;
        if resp.scores.len() != sentences.len() {
            return Err(ScoreError::Arity {
                expected: sentences.len(),
                got: resp.scores.len(),
            });
        }
        if let Some(&bad) = resp.scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(ScoreError::OutOfRange(bad));
        }
        Ok(resp.scores)
    }

    fn prefers_batches(&self) -> bool {
        true
    }
}
