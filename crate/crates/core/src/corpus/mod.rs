//! Review ingestion and the argument-candidate set.
//!
//! A [`CorpusStore`] is assembled once by [`ingest_reviews`] and is immutable
//! afterwards, so it can be shared across threads freely.

mod positivity;
mod segment;

pub use positivity::{ConstantScorer, HttpPositivityScorer, LexiconScorer, PositivityScorer, ScoreError};
pub use segment::segment_sentences;

use crate::exec::Execution;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Threshold on positivity used to admit a sentence into the candidate set.
pub const DEFAULT_POSITIVITY_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Restaurant {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub restaurant_id: String,
    pub rating: u8,
    pub text: String,
}

/// A positive review sentence eligible as a persuasive argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentCandidate {
    /// `"{review_id}#{sentence_index}"`.
    pub id: String,
    pub restaurant_id: String,
    pub sentence: String,
    pub positivity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
}

impl ArgumentCandidate {
    pub fn candidate_id(review_id: &str, sentence_index: usize) -> String {
        format!("{review_id}#{sentence_index}")
    }

    /// Splits the id back into `(review_id, sentence_index)`.
    pub fn provenance(&self) -> Option<(&str, usize)> {
        let (review, idx) = self.id.rsplit_once('#')?;
        Some((review, idx.parse().ok()?))
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum CorpusError {
    #[error("review {review_id} references unknown restaurant {restaurant_id}")]
    DanglingRestaurant { review_id: String, restaurant_id: String },
    #[error("review {review_id} has rating {rating}, expected 1..=5")]
    BadRating { review_id: String, rating: u8 },
    #[error("restaurant {0} has an empty name")]
    EmptyName(String),
    #[error("restaurant id {0} declared twice")]
    DuplicateRestaurant(String),
    #[error("positivity threshold {0} outside [0, 1]")]
    BadThreshold(f64),
    #[error("positivity scorer failed: {0}")]
    Scorer(#[from] ScoreError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestConfig {
    /// Reviews rated below this are dropped at ingestion.
    pub min_rating: u8,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { min_rating: 4 }
    }
}

/// One segmented sentence with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceRef<'a> {
    pub restaurant_id: &'a str,
    pub review_id: &'a str,
    pub index: usize,
    pub text: String,
}

#[derive(Debug, Clone, Default)]
pub struct CorpusStore {
    restaurants: BTreeMap<String, Restaurant>,
    /// restaurant id -> review id -> review
    reviews: BTreeMap<String, BTreeMap<String, Review>>,
    filtered_by_rating: usize,
}

/// Builds a store. Duplicate review ids keep the last occurrence.
pub fn ingest_reviews(
    records: impl IntoIterator<Item = Review>,
    restaurants: impl IntoIterator<Item = Restaurant>,
    config: IngestConfig,
) -> Result<CorpusStore, CorpusError> {
    let mut store = CorpusStore::default();
    for r in restaurants {
        if r.name.trim().is_empty() {
            return Err(CorpusError::EmptyName(r.id));
        }
        if store.restaurants.contains_key(&r.id) {
            return Err(CorpusError::DuplicateRestaurant(r.id));
        }
        store.restaurants.insert(r.id.clone(), r);
    }
    // review id -> owning restaurant, for last-write-wins across restaurants
    let mut owner: BTreeMap<String, String> = BTreeMap::new();
    for review in records {
        if !(1..=5).contains(&review.rating) {
            return Err(CorpusError::BadRating {
                review_id: review.id,
                rating: review.rating,
            });
        }
        if !store.restaurants.contains_key(&review.restaurant_id) {
            return Err(CorpusError::DanglingRestaurant {
                review_id: review.id,
                restaurant_id: review.restaurant_id,
            });
        }
        if let Some(prev) = owner.remove(&review.id) {
            if let Some(m) = store.reviews.get_mut(&prev) {
                m.remove(&review.id);
            }
        }
        if review.rating < config.min_rating {
            store.filtered_by_rating += 1;
            continue;
        }
        owner.insert(review.id.clone(), review.restaurant_id.clone());
        store
            .reviews
            .entry(review.restaurant_id.clone())
            .or_default()
            .insert(review.id.clone(), review);
    }
    Ok(store)
}

impl CorpusStore {
    pub fn review_count(&self) -> usize {
        self.reviews.values().map(BTreeMap::len).sum()
    }

    pub fn filtered_by_rating(&self) -> usize {
        self.filtered_by_rating
    }

    pub fn restaurants(&self) -> impl Iterator<Item = &Restaurant> {
        self.restaurants.values()
    }

    pub fn restaurant(&self, id: &str) -> Option<&Restaurant> {
        self.restaurants.get(id)
    }

    /// Reviews ordered by (restaurant id, review id).
    pub fn reviews(&self) -> impl Iterator<Item = &Review> {
        self.reviews.values().flat_map(BTreeMap::values)
    }

    /// Every sentence, ordered by (restaurant id, review id, sentence index).
    pub fn sentences(&self) -> Vec<SentenceRef<'_>> {
        self.reviews()
            .flat_map(|review| {
                segment_sentences(&review.text)
                    .into_iter()
                    .enumerate()
                    .map(move |(index, text)| SentenceRef {
                        restaurant_id: &review.restaurant_id,
                        review_id: &review.id,
                        index,
                        text,
                    })
            })
            .collect()
    }
}

/// Keeps exactly the sentences whose positivity is at least `threshold`.
pub fn build_candidates(
    store: &CorpusStore,
    scorer: &dyn PositivityScorer,
    threshold: f64,
    exec: Execution,
) -> Result<Vec<ArgumentCandidate>, CorpusError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CorpusError::BadThreshold(threshold));
    }
    let sentences = store.sentences();
    let scores = if scorer.prefers_batches() {
        let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
        scorer.score_batch(&texts)?
    } else {
        exec.try_map(&sentences, |s| scorer.score(&s.text))?
    };
    Ok(sentences
        .into_iter()
        .zip(scores)
        .filter(|(_, score)| *score >= threshold)
        .map(|(s, positivity)| ArgumentCandidate {
            id: ArgumentCandidate::candidate_id(s.review_id, s.index),
            restaurant_id: s.restaurant_id.to_string(),
            sentence: s.text,
            positivity,
            embedding: None,
        })
        .collect())
}
