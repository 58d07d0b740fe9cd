use super::{dot, normalize, EmbeddingProvider, Query, RetrievalError, ScoredArgument};
use crate::corpus::{ArgumentCandidate, Restaurant};
use crate::exec::Execution;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

/// Immutable exact-scan index over the argument-candidate set.
#[derive(Debug, Clone)]
pub struct CandidateIndex {
    candidates: Vec<ArgumentCandidate>,
    /// Unit-normalized, parallel to `candidates`.
    vectors: Vec<Vec<f64>>,
    positions: HashMap<String, usize>,
    restaurants: BTreeMap<String, Restaurant>,
    fingerprint: String,
    dim: usize,
    exec: Execution,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchOptions {
    /// Keep only the best-scoring argument per restaurant.
    pub dedup_restaurants: bool,
    /// Restaurants never returned.
    pub exclude_restaurants: BTreeSet<String>,
}

/// On-disk form: candidates with their raw embeddings, the restaurants they
/// belong to, and the fingerprint of the provider that produced the vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSnapshot {
    pub fingerprint: String,
    pub dim: usize,
    pub restaurants: Vec<Restaurant>,
    pub candidates: Vec<ArgumentCandidate>,
}

impl CandidateIndex {
    /// Embeds every candidate sentence with `embedder`.
    pub fn build(
        mut candidates: Vec<ArgumentCandidate>,
        restaurants: impl IntoIterator<Item = Restaurant>,
        embedder: &dyn EmbeddingProvider,
        exec: Execution,
    ) -> Result<Self, RetrievalError> {
        let vectors = if embedder.prefers_batches() {
            let texts: Vec<&str> = candidates.iter().map(|c| c.sentence.as_str()).collect();
            embedder.embed_batch(&texts)?
        } else {
            exec.try_map(&candidates, |c| embedder.embed(&c.sentence))?
        };
        for (c, v) in candidates.iter_mut().zip(vectors) {
            c.embedding = Some(v.into_inner());
        }
        Self::from_embedded(candidates, restaurants, embedder.fingerprint(), exec)
    }

    /// Uses the embeddings already attached to each candidate.
    pub fn from_embedded(
        candidates: Vec<ArgumentCandidate>,
        restaurants: impl IntoIterator<Item = Restaurant>,
        fingerprint: impl Into<String>,
        exec: Execution,
    ) -> Result<Self, RetrievalError> {
        let restaurants: BTreeMap<String, Restaurant> = restaurants.into_iter().map(|r| (r.id.clone(), r)).collect();
        let mut dim = None;
        let mut vectors = Vec::with_capacity(candidates.len());
        let mut positions = HashMap::with_capacity(candidates.len());
        for (i, c) in candidates.iter().enumerate() {
            let raw = c
                .embedding
                .as_deref()
                .ok_or_else(|| RetrievalError::MissingEmbedding(c.id.clone()))?;
            let d = *dim.get_or_insert(raw.len());
            if raw.len() != d {
                return Err(RetrievalError::DimensionMismatch(d, raw.len()));
            }
            if raw.iter().any(|x| !x.is_finite()) {
                return Err(super::EmbedError::NonFinite.into());
            }
            if !restaurants.contains_key(&c.restaurant_id) {
                return Err(RetrievalError::UnknownRestaurant {
                    candidate: c.id.clone(),
                    restaurant: c.restaurant_id.clone(),
                });
            }
            positions.insert(c.id.clone(), i);
            vectors.push(normalize(raw)?);
        }
        Ok(CandidateIndex {
            candidates,
            vectors,
            positions,
            restaurants,
            fingerprint: fingerprint.into(),
            dim: dim.unwrap_or(0),
            exec,
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn candidates(&self) -> &[ArgumentCandidate] {
        &self.candidates
    }

    pub fn candidate(&self, id: &str) -> Option<&ArgumentCandidate> {
        self.positions.get(id).map(|&i| &self.candidates[i])
    }

    /// Unit-normalized vector of a candidate.
    pub fn unit_vector(&self, id: &str) -> Option<&[f64]> {
        self.positions.get(id).map(|&i| self.vectors[i].as_slice())
    }

    pub fn restaurants(&self) -> impl Iterator<Item = &Restaurant> {
        self.restaurants.values()
    }

    pub fn restaurant(&self, id: &str) -> Option<&Restaurant> {
        self.restaurants.get(id)
    }

    fn check_provider(&self, embedder: &dyn EmbeddingProvider) -> Result<(), RetrievalError> {
        let provider = embedder.fingerprint();
        if provider != self.fingerprint {
            return Err(RetrievalError::FingerprintMismatch {
                index: self.fingerprint.clone(),
                provider,
            });
        }
        Ok(())
    }

    /// Embeds and unit-normalizes a statement in this index's vector space.
    pub fn embed_statement(&self, statement: &str, embedder: &dyn EmbeddingProvider) -> Result<Vec<f64>, RetrievalError> {
        self.check_provider(embedder)?;
        let v = embedder.embed(statement)?;
        if v.dim() != self.dim {
            return Err(RetrievalError::DimensionMismatch(self.dim, v.dim()));
        }
        normalize(v.as_slice())
    }

    /// Cosine score of every candidate against a unit query vector, in index order.
    pub fn score_all(&self, unit_query: &[f64]) -> Vec<f64> {
        // `+ 0.0` folds -0.0 into 0.0 so orthogonal ties fall through to the id
        self.exec.map(&self.vectors, |v| dot(v, unit_query).clamp(-1.0, 1.0) + 0.0)
    }

    /// Top-`k` candidates by cosine similarity to `query.statement`.
    pub fn search(&self, query: &Query, embedder: &dyn EmbeddingProvider, k: usize) -> Result<Vec<ScoredArgument>, RetrievalError> {
        self.search_with(query, embedder, k, &SearchOptions::default())
    }

    pub fn search_with(
        &self,
        query: &Query,
        embedder: &dyn EmbeddingProvider,
        k: usize,
        opts: &SearchOptions,
    ) -> Result<Vec<ScoredArgument>, RetrievalError> {
        if self.is_empty() {
            return Err(RetrievalError::EmptyIndex);
        }
        if k == 0 {
            return Err(RetrievalError::ZeroK);
        }
        let q = self.embed_statement(&query.statement, embedder)?;
        Ok(self.search_vector(&q, k, opts))
    }

    /// Search with an already normalized query vector.
    pub fn search_vector(&self, unit_query: &[f64], k: usize, opts: &SearchOptions) -> Vec<ScoredArgument> {
        let scores = self.score_all(unit_query);
        let mut order: Vec<usize> = (0..self.candidates.len())
            .filter(|&i| !opts.exclude_restaurants.contains(&self.candidates[i].restaurant_id))
            .collect();
        let cmp = |a: &usize, b: &usize| self.rank_cmp(&scores, *a, *b);
        if opts.dedup_restaurants {
            order.sort_by(cmp);
            let mut seen = BTreeSet::new();
            order.retain(|&i| seen.insert(self.candidates[i].restaurant_id.clone()));
            order.truncate(k);
        } else if k < order.len() {
            order.select_nth_unstable_by(k - 1, cmp);
            order.truncate(k);
            order.sort_by(cmp);
        } else {
            order.sort_by(cmp);
        }
        order
            .into_iter()
            .enumerate()
            .map(|(r, i)| {
                let mut candidate = self.candidates[i].clone();
                candidate.embedding = None;
                ScoredArgument {
                    candidate,
                    score: scores[i],
                    rank: r + 1,
                }
            })
            .collect()
    }

    fn rank_cmp(&self, scores: &[f64], a: usize, b: usize) -> Ordering {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| self.candidates[a].id.cmp(&self.candidates[b].id))
    }

    /// Restaurant of the best argument, with that argument as testimonial.
    pub fn recommend(&self, query: &Query, embedder: &dyn EmbeddingProvider) -> Result<(Restaurant, ScoredArgument), RetrievalError> {
        let top = self.search(query, embedder, 1)?.remove(0);
        let restaurant = self.restaurants[&top.candidate.restaurant_id].clone();
        Ok((restaurant, top))
    }

    pub fn snapshot(&self) -> IndexSnapshot {
        IndexSnapshot {
            fingerprint: self.fingerprint.clone(),
            dim: self.dim,
            restaurants: self.restaurants.values().cloned().collect(),
            candidates: self.candidates.clone(),
        }
    }

    pub fn from_snapshot(snap: IndexSnapshot, exec: Execution) -> Result<Self, RetrievalError> {
        let index = Self::from_embedded(snap.candidates, snap.restaurants, snap.fingerprint, exec)?;
        if !index.is_empty() && index.dim != snap.dim {
            return Err(RetrievalError::Snapshot(format!("declared dim {} but vectors have {}", snap.dim, index.dim)));
        }
        Ok(CandidateIndex { dim: snap.dim, ..index })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RetrievalError> {
        let json = serde_json::to_string(&self.snapshot()).map_err(|e| RetrievalError::Snapshot(e.to_string()))?;
        std::fs::write(path.as_ref(), json).map_err(|e| RetrievalError::Snapshot(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn load(path: impl AsRef<Path>, exec: Execution) -> Result<Self, RetrievalError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| RetrievalError::Snapshot(format!("{}: {e}", path.as_ref().display())))?;
        let snap: IndexSnapshot = serde_json::from_str(&text).map_err(|e| RetrievalError::Snapshot(e.to_string()))?;
        Self::from_snapshot(snap, exec)
    }

    /// Loads a snapshot and checks it was built by `embedder`'s vector space.
    pub fn load_for(path: impl AsRef<Path>, embedder: &dyn EmbeddingProvider, exec: Execution) -> Result<Self, RetrievalError> {
        let index = Self::load(path, exec)?;
        index.check_provider(embedder)?;
        Ok(index)
    }
}
