//! Embedding retrieval of persuasive arguments.
//!
//! The index is an exhaustive scan over unit-normalized candidate vectors,
//! so cosine similarity is a dot product and search is exact. Results are
//! ordered by score descending, then candidate id ascending.

mod embed;
mod index;

pub use embed::{
    CachedEmbedder, CassetteEmbedder, EmbedError, EmbeddingCassetteEntry, EmbeddingProvider, EmbeddingVector,
    HashBagEmbedder, HttpEmbedder, HASH_BAG_DIM, STOPWORDS,
};
pub use index::{CandidateIndex, IndexSnapshot, SearchOptions};

use crate::corpus::ArgumentCandidate;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, thiserror::Error)]
pub enum RetrievalError {
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("candidate index is empty")]
    EmptyIndex,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("candidate {0} has no embedding")]
    MissingEmbedding(String),
    #[error("index was built with {index:?}, provider is {provider:?}")]
    FingerprintMismatch { index: String, provider: String },
    #[error("candidate {candidate} references unknown restaurant {restaurant}")]
    UnknownRestaurant { candidate: String, restaurant: String },
    #[error("mode {0:?} needs a preference")]
    MissingPreference(QueryMode),
    #[error("critique is empty")]
    EmptyCritique,
    #[error("embedding failed: {0}")]
    Embed(#[from] EmbedError),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

impl RetrievalError {
    pub fn retriable(&self) -> bool {
        matches!(self, RetrievalError::Embed(e) if e.retriable())
    }
}

/// Which text drives retrieval or reranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum QueryMode {
    /// Raw critique.
    Crit,
    /// Interpreted positive preference.
    Pref,
    /// Critique followed by preference.
    Concat,
}

impl QueryMode {
    pub const ALL: [QueryMode; 3] = [QueryMode::Crit, QueryMode::Pref, QueryMode::Concat];

    pub fn as_str(self) -> &'static str {
        match self {
            QueryMode::Crit => "CRIT",
            QueryMode::Pref => "PREF",
            QueryMode::Concat => "CONCAT",
        }
    }
}

impl std::fmt::Display for QueryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for QueryMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "CRIT" => Ok(QueryMode::Crit),
            "PREF" => Ok(QueryMode::Pref),
            "CONCAT" => Ok(QueryMode::Concat),
            other => Err(format!("unknown mode {other:?} (expected CRIT, PREF or CONCAT)")),
        }
    }
}

/// The statement fed to a retriever or reranker for `mode`.
pub fn make_input(mode: QueryMode, critique: &str, preference: Option<&str>) -> Result<String, RetrievalError> {
    match (mode, preference) {
        (QueryMode::Crit, _) => Ok(critique.to_string()),
        (QueryMode::Pref, Some(p)) => Ok(p.to_string()),
        (QueryMode::Concat, Some(p)) => Ok(format!("{critique} {p}")),
        (m, None) => Err(RetrievalError::MissingPreference(m)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub statement: String,
    pub mode: QueryMode,
    pub critique: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preference: Option<String>,
}

impl Query {
    pub fn new(mode: QueryMode, critique: impl Into<String>, preference: Option<String>) -> Result<Self, RetrievalError> {
        let critique = critique.into();
        if critique.trim().is_empty() {
            return Err(RetrievalError::EmptyCritique);
        }
        let statement = make_input(mode, &critique, preference.as_deref())?;
        Ok(Query {
            statement,
            mode,
            critique,
            preference,
        })
    }

    pub fn crit(critique: impl Into<String>) -> Result<Self, RetrievalError> {
        Self::new(QueryMode::Crit, critique, None)
    }

    pub fn pref(critique: impl Into<String>, preference: impl Into<String>) -> Result<Self, RetrievalError> {
        Self::new(QueryMode::Pref, critique, Some(preference.into()))
    }

    /// A free statement searched as-is, e.g. from the `/search` endpoint.
    pub fn statement(mode: QueryMode, statement: impl Into<String>) -> Self {
        let statement = statement.into();
        Query {
            critique: statement.clone(),
            preference: (mode != QueryMode::Crit).then(|| statement.clone()),
            statement,
            mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredArgument {
    pub candidate: ArgumentCandidate,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit-length copy of `v`.
pub fn normalize(v: &[f64]) -> Result<Vec<f64>, RetrievalError> {
    let n = l2_norm(v);
    if n == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Cosine of the angle between two vectors, clamped to `[-1, 1]`.
pub fn similarity(a: &[f64], b: &[f64]) -> Result<f64, RetrievalError> {
    if a.len() != b.len() {
        return Err(RetrievalError::DimensionMismatch(a.len(), b.len()));
    }
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// [`similarity`] over embedding vectors.
pub fn similarity_of(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, RetrievalError> {
    similarity(a.as_slice(), b.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_similarity_is_one() {
        let v = [0.3, -1.2, 4.0];
        assert!((similarity(&v, &v).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn orthogonal_is_zero() {
        assert_eq!(similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_cosine() {
        // 32 / (sqrt(14) * sqrt(77))
        let expect = 32.0 / (14f64 * 77.0).sqrt();
        let got = similarity(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((got - expect).abs() < 1e-15);
        assert!((got - 0.974_631_846_197_076_2).abs() < 1e-12);
    }

    #[test]
    fn similarity_errors() {
        assert!(matches!(similarity(&[0.0, 0.0], &[1.0, 0.0]), Err(RetrievalError::ZeroVector)));
        assert!(matches!(similarity(&[1.0], &[1.0, 0.0]), Err(RetrievalError::DimensionMismatch(1, 2))));
    }

    #[test]
    fn make_input_modes() {
        assert_eq!(
            make_input(QueryMode::Concat, "It doesn't look good for a date.", Some("I prefer more romantic")).unwrap(),
            "It doesn't look good for a date. I prefer more romantic"
        );
        assert_eq!(make_input(QueryMode::Crit, "c", Some("anything")).unwrap(), "c");
        assert_eq!(make_input(QueryMode::Crit, "c", None).unwrap(), "c");
        assert!(matches!(
            make_input(QueryMode::Pref, "c", None),
            Err(RetrievalError::MissingPreference(QueryMode::Pref))
        ));
    }

    #[test]
    fn query_invariants() {
        let q = Query::pref("It looks too casual.", "I prefer a fancier place.").unwrap();
        assert_eq!(q.statement, "I prefer a fancier place.");
        let q = Query::crit("It looks too casual.").unwrap();
        assert_eq!(q.statement, q.critique);
        assert!("pref".parse::<QueryMode>().is_ok());
        assert!("X".parse::<QueryMode>().is_err());
        assert!(Query::crit(" ").is_err());
    }
}
