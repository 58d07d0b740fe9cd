//! Sentence embedding providers.

use crate::http::{HttpFailure, JsonClient};
use crate::text::{fnv1a, words};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use std::sync::RwLock;
use std::time::Duration;

#[derive(Debug, Clone, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error(transparent)]
    Http(#[from] HttpFailure),
    #[error("no recorded embedding for {0:?}")]
    CassetteMiss(String),
    #[error("embedding has non-finite entries")]
    NonFinite,
    #[error("embedding dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("provider returned {got} vectors for {expected} texts")]
    Arity { expected: usize, got: usize },
    #[error("{0}")]
    Io(String),
}

impl EmbedError {
    pub fn retriable(&self) -> bool {
        matches!(self, EmbedError::Http(h) if h.retriable())
    }
}

/// A finite real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(EmbeddingVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }

    /// Identifies the vector space; an index built under one fingerprint
    /// cannot be queried under another.
    fn fingerprint(&self) -> String;

    /// Network providers should be called with whole batches.
    fn prefers_batches(&self) -> bool {
        false
    }
}

impl<E: EmbeddingProvider + ?Sized> EmbeddingProvider for std::sync::Arc<E> {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        (**self).embed(text)
    }
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        (**self).embed_batch(texts)
    }
    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
    fn prefers_batches(&self) -> bool {
        (**self).prefers_batches()
    }
}

pub const HASH_BAG_DIM: usize = 256;

/// Function words and domain-generic nouns ignored by [`HashBagEmbedder`].
pub const STOPWORDS: &[&str] = &[
    "a", "about", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be", "been", "bit", "but", "by",
    "can", "cant", "come", "did", "didnt", "do", "does", "doesnt", "dont", "feel", "feels", "for", "from", "get",
    "got", "had", "has", "have", "here", "how", "i", "if", "im", "in", "is", "it", "its", "just", "like", "look",
    "looks", "me", "more", "much", "my", "no", "not", "of", "on", "one", "only", "or", "our", "place", "prefer",
    "really", "restaurant", "seems", "so", "some", "spot", "than", "that", "thats", "the", "their", "them",
    "there", "theres", "these", "they", "this", "those", "to", "too", "up", "very", "was", "way", "we", "were",
    "what", "will", "with", "would", "you",
];

/// Deterministic bag-of-words embedder: every content token adds 1.0 at
/// bucket `fnv1a(token) % dim`, and the sum is unit-normalized. Text made
/// only of stopwords falls back to all tokens, so a non-empty text never
/// maps to the zero vector.
#[derive(Debug, Clone)]
pub struct HashBagEmbedder {
    dim: usize,
}

impl Default for HashBagEmbedder {
    fn default() -> Self {
        HashBagEmbedder { dim: HASH_BAG_DIM }
    }
}

impl HashBagEmbedder {
    pub fn with_dim(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        HashBagEmbedder { dim }
    }

    pub fn content_tokens(text: &str) -> Vec<String> {
        let all = words(text);
        let content: Vec<String> = all.iter().filter(|w| !STOPWORDS.contains(&w.as_str())).cloned().collect();
        if content.is_empty() {
            all
        } else {
            content
        }
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a(token.as_bytes()) % self.dim as u64) as usize
    }
}

impl EmbeddingProvider for HashBagEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut v = vec![0.0; self.dim];
        let tokens = Self::content_tokens(text);
        if tokens.is_empty() {
            v[(fnv1a(text.trim().as_bytes()) % self.dim as u64) as usize] = 1.0;
        }
        for t in &tokens {
            v[self.bucket(t)] += 1.0;
        }
        let norm = super::l2_norm(&v);
        v.iter_mut().for_each(|x| *x /= norm);
        EmbeddingVector::new(v)
    }

    fn fingerprint(&self) -> String {
        format!("hashbag-fnv1a-v1:dim={}", self.dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCassetteEntry {
    pub text: String,
    pub vector: Vec<f64>,
}

/// Replays recorded vectors keyed by exact text.
#[derive(Debug, Clone)]
pub struct CassetteEmbedder {
    vectors: HashMap<String, EmbeddingVector>,
    dim: usize,
    fingerprint: String,
}

impl CassetteEmbedder {
    pub fn from_entries(entries: Vec<EmbeddingCassetteEntry>) -> Result<Self, EmbedError> {
        let dim = entries.first().map_or(0, |e| e.vector.len());
        let mut digest = Vec::new();
        let mut vectors = HashMap::with_capacity(entries.len());
        for e in entries {
            if e.vector.len() != dim {
                return Err(EmbedError::Dimension {
                    expected: dim,
                    got: e.vector.len(),
                });
            }
            digest.extend_from_slice(e.text.as_bytes());
            for x in &e.vector {
                digest.extend_from_slice(&x.to_bits().to_le_bytes());
            }
            vectors.insert(e.text, EmbeddingVector::new(e.vector)?);
        }
        Ok(CassetteEmbedder {
            fingerprint: format!("cassette:dim={dim}:{:016x}", fnv1a(&digest)),
            vectors,
            dim,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let entries = crate::jsonl::read(path).map_err(|e| EmbedError::Io(e.to_string()))?;
        Self::from_entries(entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, text: &str) -> bool {
        self.vectors.contains_key(text)
    }
}

impl EmbeddingProvider for CassetteEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        self.vectors
            .get(text)
            .cloned()
            .ok_or_else(|| EmbedError::CassetteMiss(text.to_string()))
    }

    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }
}

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
    #[serde(default)]
    index: usize,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

/// Client for an OpenAI-compatible `/v1/embeddings` endpoint.
pub struct HttpEmbedder {
    client: JsonClient,
    model: String,
}

impl HttpEmbedder {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        HttpEmbedder {
            client: JsonClient::new(endpoint, api_key, Duration::from_secs(120)),
            model: model.into(),
        }
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        Ok(self.embed_batch(&[text])?.remove(0))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(EmbedError::EmptyText);
        }
        let mut resp: EmbeddingResponse = self.client.post(&EmbeddingRequest {
            model: &self.model,
            input: texts,
        })?;
        if resp.data.len() != texts.len() {
            return Err(EmbedError::Arity {
                expected: texts.len(),
                got: resp.data.len(),
            });
        }
        resp.data.sort_by_key(|d| d.index);
        resp.data.into_iter().map(|d| EmbeddingVector::new(d.embedding)).collect()
    }

    fn fingerprint(&self) -> String {
        format!("http:{}@{}", self.model, self.client.endpoint())
    }

    fn prefers_batches(&self) -> bool {
        true
    }
}

/// Memoizes an inner provider by exact text. Reads proceed concurrently;
/// inserts take the write lock.
pub struct CachedEmbedder<E> {
    inner: E,
    cache: RwLock<HashMap<String, EmbeddingVector>>,
}

impl<E: EmbeddingProvider> CachedEmbedder<E> {
    pub fn new(inner: E) -> Self {
        CachedEmbedder {
            inner,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn cached(&self) -> usize {
        self.cache.read().unwrap_or_else(|e| e.into_inner()).len()
    }
}

impl<E: EmbeddingProvider> EmbeddingProvider for CachedEmbedder<E> {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if let Some(v) = self.cache.read().unwrap_or_else(|e| e.into_inner()).get(text) {
            return Ok(v.clone());
        }
        let v = self.inner.embed(text)?;
        self.cache
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .entry(text.to_string())
            .or_insert_with(|| v.clone());
        Ok(v)
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let missing: Vec<&str> = {
            let cache = self.cache.read().unwrap_or_else(|e| e.into_inner());
            let mut seen = std::collections::HashSet::new();
            texts.iter().copied().filter(|t| !cache.contains_key(*t) && seen.insert(*t)).collect()
        };
        if !missing.is_empty() {
            let fresh = self.inner.embed_batch(&missing)?;
            let mut cache = self.cache.write().unwrap_or_else(|e| e.into_inner());
            for (t, v) in missing.into_iter().zip(fresh) {
                cache.entry(t.to_string()).or_insert(v);
            }
        }
        let cache = self.cache.read().unwrap_or_else(|e| e.into_inner());
        Ok(texts.iter().map(|t| cache[*t].clone()).collect())
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    fn prefers_batches(&self) -> bool {
        self.inner.prefers_batches()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Independent FNV-1a for the hand check.
    fn fnv(s: &str) -> u64 {
        s.bytes()
            .fold(14695981039346656037u64, |h, b| (h ^ b as u64).wrapping_mul(1099511628211))
    }

    #[test]
    fn hash_bag_two_tokens_by_hand() {
        let e = HashBagEmbedder::default();
        let v = e.embed("great food").unwrap();
        let (a, b) = ((fnv("great") % 256) as usize, (fnv("food") % 256) as usize);
        assert_ne!(a, b);
        let mut expect = vec![0.0; 256];
        expect[a] = 1.0 / 2f64.sqrt();
        expect[b] = 1.0 / 2f64.sqrt();
        for (x, y) in v.as_slice().iter().zip(&expect) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn hash_bag_is_deterministic_and_rejects_empty() {
        let e = HashBagEmbedder::default();
        assert_eq!(e.embed("same string").unwrap(), e.embed("same string").unwrap());
        assert!(matches!(e.embed(""), Err(EmbedError::EmptyText)));
        assert!(matches!(e.embed("  "), Err(EmbedError::EmptyText)));
    }

    #[test]
    fn stopword_only_text_still_embeds() {
        let e = HashBagEmbedder::default();
        let v = e.embed("It is too.").unwrap();
        assert!((crate::retrieval::l2_norm(v.as_slice()) - 1.0).abs() < 1e-12);
        let v = e.embed("!!!").unwrap();
        assert!((crate::retrieval::l2_norm(v.as_slice()) - 1.0).abs() < 1e-12);
        assert_eq!(HashBagEmbedder::content_tokens("I prefer a fancier place."), ["fancier"]);
    }

    #[test]
    fn cassette_lookup_and_fingerprint() {
        let entries = vec![
            EmbeddingCassetteEntry {
                text: "a".into(),
                vector: vec![1.0, 0.0],
            },
            EmbeddingCassetteEntry {
                text: "b".into(),
                vector: vec![0.0, 1.0],
            },
        ];
        let c = CassetteEmbedder::from_entries(entries.clone()).unwrap();
        assert_eq!(c.embed("b").unwrap().as_slice(), &[0.0, 1.0]);
        assert!(matches!(c.embed("zzz"), Err(EmbedError::CassetteMiss(_))));
        let mut changed = entries.clone();
        changed[1].vector = vec![0.0, 2.0];
        assert_ne!(c.fingerprint(), CassetteEmbedder::from_entries(changed).unwrap().fingerprint());
        let mut bad = entries;
        bad[1].vector = vec![0.0];
        assert!(CassetteEmbedder::from_entries(bad).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(EmbeddingVector::new(vec![1.0, f64::NAN]).is_err());
    }

    struct Counting(AtomicUsize);
    impl EmbeddingProvider for Counting {
        fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            EmbeddingVector::new(vec![text.len() as f64, 1.0])
        }
        fn fingerprint(&self) -> String {
            "counting".into()
        }
    }

    #[test]
    fn cache_hits_skip_inner() {
        let c = CachedEmbedder::new(Counting(AtomicUsize::new(0)));
        c.embed("x").unwrap();
        c.embed("x").unwrap();
        c.embed_batch(&["x", "yy", "yy"]).unwrap();
        assert_eq!(c.inner.0.load(Ordering::SeqCst), 2);
        assert_eq!(c.cached(), 2);
    }

    #[test]
    fn http_embedder_orders_by_index() {
        let (url, bodies) = crate::http::testserver::serve(vec![(
            200,
            r#"{"data":[{"embedding":[0,1],"index":1},{"embedding":[1,0],"index":0}]}"#.into(),
        )]);
        let e = HttpEmbedder::new(url, "use-v4", None);
        let v = e.embed_batch(&["first", "second"]).unwrap();
        assert_eq!(v[0].as_slice(), &[1.0, 0.0]);
        let sent: serde_json::Value = serde_json::from_str(&bodies.recv().unwrap()).unwrap();
        assert_eq!(sent["input"][1], "second");
        assert!(e.fingerprint().starts_with("http:use-v4@"));
    }
}
