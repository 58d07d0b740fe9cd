//! Ranking tasks and pluggable rerankers.
//!
//! For every query three tasks are assembled from the cosine retriever:
//! `TASK1` holds the top candidates retrieved with the raw critique, `TASK2`
//! those retrieved with the preference, and `TASK3` both sets. A
//! [`Reranker`] then orders a task's candidates given the statement built
//! for the chosen input mode (critique, preference, or both).

use crate::corpus::ArgumentCandidate;
use crate::exec::Execution;
use crate::http::{HttpFailure, JsonClient};
use crate::retrieval::{
    dot, normalize, CandidateIndex, EmbeddingProvider, Query, QueryMode, RetrievalError,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

pub use crate::retrieval::make_input;

/// Candidates retrieved per mode for `TASK1` and `TASK2`.
pub const TASK_DEPTH: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskId {
    #[serde(rename = "TASK1")]
    Task1,
    #[serde(rename = "TASK2")]
    Task2,
    #[serde(rename = "TASK3")]
    Task3,
}

impl TaskId {
    pub const ALL: [TaskId; 3] = [TaskId::Task1, TaskId::Task2, TaskId::Task3];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::Task1 => "TASK1",
            TaskId::Task2 => "TASK2",
            TaskId::Task3 => "TASK3",
        }
    }
}

impl std::fmt::Display for TaskId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTask {
    pub query_id: String,
    pub task: TaskId,
    /// Reranker input; its mode selects critique, preference or both.
    pub query: Query,
    /// Single-critique ids for compound queries.
    #[serde(default)]
    pub parts: Vec<String>,
    pub candidates: Vec<ArgumentCandidate>,
    /// Graded relevance 1..=3 per candidate id.
    #[serde(default)]
    pub labels: Option<BTreeMap<String, u8>>,
}

impl RankingTask {
    /// Same candidates, statement rebuilt for `mode`.
    pub fn with_mode(&self, mode: QueryMode) -> Result<RankingTask, RetrievalError> {
        let query = Query::new(mode, self.query.critique.clone(), self.query.preference.clone())?;
        Ok(RankingTask { query, ..self.clone() })
    }

    /// Labels in the order given by `ordering`; `None` if any is missing.
    pub fn gains_in_order(&self, ordering: &[usize]) -> Option<Vec<u8>> {
        let labels = self.labels.as_ref()?;
        ordering.iter().map(|&i| labels.get(&self.candidates[i].id).copied()).collect()
    }

    pub fn unlabeled(&self) -> Vec<&str> {
        self.candidates
            .iter()
            .filter(|c| self.labels.as_ref().is_none_or(|l| !l.contains_key(&c.id)))
            .map(|c| c.id.as_str())
            .collect()
    }
}

/// How `TASK3` combines the two retrieved sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergePolicy {
    /// Each candidate once: `TASK1` order, then unseen `TASK2` candidates.
    #[default]
    Union,
    /// `TASK1` followed by `TASK2`, duplicates kept.
    Concatenate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskConfig {
    pub depth: usize,
    pub merge: MergePolicy,
    /// Mode of the reranker input stored in each task.
    pub input_mode: QueryMode,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            depth: TASK_DEPTH,
            merge: MergePolicy::Union,
            input_mode: QueryMode::Pref,
        }
    }
}

/// A query to build tasks for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskQuery {
    pub id: String,
    pub critique: String,
    pub preference: String,
    #[serde(default)]
    pub parts: Vec<String>,
}

impl From<&crate::dataset::CritiqueRecord> for TaskQuery {
    fn from(r: &crate::dataset::CritiqueRecord) -> Self {
        TaskQuery {
            id: r.id.clone(),
            critique: r.critique.clone(),
            preference: r.preference.clone(),
            parts: r.parts.clone(),
        }
    }
}

/// Three tasks per query, in query order then `TASK1..TASK3`.
pub fn assemble_tasks(
    queries: &[TaskQuery],
    index: &CandidateIndex,
    embedder: &dyn EmbeddingProvider,
    config: &TaskConfig,
    exec: Execution,
) -> Result<Vec<RankingTask>, RetrievalError> {
    let per_query = exec.try_map(queries, |q| -> Result<[RankingTask; 3], RetrievalError> {
        let crit = Query::crit(q.critique.clone())?;
        let pref = Query::pref(q.critique.clone(), q.preference.clone())?;
        let strip = |v: Vec<crate::retrieval::ScoredArgument>| -> Vec<ArgumentCandidate> {
            v.into_iter().map(|s| s.candidate).collect()
        };
        let by_crit = strip(index.search(&crit, embedder, config.depth)?);
        let by_pref = strip(index.search(&pref, embedder, config.depth)?);
        let both = match config.merge {
            MergePolicy::Concatenate => by_crit.iter().chain(&by_pref).cloned().collect(),
            MergePolicy::Union => {
                let mut seen = BTreeSet::new();
                by_crit.iter().chain(&by_pref).filter(|c| seen.insert(c.id.clone())).cloned().collect()
            }
        };
        let input = Query::new(config.input_mode, q.critique.clone(), Some(q.preference.clone()))?;
        let task = |task, candidates| RankingTask {
            query_id: q.id.clone(),
            task,
            query: input.clone(),
            parts: q.parts.clone(),
            candidates,
            labels: None,
        };
        Ok([task(TaskId::Task1, by_crit), task(TaskId::Task2, by_pref), task(TaskId::Task3, both)])
    })?;
    Ok(per_query.into_iter().flatten().collect())
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum RerankError {
    #[error("{query_id}/{task}: task has no candidates")]
    EmptyTask { query_id: String, task: TaskId },
    #[error("{query_id}/{task}: ranker failed: {message}")]
    Ranker { query_id: String, task: TaskId, message: String },
    #[error("{query_id}/{task}: ranker returned {got} scores for {expected} candidates")]
    Arity { query_id: String, task: TaskId, expected: usize, got: usize },
}

/// Scores `(statement, candidate)` pairs; higher is more relevant.
pub trait Reranker: Send + Sync {
    fn score(&self, statement: &str, candidates: &[ArgumentCandidate]) -> Result<Vec<f64>, String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankResult {
    /// Candidate indices, best first.
    pub ordering: Vec<usize>,
    /// Per candidate, in the task's candidate order.
    pub scores: Vec<f64>,
}

/// Orders a task's candidates by ranker score descending, id ascending.
pub fn rerank(task: &RankingTask, ranker: &dyn Reranker) -> Result<RerankResult, RerankError> {
    if task.candidates.is_empty() {
        return Err(RerankError::EmptyTask {
            query_id: task.query_id.clone(),
            task: task.task,
        });
    }
    let scores = ranker
        .score(&task.query.statement, &task.candidates)
        .map_err(|message| RerankError::Ranker {
            query_id: task.query_id.clone(),
            task: task.task,
            message,
        })?;
    if scores.len() != task.candidates.len() {
        return Err(RerankError::Arity {
            query_id: task.query_id.clone(),
            task: task.task,
            expected: task.candidates.len(),
            got: scores.len(),
        });
    }
    let key: Vec<f64> = scores.iter().map(|s| s + 0.0).collect();
    let mut ordering: Vec<usize> = (0..scores.len()).collect();
    ordering.sort_by(|&a, &b| {
        key[b]
            .total_cmp(&key[a])
            .then_with(|| task.candidates[a].id.cmp(&task.candidates[b].id))
    });
    Ok(RerankResult { ordering, scores })
}

/// Cosine similarity in the retrieval index's space. Reproduces retrieval
/// scores bit-for-bit for indexed candidates.
pub struct CosineReranker {
    index: Arc<CandidateIndex>,
    embedder: Arc<dyn EmbeddingProvider>,
}

impl CosineReranker {
    pub fn new(index: Arc<CandidateIndex>, embedder: Arc<dyn EmbeddingProvider>) -> Self {
        CosineReranker { index, embedder }
    }
}

impl Reranker for CosineReranker {
    fn score(&self, statement: &str, candidates: &[ArgumentCandidate]) -> Result<Vec<f64>, String> {
        let q = self
            .index
            .embed_statement(statement, self.embedder.as_ref())
            .map_err(|e| e.to_string())?;
        candidates
            .iter()
            .map(|c| {
                let v = match self.index.unit_vector(&c.id) {
                    Some(v) => v.to_vec(),
                    None => {
                        let raw = self.embedder.embed(&c.sentence).map_err(|e| e.to_string())?;
                        normalize(raw.as_slice()).map_err(|e| e.to_string())?
                    }
                };
                Ok(dot(&v, &q).clamp(-1.0, 1.0))
            })
            .collect()
    }
}

/// Scores each candidate with its graded label; a perfect ranker.
#[derive(Debug, Clone, Default)]
pub struct OracleReranker {
    labels: HashMap<String, f64>,
    reversed: bool,
}

impl OracleReranker {
    pub fn for_task(task: &RankingTask) -> Self {
        let labels = task
            .labels
            .iter()
            .flatten()
            .map(|(k, &v)| (k.clone(), f64::from(v)))
            .collect();
        OracleReranker { labels, reversed: false }
    }

    /// Worst possible ordering: lowest label first.
    pub fn reversed(mut self) -> Self {
        self.reversed = true;
        self
    }
}

impl Reranker for OracleReranker {
    fn score(&self, _statement: &str, candidates: &[ArgumentCandidate]) -> Result<Vec<f64>, String> {
        candidates
            .iter()
            .map(|c| {
                let v = self.labels.get(&c.id).copied().ok_or_else(|| format!("no label for {}", c.id))?;
                Ok(if self.reversed { -v } else { v })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankCassetteEntry {
    pub statement: String,
    pub candidate_id: String,
    pub score: f64,
}

/// Replays recorded `(statement, candidate)` scores.
#[derive(Debug, Clone, Default)]
pub struct CassetteReranker {
    scores: HashMap<(String, String), f64>,
}

impl CassetteReranker {
    pub fn from_entries(entries: impl IntoIterator<Item = RerankCassetteEntry>) -> Self {
        CassetteReranker {
            scores: entries.into_iter().map(|e| ((e.statement, e.candidate_id), e.score)).collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, crate::jsonl::JsonlError> {
        Ok(Self::from_entries(crate::jsonl::read::<RerankCassetteEntry>(path)?))
    }
}

impl Reranker for CassetteReranker {
    fn score(&self, statement: &str, candidates: &[ArgumentCandidate]) -> Result<Vec<f64>, String> {
        candidates
            .iter()
            .map(|c| {
                self.scores
                    .get(&(statement.to_string(), c.id.clone()))
                    .copied()
                    .ok_or_else(|| format!("no recorded score for {:?} / {}", statement, c.id))
            })
            .collect()
    }
}

#[derive(Serialize)]
struct ScorerCandidate<'a> {
    id: &'a str,
    sentence: &'a str,
    restaurant_id: &'a str,
}

#[derive(Serialize)]
struct ScorerRequest<'a> {
    statement: &'a str,
    candidates: Vec<ScorerCandidate<'a>>,
}

#[derive(Deserialize)]
struct ScorerResponse {
    scores: Vec<f64>,
}

/// External scorer, e.g. a separately fine-tuned cross-encoder.
///
/// Protocol: `POST {"statement", "candidates": [{"id","sentence","restaurant_id"}]}`
/// -> `{"scores": [..]}` in candidate order.
pub struct HttpReranker {
    client: JsonClient,
}

impl HttpReranker {
    pub fn new(endpoint: impl Into<String>, bearer: Option<String>) -> Self {
        HttpReranker {
            client: JsonClient::new(endpoint, bearer, Duration::from_secs(120)),
        }
    }
}

impl Reranker for HttpReranker {
    fn score(&self, statement: &str, candidates: &[ArgumentCandidate]) -> Result<Vec<f64>, String> {
        let req = ScorerRequest {
            statement,
            candidates: candidates
                .iter()
                .map(|c| ScorerCandidate {
                    id: &c.id,
                    sentence: &c.sentence,
                    restaurant_id: &c.restaurant_id,
                })
                .collect(),
        };
        let resp: ScorerResponse = self.client.post(&req).map_err(|e: HttpFailure| e.to_string())?;
        if resp.scores.iter().any(|s| !s.is_finite()) {
            return Err("scorer returned a non-finite score".into());
        }
        Ok(resp.scores)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFileCandidate {
    pub id: String,
    pub sentence: String,
    pub restaurant_id: String,
}

/// One line of a task file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFileRow {
    pub query_id: String,
    pub task: TaskId,
    pub mode: QueryMode,
    pub statement: String,
    pub critique: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preference: Option<String>,
    pub candidates: Vec<TaskFileCandidate>,
    #[serde(default)]
    pub labels: BTreeMap<String, u8>,
}

impl From<&RankingTask> for TaskFileRow {
    fn from(t: &RankingTask) -> Self {
        TaskFileRow {
            query_id: t.query_id.clone(),
            task: t.task,
            mode: t.query.mode,
            statement: t.query.statement.clone(),
            critique: t.query.critique.clone(),
            preference: t.query.preference.clone(),
            candidates: t
                .candidates
                .iter()
                .map(|c| TaskFileCandidate {
                    id: c.id.clone(),
                    sentence: c.sentence.clone(),
                    restaurant_id: c.restaurant_id.clone(),
                })
                .collect(),
            labels: t.labels.clone().unwrap_or_default(),
        }
    }
}

impl TaskFileRow {
    pub fn into_task(self) -> Result<RankingTask, String> {
        for (id, g) in &self.labels {
            if !(1..=3).contains(g) {
                return Err(format!("{}/{}: label {g} for {id} outside 1..=3", self.query_id, self.task));
            }
        }
        let query = Query::new(self.mode, self.critique, self.preference).map_err(|e| e.to_string())?;
        if query.statement != self.statement {
            return Err(format!("{}/{}: statement does not match mode {}", self.query_id, self.task, self.mode));
        }
        Ok(RankingTask {
            query_id: self.query_id,
            task: self.task,
            query,
            parts: Vec::new(),
            candidates: self
                .candidates
                .into_iter()
                .map(|c| ArgumentCandidate {
                    id: c.id,
                    restaurant_id: c.restaurant_id,
                    sentence: c.sentence,
                    positivity: 1.0,
                    embedding: None,
                })
                .collect(),
            labels: (!self.labels.is_empty()).then_some(self.labels),
        })
    }
}

pub fn write_task_file(path: impl AsRef<Path>, tasks: &[RankingTask]) -> Result<(), crate::jsonl::JsonlError> {
    let rows: Vec<TaskFileRow> = tasks.iter().map(TaskFileRow::from).collect();
    crate::jsonl::write(path, &rows)
}

pub fn read_task_file(path: impl AsRef<Path>) -> Result<Vec<RankingTask>, String> {
    let rows: Vec<TaskFileRow> = crate::jsonl::read(path).map_err(|e| e.to_string())?;
    rows.into_iter().map(TaskFileRow::into_task).collect()
}
