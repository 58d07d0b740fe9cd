//! Evaluation: Precision@k, nDCG@k, Cohen's kappa, k-fold cross-validation
//! and the with/without-interpretation ablation.
//!
//! nDCG uses exponential gain `2^g - 1` and a `1 / log2(rank + 1)` discount
//! by default; [`Gain::Linear`] switches to the raw grade. Grades are 1..=3.

mod ablation;
mod cv;
mod labels;
mod metrics;
mod report;

pub use ablation::{resolve_preferences, run_ablation, AblationConfig, PreferenceSource};
pub use cv::{assign_folds, cross_validate, label_tasks, CvConfig, Fixed, RankerFactory};
pub use labels::{Agreement, AspectJudge, FileLabels, LabelKind, Layered, LabelQuery, LabelRecord, LabelSource};
pub use metrics::{cohens_kappa, dcg_at_k, ndcg_at_k, precision_at_k, Gain, MetricError};
pub use report::{AblationReport, CvReport, EvalReport, FoldReport, NdcgRow, PrecisionCurve, PrecisionRow, Reference};

use crate::dataset::CritiqueRecord;
use crate::exec::Execution;
use crate::interpreter::InterpretError;
use crate::rerank::{assemble_tasks, CosineReranker, MergePolicy, RerankError, TaskConfig, TaskQuery, TASK_DEPTH};
use crate::retrieval::{CandidateIndex, EmbeddingProvider, QueryMode, RetrievalError};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// A retrieved argument the label source has no judgement for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnlabeledPair {
    pub query_id: String,
    pub candidate_id: String,
    pub critique: String,
    pub sentence: String,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{0}")]
    Config(String),
    #[error("need at least 2 folds, got {0}")]
    BadFolds(usize),
    #[error("{queries} distinct queries cannot fill {folds} folds")]
    TooFewQueries { folds: usize, queries: usize },
    #[error("{} unlabeled (query, argument) pairs, first: {}/{}", .0.len(), .0[0].query_id, .0[0].candidate_id)]
    MissingLabels(Vec<UnlabeledPair>),
    #[error("interpreting {query_id}: {source}")]
    Interpret { query_id: String, source: InterpretError },
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Rerank(#[from] RerankError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("ranker: {0}")]
    Ranker(String),
}

impl EvalError {
    pub fn retriable(&self) -> bool {
        match self {
            EvalError::Interpret { source, .. } => source.retriable(),
            EvalError::Retrieval(e) => e.retriable(),
            _ => false,
        }
    }
}

/// Settings for a full evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub k: usize,
    pub folds: usize,
    pub seed: u64,
    pub task_depth: usize,
    /// Queries sampled (under `seed`) for the ranking tasks; all if `None`.
    pub task_queries: Option<usize>,
    pub gain: Gain,
    pub merge: MergePolicy,
    pub ablation_modes: Vec<QueryMode>,
    pub rerank_modes: Vec<QueryMode>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: 3,
            folds: 2,
            seed: 17,
            task_depth: TASK_DEPTH,
            task_queries: Some(100),
            gain: Gain::Exponential,
            merge: MergePolicy::Union,
            ablation_modes: vec![QueryMode::Crit, QueryMode::Pref],
            rerank_modes: QueryMode::ALL.to_vec(),
        }
    }
}

/// Ablation, then ranking tasks scored by the cosine baseline under
/// cross-validation, plus agreement figures if given.
#[allow(clippy::too_many_arguments)]
pub fn run_eval(
    dataset: &[CritiqueRecord],
    index: Arc<CandidateIndex>,
    embedder: Arc<dyn EmbeddingProvider>,
    judge: &dyn LabelSource,
    preferences: PreferenceSource<'_>,
    agreement: Vec<Agreement>,
    config: &EvalConfig,
    exec: Execution,
) -> Result<EvalReport, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let prefs = resolve_preferences(dataset, preferences, exec)?;
    let ablation = run_ablation(
        dataset,
        &index,
        embedder.as_ref(),
        judge,
        PreferenceSource::Given(&prefs),
        &AblationConfig {
            k: config.k,
            modes: config.ablation_modes.clone(),
        },
        exec,
    )?
    .ablation
    .map(|mut a| {
        a.preferences = preferences.label().into();
        a
    });

    let chosen: Vec<usize> = match config.task_queries {
        Some(n) if n < dataset.len() => {
            let mut idx = sample(&mut ChaCha8Rng::seed_from_u64(config.seed), dataset.len(), n).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..dataset.len()).collect(),
    };
    let queries: Vec<TaskQuery> = chosen
        .iter()
        .map(|&i| TaskQuery {
            preference: prefs[i].clone(),
            ..TaskQuery::from(&dataset[i])
        })
        .collect();
    let task_config = TaskConfig {
        depth: config.task_depth,
        merge: config.merge,
        input_mode: QueryMode::Pref,
    };
    let mut tasks = assemble_tasks(&queries, &index, embedder.as_ref(), &task_config, exec)?;
    label_tasks(&mut tasks, judge)?;
    let factory = Fixed("cos".into(), Arc::new(CosineReranker::new(index, embedder)));
    let cv = cross_validate(
        &tasks,
        &CvConfig {
            folds: config.folds,
            seed: config.seed,
            ks: vec![1, 3, 5, 10],
            gain: config.gain,
            modes: config.rerank_modes.clone(),
        },
        &factory,
        exec,
    )?
    .ndcg;
    Ok(EvalReport {
        ablation,
        ndcg: cv,
        kappa: agreement,
        ..EvalReport::empty()
    })
}
