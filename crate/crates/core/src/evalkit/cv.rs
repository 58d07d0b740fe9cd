use super::labels::{LabelQuery, LabelSource};
use super::metrics::{ndcg_at_k, Gain};
use super::report::{CvReport, EvalReport, FoldReport, NdcgRow};
use super::{EvalError, UnlabeledPair};
use crate::exec::Execution;
use crate::rerank::{rerank, RankingTask, Reranker, TaskId};
use crate::retrieval::QueryMode;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub ks: Vec<usize>,
    pub gain: Gain,
    pub modes: Vec<QueryMode>,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 2,
            seed: 17,
            ks: vec![1, 3, 5, 10],
            gain: Gain::Exponential,
            modes: QueryMode::ALL.to_vec(),
        }
    }
}

/// Builds a ranker for one fold from its training tasks.
pub trait RankerFactory: Sync {
    fn name(&self) -> String;
    fn build(&self, train: &[RankingTask], mode: QueryMode) -> Result<Arc<dyn Reranker>, String>;
}

/// Ignores training data; hands out the same ranker for every fold and mode.
pub struct Fixed(pub String, pub Arc<dyn Reranker>);

impl RankerFactory for Fixed {
    fn name(&self) -> String {
        self.0.clone()
    }

    fn build(&self, _: &[RankingTask], _: QueryMode) -> Result<Arc<dyn Reranker>, String> {
        Ok(self.1.clone())
    }
}

/// Query id -> fold. Ids are sorted, shuffled under `seed`, then dealt round-robin.
pub fn assign_folds<'a>(query_ids: impl IntoIterator<Item = &'a str>, folds: usize, seed: u64) -> BTreeMap<String, usize> {
    let mut ids: Vec<&str> = query_ids.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ids.into_iter().enumerate().map(|(i, id)| (id.to_string(), i % folds)).collect()
}

/// Fills each task's graded labels from `judge`.
pub fn label_tasks(tasks: &mut [RankingTask], judge: &dyn LabelSource) -> Result<(), EvalError> {
    let mut missing = Vec::new();
    for t in tasks.iter_mut() {
        let lq = LabelQuery { id: &t.query_id, parts: &t.parts };
        let mut labels = BTreeMap::new();
        for c in &t.candidates {
            match judge.grade(lq, c) {
                Some(g) => {
                    labels.insert(c.id.clone(), g);
                }
                None => missing.push(UnlabeledPair {
                    query_id: t.query_id.clone(),
                    candidate_id: c.id.clone(),
                    critique: t.query.critique.clone(),
                    sentence: c.sentence.clone(),
                }),
            }
        }
        t.labels = Some(labels);
    }
    if missing.is_empty() {
        Ok(())
    } else {
        missing.sort_by(|a, b| (&a.query_id, &a.candidate_id).cmp(&(&b.query_id, &b.candidate_id)));
        missing.dedup_by(|a, b| a.query_id == b.query_id && a.candidate_id == b.candidate_id);
        Err(EvalError::MissingLabels(missing))
    }
}

/// k-fold evaluation by query: each fold's ranker is built from the other
/// folds' tasks and scored on its own, per task kind and input mode.
pub fn cross_validate(
    tasks: &[RankingTask],
    config: &CvConfig,
    factory: &dyn RankerFactory,
    exec: Execution,
) -> Result<EvalReport, EvalError> {
    if config.folds < 2 {
        return Err(EvalError::BadFolds(config.folds));
    }
    if config.ks.is_empty() || config.ks.contains(&0) || config.modes.is_empty() {
        return Err(EvalError::Config("ks must be positive and modes non-empty".into()));
    }
    let fold_of = assign_folds(tasks.iter().map(|t| t.query_id.as_str()), config.folds, config.seed);
    if fold_of.len() < config.folds {
        return Err(EvalError::TooFewQueries {
            folds: config.folds,
            queries: fold_of.len(),
        });
    }
    let unlabeled: Vec<UnlabeledPair> = tasks
        .iter()
        .flat_map(|t| {
            t.unlabeled().into_iter().map(|id| UnlabeledPair {
                query_id: t.query_id.clone(),
                candidate_id: id.to_string(),
                critique: t.query.critique.clone(),
                sentence: t.candidates.iter().find(|c| c.id == id).map(|c| c.sentence.clone()).unwrap_or_default(),
            })
        })
        .collect();
    if !unlabeled.is_empty() {
        return Err(EvalError::MissingLabels(unlabeled));
    }

    let mut query_rounds: BTreeMap<String, u8> = BTreeMap::new();
    for t in tasks {
        query_rounds.insert(t.query_id.clone(), t.parts.len().max(1) as u8);
    }

    let mut per_fold = Vec::with_capacity(config.folds);
    for fold in 0..config.folds {
        let (test, train): (Vec<&RankingTask>, Vec<&RankingTask>) = tasks.iter().partition(|t| fold_of[&t.query_id] == fold);
        let train: Vec<RankingTask> = train.into_iter().cloned().collect();
        let mut rows = Vec::new();
        for &mode in &config.modes {
            let ranker = factory.build(&train, mode).map_err(EvalError::Ranker)?;
            let scored: Vec<(TaskId, Vec<f64>)> = exec.try_map(&test, |t| -> Result<_, EvalError> {
                let t = t.with_mode(mode)?;
                let res = rerank(&t, ranker.as_ref())?;
                let gains = t.gains_in_order(&res.ordering).expect("labels checked above");
                let vals = config
                    .ks
                    .iter()
                    .map(|&k| ndcg_at_k(&gains, k, config.gain))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((t.task, vals))
            })?;
            for task in TaskId::ALL {
                let of_task: Vec<&Vec<f64>> = scored.iter().filter(|(id, _)| *id == task).map(|(_, v)| v).collect();
                if of_task.is_empty() {
                    continue;
                }
                let at = config
                    .ks
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| (k, of_task.iter().map(|v| v[i]).sum::<f64>() / of_task.len() as f64))
                    .collect();
                rows.push(NdcgRow { task, mode, at });
            }
        }
        let queries: BTreeSet<String> = test.iter().map(|t| t.query_id.clone()).collect();
        per_fold.push(FoldReport {
            fold,
            queries: queries.into_iter().collect(),
            rows,
        });
    }

    let mut mean: Vec<NdcgRow> = Vec::new();
    for row in &per_fold[0].rows {
        let matching: Vec<&NdcgRow> = per_fold
            .iter()
            .filter_map(|f| f.rows.iter().find(|r| r.task == row.task && r.mode == row.mode))
            .collect();
        let at = row
            .at
            .keys()
            .map(|&k| (k, matching.iter().map(|r| r.at[&k]).sum::<f64>() / matching.len() as f64))
            .collect();
        mean.push(NdcgRow {
            task: row.task,
            mode: row.mode,
            at,
        });
    }

    let mut rounds = BTreeMap::new();
    for n in query_rounds.values() {
        *rounds.entry(*n).or_insert(0) += 1;
    }
    Ok(EvalReport {
        ndcg: Some(CvReport {
            folds: config.folds,
            seed: config.seed,
            gain: config.gain,
            ranker: factory.name(),
            query_rounds: rounds,
            per_fold,
            mean,
        }),
        ..EvalReport::empty()
    })
}
