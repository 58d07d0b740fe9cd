use super::labels::{LabelQuery, LabelSource};
use super::metrics::precision_at_k;
use super::report::{AblationReport, EvalReport, PrecisionCurve, PrecisionRow};
use super::{EvalError, UnlabeledPair};
use crate::dataset::CritiqueRecord;
use crate::exec::Execution;
use crate::interpreter::{compound_statement, Interpreter};
use crate::retrieval::{CandidateIndex, EmbeddingProvider, Query, QueryMode};
use std::collections::{BTreeMap, HashMap};

/// Where PREF/CONCAT inputs come from.
#[derive(Clone, Copy)]
pub enum PreferenceSource<'a> {
    /// The dataset's own preference field.
    Dataset,
    /// Interpreter output. Compounds are interpreted part by part and the
    /// part preferences joined with [`compound_statement`].
    Interpreter(&'a Interpreter),
    /// Precomputed, aligned with the dataset.
    Given(&'a [String]),
}

impl PreferenceSource<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            PreferenceSource::Dataset => "dataset",
            PreferenceSource::Interpreter(_) => "interpreter",
            PreferenceSource::Given(_) => "given",
        }
    }
}

/// One preference per record, in dataset order.
pub fn resolve_preferences(
    dataset: &[CritiqueRecord],
    source: PreferenceSource<'_>,
    exec: Execution,
) -> Result<Vec<String>, EvalError> {
    match source {
        PreferenceSource::Dataset => Ok(dataset.iter().map(|r| r.preference.clone()).collect()),
        PreferenceSource::Given(prefs) => {
            if prefs.len() != dataset.len() {
                return Err(EvalError::Config(format!(
                    "{} preferences given for {} records",
                    prefs.len(),
                    dataset.len()
                )));
            }
            Ok(prefs.to_vec())
        }
        PreferenceSource::Interpreter(interp) => {
            let by_id: HashMap<&str, &CritiqueRecord> = dataset.iter().map(|r| (r.id.as_str(), r)).collect();
            exec.try_map(dataset, |r| {
                let critiques: Vec<&str> = match r.parts.iter().map(|p| by_id.get(p.as_str())).collect::<Option<Vec<_>>>() {
                    Some(parts) if !parts.is_empty() => parts.iter().map(|p| p.critique.as_str()).collect(),
                    _ => vec![r.critique.as_str()],
                };
                let prefs = critiques
                    .iter()
                    .map(|c| interp.transform(c).map(|p| p.preference))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|source| EvalError::Interpret {
                        query_id: r.id.clone(),
                        source,
                    })?;
                Ok(compound_statement(&prefs))
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationConfig {
    pub k: usize,
    pub modes: Vec<QueryMode>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            k: 3,
            modes: vec![QueryMode::Crit, QueryMode::Pref],
        }
    }
}

/// Retrieves the top `k` per query and mode, labels each with `judge`, and
/// reports Precision@1..k overall and per round count.
pub fn run_ablation(
    dataset: &[CritiqueRecord],
    index: &CandidateIndex,
    embedder: &dyn EmbeddingProvider,
    judge: &dyn LabelSource,
    preferences: PreferenceSource<'_>,
    config: &AblationConfig,
    exec: Execution,
) -> Result<EvalReport, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    if config.k == 0 || config.modes.is_empty() {
        return Err(EvalError::Config("k and modes must be non-empty".into()));
    }
    let prefs = resolve_preferences(dataset, preferences, exec)?;
    let items: Vec<(&CritiqueRecord, &String)> = dataset.iter().zip(&prefs).collect();

    type PerQuery = (Vec<Vec<bool>>, Vec<UnlabeledPair>);
    let per_query: Vec<PerQuery> = exec.try_map(&items, |(r, pref)| -> Result<PerQuery, EvalError> {
        let lq = LabelQuery { id: &r.id, parts: &r.parts };
        let mut labels = Vec::with_capacity(config.modes.len());
        let mut missing = Vec::new();
        for &mode in &config.modes {
            let q = Query::new(mode, r.critique.clone(), Some((*pref).clone()))?;
            let hits = index.search(&q, embedder, config.k)?;
            let mut row = Vec::with_capacity(hits.len());
            for h in hits {
                match judge.binary(lq, &h.candidate) {
                    Some(b) => row.push(b),
                    None => missing.push(UnlabeledPair {
                        query_id: r.id.clone(),
                        candidate_id: h.candidate.id.clone(),
                        critique: r.critique.clone(),
                        sentence: h.candidate.sentence.clone(),
                    }),
                }
            }
            labels.push(row);
        }
        Ok((labels, missing))
    })?;

    let mut missing: Vec<UnlabeledPair> = per_query.iter().flat_map(|(_, m)| m.iter().cloned()).collect();
    if !missing.is_empty() {
        missing.sort_by(|a, b| (&a.query_id, &a.candidate_id).cmp(&(&b.query_id, &b.candidate_id)));
        missing.dedup_by(|a, b| a.query_id == b.query_id && a.candidate_id == b.candidate_id);
        return Err(EvalError::MissingLabels(missing));
    }

    let mut rows = Vec::with_capacity(config.modes.len());
    for (m, &mode) in config.modes.iter().enumerate() {
        let all = curve(per_query.iter().map(|(l, _)| &l[m]), config.k)?;
        let mut by_rounds = BTreeMap::new();
        let mut rounds: Vec<u8> = dataset.iter().map(|r| r.rounds).collect();
        rounds.sort_unstable();
        rounds.dedup();
        for n in rounds {
            let subset = dataset.iter().zip(&per_query).filter(|(r, _)| r.rounds == n).map(|(_, (l, _))| &l[m]);
            by_rounds.insert(n, curve(subset, config.k)?);
        }
        rows.push(PrecisionRow { mode, all, by_rounds });
    }
    Ok(EvalReport {
        ablation: Some(AblationReport {
            k: config.k,
            n_queries: dataset.len(),
            preferences: preferences.label().into(),
            rows,
        }),
        ..EvalReport::empty()
    })
}

fn curve<'a>(lists: impl Iterator<Item = &'a Vec<bool>>, k: usize) -> Result<PrecisionCurve, EvalError> {
    let mut sums = vec![0.0; k];
    let mut n = 0;
    for labels in lists {
        for (i, s) in sums.iter_mut().enumerate() {
            *s += precision_at_k(labels, i + 1)?;
        }
        n += 1;
    }
    Ok(PrecisionCurve {
        n,
        at: sums.into_iter().map(|s| s / n as f64).collect(),
    })
}
