use super::labels::Agreement;
use super::metrics::Gain;
use crate::rerank::TaskId;
use crate::retrieval::QueryMode;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write;

/// Precision@1..k averaged over a set of queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionCurve {
    pub n: usize,
    /// `at[i]` is Precision@(i+1).
    pub at: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRow {
    pub mode: QueryMode,
    pub all: PrecisionCurve,
    /// Keyed by round count.
    pub by_rounds: BTreeMap<u8, PrecisionCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub k: usize,
    pub n_queries: usize,
    pub preferences: String,
    pub rows: Vec<PrecisionRow>,
}

impl AblationReport {
    pub fn row(&self, mode: QueryMode) -> Option<&PrecisionRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdcgRow {
    pub task: TaskId,
    pub mode: QueryMode,
    /// nDCG@k keyed by k.
    pub at: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub queries: Vec<String>,
    pub rows: Vec<NdcgRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub seed: u64,
    pub gain: Gain,
    pub ranker: String,
    /// Round count -> number of distinct queries.
    pub query_rounds: BTreeMap<u8, usize>,
    pub per_fold: Vec<FoldReport>,
    pub mean: Vec<NdcgRow>,
}

impl CvReport {
    pub fn mean_of(&self, task: TaskId, mode: QueryMode, k: usize) -> Option<f64> {
        self.mean.iter().find(|r| r.task == task && r.mode == mode)?.at.get(&k).copied()
    }
}

/// Published figures for the GPT-3 + Universal Sentence Encoder setup with
/// human labels. Shown for orientation only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub crit_precision: [f64; 3],
    pub pref_precision: [f64; 3],
    pub p1_increase_percent: u32,
    pub kappa_binary: f64,
    pub kappa_graded: f64,
    pub note: String,
}

impl Default for Reference {
    fn default() -> Self {
        Reference {
            crit_precision: [0.256, 0.251, 0.250],
            pref_precision: [0.574, 0.546, 0.525],
            p1_increase_percent: 124,
            kappa_binary: 0.71,
            kappa_graded: 0.73,
            note: "published GPT-3/USE figures over two folds with human labels; \
                   not reproducible with the bundled offline providers"
                .into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ablation: Option<AblationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ndcg: Option<CvReport>,
    #[serde(default)]
    pub kappa: Vec<Agreement>,
    pub reference: Reference,
}

impl EvalReport {
    pub fn empty() -> Self {
        EvalReport {
            ablation: None,
            ndcg: None,
            kappa: Vec::new(),
            reference: Reference::default(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Every reported metric, for range checks.
    pub fn metrics(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if let Some(a) = &self.ablation {
            for r in &a.rows {
                out.extend(&r.all.at);
                r.by_rounds.values().for_each(|c| out.extend(&c.at));
            }
        }
        if let Some(cv) = &self.ndcg {
            for row in cv.per_fold.iter().flat_map(|f| &f.rows).chain(&cv.mean) {
                out.extend(row.at.values());
            }
        }
        out
    }

    /// Plain-text tables: modes x Precision@k, then tasks x modes x nDCG@k.
    pub fn render(&self) -> String {
        let mut s = String::new();
        if let Some(a) = &self.ablation {
            let _ = writeln!(s, "Precision@k ({} queries, preferences: {})", a.n_queries, a.preferences);
            let header: String = (1..=a.k).map(|i| format!("{:>8}", format!("P@{i}"))).collect();
            let _ = writeln!(s, "{:<16}{header}", "model");
            for r in &a.rows {
                let _ = writeln!(s, "{:<16}{}", format!("cos/{}", r.mode.as_str().to_lowercase()), cells(&r.all.at));
            }
            let rounds: Vec<u8> = a.rows.iter().flat_map(|r| r.by_rounds.keys().copied()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
            for n in rounds {
                let count = a.rows.iter().find_map(|r| r.by_rounds.get(&n)).map_or(0, |c| c.n);
                let _ = writeln!(s, "  {n}-round (n={count})");
                for r in &a.rows {
                    if let Some(c) = r.by_rounds.get(&n) {
                        let _ = writeln!(s, "{:<16}{}", format!("  cos/{}", r.mode.as_str().to_lowercase()), cells(&c.at));
                    }
                }
            }
            s.push('\n');
        }
        if let Some(cv) = &self.ndcg {
            let ks: Vec<usize> = cv.mean.first().map(|r| r.at.keys().copied().collect()).unwrap_or_default();
            let _ = writeln!(
                s,
                "nDCG@k ({} folds, seed {}, {} gain, ranker: {})",
                cv.folds,
                cv.seed,
                match cv.gain {
                    Gain::Exponential => "exponential",
                    Gain::Linear => "linear",
                },
                cv.ranker
            );
            let header: String = ks.iter().map(|k| format!("{:>9}", format!("nDCG@{k}"))).collect();
            let _ = writeln!(s, "{:<8}{:<16}{header}", "task", "model");
            for r in &cv.mean {
                let vals: Vec<f64> = r.at.values().copied().collect();
                let _ = writeln!(
                    s,
                    "{:<8}{:<16}{}",
                    r.task.as_str().to_lowercase(),
                    format!("{}/{}", cv.ranker, r.mode.as_str().to_lowercase()),
                    cells9(&vals)
                );
            }
            s.push('\n');
        }
        if !self.kappa.is_empty() {
            let _ = writeln!(s, "Inter-annotator agreement");
            for a in &self.kappa {
                let kind = match a.kind {
                    super::labels::LabelKind::Binary => "binary",
                    super::labels::LabelKind::Grade => "graded",
                };
                let _ = writeln!(s, "  {} vs {} {kind:<7} n={:<5} kappa={:.3}", a.annotators[0], a.annotators[1], a.n, a.kappa);
            }
            s.push('\n');
        }
        let r = &self.reference;
        let _ = writeln!(
            s,
            "Reference: crit P@1..3 {}, pref P@1..3 {} (+{}% P@1); kappa {:.2}/{:.2}. {}.",
            join3(&r.crit_precision),
            join3(&r.pref_precision),
            r.p1_increase_percent,
            r.kappa_binary,
            r.kappa_graded,
            r.note
        );
        s
    }
}

fn cells(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:>8.3}")).collect()
}

fn cells9(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:>9.3}")).collect()
}

fn join3(v: &[f64; 3]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/")
}
