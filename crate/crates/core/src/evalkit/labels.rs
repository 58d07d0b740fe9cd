use super::metrics::cohens_kappa;
use crate::corpus::ArgumentCandidate;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

/// The query side of a label lookup.
#[derive(Debug, Clone, Copy)]
pub struct LabelQuery<'a> {
    pub id: &'a str,
    /// Single-critique ids for a compound; empty for a single.
    pub parts: &'a [String],
}

/// Binary accuracy and graded relevance for (query, candidate) pairs.
pub trait LabelSource: Send + Sync {
    fn binary(&self, query: LabelQuery<'_>, candidate: &ArgumentCandidate) -> Option<bool>;
    fn grade(&self, query: LabelQuery<'_>, candidate: &ArgumentCandidate) -> Option<u8>;
}

/// One line of a labels file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub query_id: String,
    pub candidate_id: String,
    pub annotator: String,
    #[serde(default)]
    pub binary: Option<bool>,
    #[serde(default)]
    pub grade: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Binary,
    Grade,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub annotators: [String; 2],
    pub kind: LabelKind,
    /// Pairs both annotators labeled.
    pub n: usize,
    pub kappa: f64,
}

type PairKey = (String, String);

/// File-backed labels keyed by (query, candidate, annotator).
///
/// Lookups resolve to the primary annotator, which defaults to the
/// lexicographically first annotator that labeled the pair.
/// (binary, grade) given by one annotator.
type Judgement = (Option<bool>, Option<u8>);

#[derive(Debug, Clone, Default)]
pub struct FileLabels {
    labels: BTreeMap<PairKey, BTreeMap<String, Judgement>>,
    primary: Option<String>,
}

impl FileLabels {
    pub fn from_records(records: impl IntoIterator<Item = LabelRecord>) -> Result<Self, String> {
        let mut labels: BTreeMap<PairKey, BTreeMap<String, _>> = BTreeMap::new();
        for r in records {
            if let Some(g) = r.grade {
                if !(1..=3).contains(&g) {
                    return Err(format!("{}/{}: grade {g} outside 1..=3", r.query_id, r.candidate_id));
                }
            }
            labels
                .entry((r.query_id, r.candidate_id))
                .or_default()
                .insert(r.annotator, (r.binary, r.grade));
        }
        Ok(FileLabels { labels, primary: None })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, String> {
        let records: Vec<LabelRecord> = crate::jsonl::read(path).map_err(|e| e.to_string())?;
        Self::from_records(records)
    }

    pub fn with_primary(mut self, annotator: impl Into<String>) -> Self {
        self.primary = Some(annotator.into());
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn annotators(&self) -> BTreeSet<&str> {
        self.labels.values().flat_map(|m| m.keys().map(String::as_str)).collect()
    }

    fn lookup<T>(&self, query_id: &str, candidate_id: &str, pick: impl Fn(&(Option<bool>, Option<u8>)) -> Option<T>) -> Option<T> {
        let by_annotator = self.labels.get(&(query_id.to_string(), candidate_id.to_string()))?;
        if let Some(p) = &self.primary {
            return by_annotator.get(p).and_then(&pick);
        }
        by_annotator.values().find_map(pick)
    }

    /// Cohen's kappa for every annotator pair, per label kind, over the
    /// (query, candidate) pairs both annotators labeled.
    pub fn agreement(&self) -> Vec<Agreement> {
        let annotators: Vec<&str> = self.annotators().into_iter().collect();
        let mut out = Vec::new();
        for (i, a) in annotators.iter().enumerate() {
            for b in &annotators[i + 1..] {
                for kind in [LabelKind::Binary, LabelKind::Grade] {
                    let mut xs = Vec::new();
                    let mut ys = Vec::new();
                    for m in self.labels.values() {
                        let (Some(x), Some(y)) = (m.get(*a), m.get(*b)) else { continue };
                        let pair = match kind {
                            LabelKind::Binary => x.0.zip(y.0).map(|(x, y)| (u8::from(x), u8::from(y))),
                            LabelKind::Grade => x.1.zip(y.1),
                        };
                        if let Some((x, y)) = pair {
                            xs.push(x);
                            ys.push(y);
                        }
                    }
                    if let Ok(kappa) = cohens_kappa(&xs, &ys) {
                        out.push(Agreement {
                            annotators: [a.to_string(), b.to_string()],
                            kind,
                            n: xs.len(),
                            kappa,
                        });
                    }
                }
            }
        }
        out
    }
}

impl LabelSource for FileLabels {
    fn binary(&self, query: LabelQuery<'_>, candidate: &ArgumentCandidate) -> Option<bool> {
        self.lookup(query.id, &candidate.id, |l| l.0)
    }

    fn grade(&self, query: LabelQuery<'_>, candidate: &ArgumentCandidate) -> Option<u8> {
        self.lookup(query.id, &candidate.id, |l| l.1)
    }
}

/// Deterministic judge over hand-assigned aspects.
///
/// Each critique id names the aspects a satisfying argument must speak to,
/// and each argument sentence lists the aspects it speaks to. An argument is
/// accurate when the sets intersect. Grades: 3 on intersection, 2 when some
/// aspect shares a category, 1 otherwise. A compound's aspects are the union
/// over its parts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AspectJudge {
    /// Argument sentence -> aspects.
    pub sentences: BTreeMap<String, BTreeSet<String>>,
    /// Critique id -> wanted aspects.
    pub queries: BTreeMap<String, BTreeSet<String>>,
    /// Aspect -> category.
    #[serde(default)]
    pub categories: BTreeMap<String, String>,
}

impl AspectJudge {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, String> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn wanted(&self, query: LabelQuery<'_>) -> Option<BTreeSet<&str>> {
        if let Some(w) = self.queries.get(query.id) {
            return Some(w.iter().map(String::as_str).collect());
        }
        if query.parts.is_empty() {
            return None;
        }
        let mut all = BTreeSet::new();
        for p in query.parts {
            all.extend(self.queries.get(p)?.iter().map(String::as_str));
        }
        Some(all)
    }

    fn judge(&self, query: LabelQuery<'_>, sentence: &str) -> Option<u8> {
        let wanted = self.wanted(query)?;
        let has = self.sentences.get(sentence)?;
        if has.iter().any(|a| wanted.contains(a.as_str())) {
            return Some(3);
        }
        let cats: BTreeSet<&str> = wanted.iter().filter_map(|a| self.categories.get(*a)).map(String::as_str).collect();
        let near = has.iter().filter_map(|a| self.categories.get(a)).any(|c| cats.contains(c.as_str()));
        Some(if near { 2 } else { 1 })
    }
}

impl LabelSource for AspectJudge {
    fn binary(&self, query: LabelQuery<'_>, candidate: &ArgumentCandidate) -> Option<bool> {
        self.judge(query, &candidate.sentence).map(|g| g == 3)
    }

    fn grade(&self, query: LabelQuery<'_>, candidate: &ArgumentCandidate) -> Option<u8> {
        self.judge(query, &candidate.sentence)
    }
}

/// Asks each source in turn and keeps the first answer.
#[derive(Default)]
pub struct Layered(pub Vec<Box<dyn LabelSource>>);

impl Layered {
    pub fn push(mut self, source: impl LabelSource + 'static) -> Self {
        self.0.push(Box::new(source));
        self
    }
}

impl LabelSource for Layered {
    fn binary(&self, query: LabelQuery<'_>, candidate: &ArgumentCandidate) -> Option<bool> {
        self.0.iter().find_map(|s| s.binary(query, candidate))
    }

    fn grade(&self, query: LabelQuery<'_>, candidate: &ArgumentCandidate) -> Option<u8> {
        self.0.iter().find_map(|s| s.grade(query, candidate))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(id: &str, sentence: &str) -> ArgumentCandidate {
        ArgumentCandidate {
            id: id.into(),
            restaurant_id: "r".into(),
            sentence: sentence.into(),
            positivity: 1.0,
            embedding: None,
        }
    }

    fn rec(q: &str, c: &str, who: &str, binary: bool, grade: u8) -> LabelRecord {
        LabelRecord {
            query_id: q.into(),
            candidate_id: c.into(),
            annotator: who.into(),
            binary: Some(binary),
            grade: Some(grade),
        }
    }

    #[test]
    fn file_labels_primary_and_kappa() {
        let labels = FileLabels::from_records([
            rec("q1", "a", "bob", true, 3),
            rec("q1", "a", "ann", false, 2),
            rec("q1", "b", "ann", true, 3),
            rec("q1", "b", "bob", true, 3),
            rec("q2", "a", "ann", false, 1),
            rec("q2", "a", "bob", false, 1),
        ])
        .unwrap();
        let q = LabelQuery { id: "q1", parts: &[] };
        assert_eq!(labels.binary(q, &cand("a", "")), Some(false));
        assert_eq!(labels.clone().with_primary("bob").grade(q, &cand("a", "")), Some(3));
        assert_eq!(labels.grade(LabelQuery { id: "q9", parts: &[] }, &cand("a", "")), None);
        let agree = labels.agreement();
        assert_eq!(agree.len(), 2);
        assert_eq!(agree[0].kind, LabelKind::Binary);
        assert_eq!(agree[0].n, 3);
        // ann [0,1,0] vs bob [1,1,0]
        let want = cohens_kappa(&[0, 1, 0], &[1, 1, 0]).unwrap();
        assert_eq!(agree[0].kappa, want);
    }

    #[test]
    fn layered_falls_through() {
        let file = FileLabels::from_records([rec("q1", "a", "ann", false, 1)]).unwrap();
        let judge: AspectJudge = serde_json::from_value(serde_json::json!({
            "sentences": {"x": ["beef"]},
            "queries": {"q1": ["beef"]}
        }))
        .unwrap();
        let layered = Layered::default().push(file).push(judge);
        let q = LabelQuery { id: "q1", parts: &[] };
        assert_eq!(layered.grade(q, &cand("a", "x")), Some(1));
        assert_eq!(layered.grade(q, &cand("b", "x")), Some(3));
        assert_eq!(layered.binary(q, &cand("c", "y")), None);
    }

    #[test]
    fn file_labels_reject_bad_grades() {
        assert!(FileLabels::from_records([rec("q", "c", "a", true, 4)]).is_err());
    }

    #[test]
    fn aspect_judge_grades() {
        let judge: AspectJudge = serde_json::from_value(serde_json::json!({
            "sentences": {
                "Great steak!": ["beef"],
                "Cozy and romantic.": ["romantic"],
                "Fresh oysters.": ["seafood"]
            },
            "queries": {"s1": ["beef", "chicken"], "s2": ["romantic"]},
            "categories": {"beef": "food", "chicken": "food", "seafood": "food", "romantic": "atmosphere"}
        }))
        .unwrap();
        let s1 = LabelQuery { id: "s1", parts: &[] };
        assert_eq!(judge.grade(s1, &cand("x", "Great steak!")), Some(3));
        assert_eq!(judge.grade(s1, &cand("x", "Fresh oysters.")), Some(2));
        assert_eq!(judge.grade(s1, &cand("x", "Cozy and romantic.")), Some(1));
        assert_eq!(judge.binary(s1, &cand("x", "Fresh oysters.")), Some(false));
        assert_eq!(judge.grade(s1, &cand("x", "Unknown.")), None);
        let parts = vec!["s1".to_string(), "s2".to_string()];
        let pair = LabelQuery { id: "pair-0001", parts: &parts };
        assert_eq!(judge.binary(pair, &cand("x", "Cozy and romantic.")), Some(true));
        assert_eq!(judge.binary(pair, &cand("x", "Great steak!")), Some(true));
    }
}
