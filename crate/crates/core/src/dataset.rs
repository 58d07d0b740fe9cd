//! Critique datasets and seeded multi-round compound generation.
//!
//! Single critiques are combined into two- and three-round compounds by
//! sampling distinct singles with a ChaCha8 stream; a sample is redrawn
//! whenever any two of its parts trip a [`ContradictionRule`]. Compound
//! critique and preference texts are [`compound_statement`]s of the parts.

use crate::interpreter::compound_statement;
use crate::text::words;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CritiqueSource {
    UserStudy,
    Adapted,
    Synth,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CritiqueRecord {
    pub id: String,
    pub critique: String,
    pub preference: String,
    pub rounds: u8,
    /// Ids of the single critiques a compound is made of; empty for singles.
    #[serde(default)]
    pub parts: Vec<String>,
    pub source: CritiqueSource,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{origin}:{line}: {message}")]
    Invalid { origin: String, line: usize, message: String },
    #[error(transparent)]
    Jsonl(#[from] crate::jsonl::JsonlError),
    #[error("csv: {0}")]
    Csv(String),
    #[error("need at least {needed} single critiques, have {have}")]
    TooFewSingles { needed: usize, have: usize },
    #[error("could not draw a contradiction-free {kind} within {attempts} attempts")]
    Budget { kind: &'static str, attempts: usize },
    #[error("{0}")]
    Rules(String),
}

impl CritiqueRecord {
    pub fn single(id: impl Into<String>, critique: impl Into<String>, preference: impl Into<String>, source: CritiqueSource) -> Self {
        CritiqueRecord {
            id: id.into(),
            critique: critique.into(),
            preference: preference.into(),
            rounds: 1,
            parts: Vec::new(),
            source,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.critique.trim().is_empty() {
            return Err(format!("{}: empty critique", self.id));
        }
        if self.preference.trim().is_empty() {
            return Err(format!("{}: empty preference", self.id));
        }
        if !(1..=3).contains(&self.rounds) {
            return Err(format!("{}: rounds {} not in 1..=3", self.id, self.rounds));
        }
        let expect = self.parts.len().max(1);
        if usize::from(self.rounds) != expect {
            return Err(format!("{}: rounds {} but {} parts", self.id, self.rounds, self.parts.len()));
        }
        Ok(())
    }
}

/// Counts of records by round number.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundCounts {
    pub single: usize,
    pub pairs: usize,
    pub triples: usize,
}

impl RoundCounts {
    pub fn of(records: &[CritiqueRecord]) -> Self {
        let mut c = RoundCounts::default();
        for r in records {
            match r.rounds {
                1 => c.single += 1,
                2 => c.pairs += 1,
                _ => c.triples += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.single + self.pairs + self.triples
    }
}

/// Checks per-record invariants and, for compounds whose parts are present
/// in the same set, that the texts compose exactly.
pub fn validate_records(records: &[CritiqueRecord], origin: &str) -> Result<(), DatasetError> {
    let by_id: HashMap<&str, &CritiqueRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    for (i, r) in records.iter().enumerate() {
        let invalid = |message: String| DatasetError::Invalid {
            origin: origin.to_string(),
            line: i + 1,
            message,
        };
        r.validate().map_err(invalid)?;
        let parts: Option<Vec<&CritiqueRecord>> = r.parts.iter().map(|p| by_id.get(p.as_str()).copied()).collect();
        if let Some(parts) = parts.filter(|p| !p.is_empty()) {
            let crit: Vec<&str> = parts.iter().map(|p| p.critique.as_str()).collect();
            if compound_statement(&crit) != r.critique {
                return Err(invalid(format!("{}: critique is not the compound of its parts", r.id)));
            }
            let pref: Vec<&str> = parts.iter().map(|p| p.preference.as_str()).collect();
            if compound_statement(&pref) != r.preference {
                return Err(invalid(format!("{}: preference is not the compound of its parts", r.id)));
            }
        }
    }
    Ok(())
}

/// Reads a JSONL dataset and enforces record invariants.
pub fn load_critiques(path: impl AsRef<Path>) -> Result<Vec<CritiqueRecord>, DatasetError> {
    let path = path.as_ref();
    let records: Vec<CritiqueRecord> = crate::jsonl::read(path)?;
    validate_records(&records, &path.display().to_string())?;
    Ok(records)
}

pub fn parse_critiques(text: &str, origin: &str) -> Result<Vec<CritiqueRecord>, DatasetError> {
    let records: Vec<CritiqueRecord> = crate::jsonl::parse_str(text, origin)?;
    validate_records(&records, origin)?;
    Ok(records)
}

/// Imports a CSV with `critique` and `preference` columns, plus optional
/// `id`, `rounds` and `source`. Multi-round rows are resolved into parts by
/// matching their sentences against the single-round rows of the same file.
pub fn convert_csv(text: &str) -> Result<Vec<CritiqueRecord>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| DatasetError::Csv(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let (Some(ci), Some(pi)) = (col("critique"), col("preference")) else {
        return Err(DatasetError::Csv("header must contain critique and preference columns".into()));
    };
    let (id_col, rounds_col, source_col) = (col("id"), col("rounds"), col("source"));

    let mut rows = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let line = n + 2;
        let row = row.map_err(|e| DatasetError::Csv(format!("line {line}: {e}")))?;
        let get = |i: Option<usize>| i.and_then(|i| row.get(i)).map(str::trim).filter(|s| !s.is_empty());
        let rounds: u8 = match get(rounds_col) {
            Some(r) => r.parse().map_err(|_| DatasetError::Csv(format!("line {line}: bad rounds {r:?}")))?,
            None => 1,
        };
        let source = match get(source_col).map(str::to_ascii_uppercase).as_deref() {
            None | Some("ADAPTED") | Some("CIRCA") => CritiqueSource::Adapted,
            Some("USER_STUDY") | Some("USER STUDY") => CritiqueSource::UserStudy,
            Some("SYNTH") => CritiqueSource::Synth,
            Some(other) => return Err(DatasetError::Csv(format!("line {line}: unknown source {other:?}"))),
        };
        rows.push((line, get(id_col).map(String::from), get(Some(ci)).unwrap_or("").to_string(), get(Some(pi)).unwrap_or("").to_string(), rounds, source));
    }

    let mut out: Vec<CritiqueRecord> = Vec::with_capacity(rows.len());
    let mut single_by_text: HashMap<String, String> = HashMap::new();
    for (line, id, critique, preference, rounds, source) in rows.iter().cloned() {
        let id = id.unwrap_or_else(|| format!("c{:04}", line - 1));
        if rounds == 1 {
            single_by_text.insert(compound_statement(&[critique.as_str()]), id.clone());
        }
        out.push(CritiqueRecord {
            id,
            critique,
            preference,
            rounds,
            parts: Vec::new(),
            source,
        });
    }
    for (rec, (line, ..)) in out.iter_mut().zip(&rows) {
        if rec.rounds > 1 {
            rec.parts = resolve_parts(&rec.critique, usize::from(rec.rounds), &single_by_text).ok_or_else(|| {
                DatasetError::Csv(format!("line {line}: cannot resolve {}-round critique into singles", rec.rounds))
            })?;
        }
    }
    validate_records(&out, "csv")?;
    Ok(out)
}

/// Splits a compound into `n` consecutive single critiques by trying every
/// cut of its sentence sequence.
fn resolve_parts(compound: &str, n: usize, singles: &HashMap<String, String>) -> Option<Vec<String>> {
    let sentences = crate::corpus::segment_sentences(compound);
    fn go(s: &[String], n: usize, singles: &HashMap<String, String>) -> Option<Vec<String>> {
        if n == 0 {
            return s.is_empty().then(Vec::new);
        }
        for cut in 1..=s.len() {
            let head = compound_statement(&s[..cut]);
            if let Some(id) = singles.get(&head) {
                if let Some(mut rest) = go(&s[cut..], n - 1, singles) {
                    rest.insert(0, id.clone());
                    return Some(rest);
                }
            }
        }
        None
    }
    go(&sentences, n, singles)
}

/// Keyword rule: a critique matching `a` must not be combined with one
/// matching `b`. Keywords are whole words or word sequences, case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContradictionRule {
    pub a: Vec<String>,
    pub b: Vec<String>,
    #[serde(default)]
    pub note: String,
}

fn matches_any(tokens: &[String], keywords: &[String]) -> bool {
    keywords.iter().any(|k| {
        let kw = words(k);
        !kw.is_empty() && tokens.windows(kw.len()).any(|w| w == kw.as_slice())
    })
}

impl ContradictionRule {
    pub fn applies(&self, c1: &str, c2: &str) -> bool {
        let (t1, t2) = (words(c1), words(c2));
        (matches_any(&t1, &self.a) && matches_any(&t2, &self.b)) || (matches_any(&t2, &self.a) && matches_any(&t1, &self.b))
    }
}

const DEFAULT_RULES: &str = include_str!("../data/contradiction_rules.jsonl");

pub fn default_rules() -> Vec<ContradictionRule> {
    crate::jsonl::parse_str(DEFAULT_RULES, "contradiction_rules.jsonl").expect("bundled rules parse")
}

pub fn load_rules(path: impl AsRef<Path>) -> Result<Vec<ContradictionRule>, DatasetError> {
    let rules: Vec<ContradictionRule> = crate::jsonl::read(path)?;
    for (i, r) in rules.iter().enumerate() {
        if r.a.is_empty() || r.b.is_empty() {
            return Err(DatasetError::Rules(format!("rule {}: both sides need keywords", i + 1)));
        }
    }
    Ok(rules)
}

/// True iff some rule matches the pair in either order.
pub fn detect_contradiction(c1: &CritiqueRecord, c2: &CritiqueRecord, rules: &[ContradictionRule]) -> bool {
    rules.iter().any(|r| r.applies(&c1.critique, &c2.critique))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationSpec {
    pub n_pairs: usize,
    pub n_triples: usize,
    pub seed: u64,
    /// Redraws allowed per compound before giving up.
    pub max_attempts: usize,
}

impl GenerationSpec {
    pub fn new(n_pairs: usize, n_triples: usize, seed: u64) -> Self {
        GenerationSpec {
            n_pairs,
            n_triples,
            seed,
            max_attempts: 10_000,
        }
    }
}

/// Draws `n_pairs` two-round and `n_triples` three-round compounds.
///
/// Parts within a compound are distinct singles; the same single may appear
/// in many compounds. Output is a pure function of the inputs and seed.
pub fn generate_compounds(
    singles: &[CritiqueRecord],
    rules: &[ContradictionRule],
    spec: &GenerationSpec,
) -> Result<Vec<CritiqueRecord>, DatasetError> {
    if spec.n_pairs + spec.n_triples == 0 {
        return Ok(Vec::new());
    }
    let singles: Vec<&CritiqueRecord> = singles.iter().filter(|s| s.rounds == 1).collect();
    if singles.len() < 3 {
        return Err(DatasetError::TooFewSingles {
            needed: 3,
            have: singles.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.n_pairs + spec.n_triples);
    for (size, count, kind) in [(2usize, spec.n_pairs, "pair"), (3, spec.n_triples, "triple")] {
        for n in 1..=count {
            let mut drawn = None;
            for _ in 0..spec.max_attempts {
                let picks: Vec<&CritiqueRecord> = sample(&mut rng, singles.len(), size).into_iter().map(|i| singles[i]).collect();
                let clash = (0..size).any(|i| (i + 1..size).any(|j| detect_contradiction(picks[i], picks[j], rules)));
                if !clash {
                    drawn = Some(picks);
                    break;
                }
            }
            let parts = drawn.ok_or(DatasetError::Budget {
                kind,
                attempts: spec.max_attempts,
            })?;
            out.push(compose(format!("{kind}-{n:04}"), &parts));
        }
    }
    Ok(out)
}

fn compose(id: String, parts: &[&CritiqueRecord]) -> CritiqueRecord {
    let crit: Vec<&str> = parts.iter().map(|p| p.critique.as_str()).collect();
    let pref: Vec<&str> = parts.iter().map(|p| p.preference.as_str()).collect();
    CritiqueRecord {
        id,
        critique: compound_statement(&crit),
        preference: compound_statement(&pref),
        rounds: parts.len() as u8,
        parts: parts.iter().map(|p| p.id.clone()).collect(),
        source: CritiqueSource::Synth,
    }
}

/// Every compound whose parts (looked up in `singles`) contain a rule
/// violation. Empty for a clean dataset.
pub fn scan_violations<'a>(
    compounds: &'a [CritiqueRecord],
    singles: &[CritiqueRecord],
    rules: &[ContradictionRule],
) -> Vec<&'a CritiqueRecord> {
    let by_id: BTreeMap<&str, &CritiqueRecord> = singles.iter().map(|s| (s.id.as_str(), s)).collect();
    compounds
        .iter()
        .filter(|c| {
            let parts: Vec<&CritiqueRecord> = c.parts.iter().filter_map(|p| by_id.get(p.as_str()).copied()).collect();
            (0..parts.len()).any(|i| (i + 1..parts.len()).any(|j| detect_contradiction(parts[i], parts[j], rules)))
        })
        .collect()
}
