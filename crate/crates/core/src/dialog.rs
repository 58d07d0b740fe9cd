//! Multi-round critique sessions.
//!
//! Each round appends a critique. PREF sessions interpret it and search with
//! the compound of all preferences so far; CRIT sessions search with the
//! compound of the critiques. Earlier recommendations play no part in later
//! rounds unless `exclude_shown` is set.

use crate::corpus::Restaurant;
use crate::interpreter::{compound_statement, InterpretError, Interpreter};
use crate::retrieval::{CandidateIndex, EmbeddingProvider, Query, QueryMode, RetrievalError, ScoredArgument, SearchOptions};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

pub const DEFAULT_ALTERNATIVES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SessionMode {
    Pref,
    Crit,
}

impl SessionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionMode::Pref => "PREF",
            SessionMode::Crit => "CRIT",
        }
    }

    pub fn query_mode(self) -> QueryMode {
        match self {
            SessionMode::Pref => QueryMode::Pref,
            SessionMode::Crit => QueryMode::Crit,
        }
    }
}

impl std::str::FromStr for SessionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PREF" => Ok(SessionMode::Pref),
            "CRIT" => Ok(SessionMode::Crit),
            other => Err(format!("unknown session mode {other:?}; expected PREF or CRIT")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    /// 1-based.
    pub index: usize,
    pub critique: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preference: Option<String>,
    /// What was searched: the compound of all preferences (PREF) or critiques (CRIT).
    pub statement: String,
    pub recommendation: Restaurant,
    pub argument: ScoredArgument,
    pub alternatives: Vec<ScoredArgument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub mode: SessionMode,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    pub rounds: Vec<Round>,
}

impl Session {
    /// Statement the next round would extend.
    pub fn parts(&self) -> Vec<&str> {
        self.rounds
            .iter()
            .map(|r| match self.mode {
                SessionMode::Pref => r.preference.as_deref().unwrap_or_default(),
                SessionMode::Crit => r.critique.as_str(),
            })
            .collect()
    }
}

/// One journal line per round, carrying the session header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub session_id: String,
    pub mode: SessionMode,
    pub created_at: u64,
    #[serde(flatten)]
    pub round: Round,
}

#[derive(Debug, thiserror::Error)]
pub enum DialogError {
    #[error("no session {0}")]
    NotFound(String),
    #[error("critique is empty")]
    EmptyCritique,
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Interpret(#[from] InterpretError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("journal: {0}")]
    Journal(String),
}

impl DialogError {
    pub fn retriable(&self) -> bool {
        match self {
            DialogError::Interpret(e) => e.retriable(),
            DialogError::Retrieval(e) => e.retriable(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DialogConfig {
    /// Experimental: never recommend a restaurant already shown in this session.
    pub exclude_shown: bool,
    pub journal_dir: Option<PathBuf>,
}

#[allow(clippy::derivable_impls)]
impl Default for DialogConfig {
    fn default() -> Self {
        DialogConfig {
            exclude_shown: false,
            journal_dir: None,
        }
    }
}

type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

/// Shared, read-only index; per-session locking.
pub struct SessionEngine {
    index: Arc<CandidateIndex>,
    embedder: Arc<dyn EmbeddingProvider>,
    interpreter: Arc<Interpreter>,
    config: DialogConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
    clock: Clock,
}

fn wall_clock() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn session_id(n: u64) -> String {
    format!("s{n:06}")
}

impl SessionEngine {
    pub fn new(index: Arc<CandidateIndex>, embedder: Arc<dyn EmbeddingProvider>, interpreter: Arc<Interpreter>) -> Self {
        SessionEngine {
            index,
            embedder,
            interpreter,
            config: DialogConfig::default(),
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            clock: Arc::new(wall_clock),
        }
    }

    /// With a journal directory, sessions journaled there earlier are restored.
    pub fn with_config(mut self, config: DialogConfig) -> Result<Self, DialogError> {
        if let Some(dir) = &config.journal_dir {
            std::fs::create_dir_all(dir).map_err(|e| DialogError::Journal(format!("{}: {e}", dir.display())))?;
            let mut max = 0;
            let mut restored = HashMap::new();
            let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| DialogError::Journal(e.to_string()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            entries.sort();
            for path in entries {
                let s = replay(&path)?;
                if let Some(n) = s.id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                    max = max.max(n);
                }
                restored.insert(s.id.clone(), Arc::new(Mutex::new(s)));
            }
            self.sessions = Mutex::new(restored);
            self.next_id = AtomicU64::new(max + 1);
        }
        self.config = config;
        Ok(self)
    }

    pub fn with_clock(mut self, clock: impl Fn() -> u64 + Send + Sync + 'static) -> Self {
        self.clock = Arc::new(clock);
        self
    }

    pub fn index(&self) -> &Arc<CandidateIndex> {
        &self.index
    }

    pub fn start_session(&self, mode: SessionMode) -> Session {
        let id = session_id(self.next_id.fetch_add(1, Ordering::SeqCst));
        let session = Session {
            id: id.clone(),
            mode,
            created_at: (self.clock)(),
            rounds: Vec::new(),
        };
        self.sessions.lock().unwrap().insert(id, Arc::new(Mutex::new(session.clone())));
        session
    }

    pub fn session(&self, id: &str) -> Option<Session> {
        let s = self.sessions.lock().unwrap().get(id).cloned()?;
        let s = s.lock().unwrap().clone();
        Some(s)
    }

    /// Runs one round. On any failure the session is left as it was.
    pub fn critique_round(&self, session_id: &str, critique: &str, k: usize) -> Result<Round, DialogError> {
        let critique = critique.trim();
        if critique.is_empty() {
            return Err(DialogError::EmptyCritique);
        }
        if k == 0 {
            return Err(DialogError::ZeroK);
        }
        let slot = self
            .sessions
            .lock()
            .unwrap()
            .get(session_id)
            .cloned()
            .ok_or_else(|| DialogError::NotFound(session_id.to_string()))?;
        let mut session = slot.lock().unwrap();

        let preference = match session.mode {
            SessionMode::Pref => Some(self.interpreter.transform(critique)?.preference),
            SessionMode::Crit => None,
        };
        let mut parts: Vec<&str> = session.parts();
        parts.push(preference.as_deref().unwrap_or(critique));
        let statement = compound_statement(&parts);

        let opts = SearchOptions {
            dedup_restaurants: false,
            exclude_restaurants: if self.config.exclude_shown {
                session.rounds.iter().map(|r| r.recommendation.id.clone()).collect()
            } else {
                BTreeSet::new()
            },
        };
        let query = Query::statement(session.mode.query_mode(), statement.clone());
        let alternatives = self.index.search_with(&query, self.embedder.as_ref(), k, &opts)?;
        let argument = alternatives.first().cloned().ok_or(RetrievalError::EmptyIndex)?;
        let recommendation = self
            .index
            .restaurant(&argument.candidate.restaurant_id)
            .cloned()
            .ok_or_else(|| RetrievalError::UnknownRestaurant {
                candidate: argument.candidate.id.clone(),
                restaurant: argument.candidate.restaurant_id.clone(),
            })?;
        let round = Round {
            index: session.rounds.len() + 1,
            critique: critique.to_string(),
            preference,
            statement,
            recommendation,
            argument,
            alternatives,
        };
        if let Some(dir) = &self.config.journal_dir {
            let entry = JournalEntry {
                session_id: session.id.clone(),
                mode: session.mode,
                created_at: session.created_at,
                round: round.clone(),
            };
            crate::jsonl::append(dir.join(format!("{}.jsonl", session.id)), &entry).map_err(|e| DialogError::Journal(e.to_string()))?;
        }
        session.rounds.push(round.clone());
        Ok(round)
    }
}

/// Rebuilds a session from its journal without calling any provider.
pub fn replay(path: impl AsRef<Path>) -> Result<Session, DialogError> {
    let path = path.as_ref();
    let entries: Vec<JournalEntry> = crate::jsonl::read(path).map_err(|e| DialogError::Journal(e.to_string()))?;
    let first = entries
        .first()
        .ok_or_else(|| DialogError::Journal(format!("{}: empty journal", path.display())))?;
    let mut session = Session {
        id: first.session_id.clone(),
        mode: first.mode,
        created_at: first.created_at,
        rounds: Vec::new(),
    };
    for e in entries {
        if e.session_id != session.id || e.mode != session.mode || e.round.index != session.rounds.len() + 1 {
            return Err(DialogError::Journal(format!(
                "{}: round {} does not continue session {}",
                path.display(),
                e.round.index,
                session.id
            )));
        }
        session.rounds.push(e.round);
    }
    Ok(session)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ArgumentCandidate;
    use crate::exec::Execution;
    use crate::interpreter::{CompletionRule, ProviderError, RuleTableProvider};
    use crate::interpreter::{CompletionProvider, GenerationConfig};
    use crate::retrieval::HashBagEmbedder;

    fn cand(id: &str, restaurant: &str, sentence: &str) -> ArgumentCandidate {
        ArgumentCandidate {
            id: id.into(),
            restaurant_id: restaurant.into(),
            sentence: sentence.into(),
            positivity: 1.0,
            embedding: None,
        }
    }

    fn index() -> Arc<CandidateIndex> {
        let cands = vec![
            cand("a#0", "r1", "Perfect for a romantic dinner."),
            cand("b#0", "r2", "Quiet and romantic, great beef."),
            cand("c#0", "r3", "The band was loud and fun."),
            cand("d#0", "r3", "Great beef and chicken platter."),
        ];
        let rs = ["r1", "r2", "r3"].map(|id| Restaurant {
            id: id.into(),
            name: format!("Place {id}"),
            metadata: Default::default(),
        });
        Arc::new(CandidateIndex::build(cands, rs, &HashBagEmbedder::default(), Execution::default()).unwrap())
    }

    fn interpreter() -> Arc<Interpreter> {
        let rules = vec![
            CompletionRule {
                pattern: "date".into(),
                completion: " a more romantic place.".into(),
            },
            CompletionRule {
                pattern: "seafood".into(),
                completion: " beef or chicken.".into(),
            },
            CompletionRule {
                pattern: "band".into(),
                completion: " a more quiet place.".into(),
            },
        ];
        Arc::new(Interpreter::new(Arc::new(RuleTableProvider::new(rules))))
    }

    fn engine() -> SessionEngine {
        SessionEngine::new(index(), Arc::new(HashBagEmbedder::default()), interpreter()).with_clock(|| 42)
    }

    #[test]
    fn first_round_restates_and_recommends() {
        let e = engine();
        let s = e.start_session(SessionMode::Pref);
        assert!(s.rounds.is_empty());
        let r = e.critique_round(&s.id, "It doesn't look good for a date", 3).unwrap();
        assert_eq!(r.preference.as_deref(), Some("I prefer a more romantic place."));
        assert_eq!(r.statement, "I prefer a more romantic place.");
        assert_eq!(r.argument.candidate.restaurant_id, r.recommendation.id);
        assert_eq!(r.alternatives.len(), 3);
        assert_eq!(r.alternatives[0], r.argument);
    }

    #[test]
    fn statements_compound_across_rounds() {
        let e = engine();
        let s = e.start_session(SessionMode::Pref);
        let inputs = ["It doesn't look good for a date", "I don't really like seafood.", "It has a freaking band!"];
        let mut prefs = Vec::new();
        for (i, c) in inputs.iter().enumerate() {
            let r = e.critique_round(&s.id, c, 2).unwrap();
            prefs.push(r.preference.clone().unwrap());
            assert_eq!(r.index, i + 1);
            assert_eq!(r.statement, compound_statement(&prefs));
        }
        assert_eq!(e.session(&s.id).unwrap().rounds.len(), 3);
    }

    #[test]
    fn crit_sessions_match_crit_retrieval() {
        let e = engine();
        let s = e.start_session(SessionMode::Crit);
        e.critique_round(&s.id, "It doesn't look good for a date", 3).unwrap();
        let r = e.critique_round(&s.id, "I don't really like seafood.", 3).unwrap();
        assert_eq!(r.preference, None);
        let compound = compound_statement(&["It doesn't look good for a date", "I don't really like seafood."]);
        assert_eq!(r.statement, compound);
        let direct = e.index().search(&Query::crit(compound).unwrap(), &HashBagEmbedder::default(), 3).unwrap();
        assert_eq!(r.alternatives, direct);
        let json = serde_json::to_value(&r).unwrap();
        assert!(json.get("preference").is_none());
    }

    #[test]
    fn ids_are_distinct() {
        let e = engine();
        let a = e.start_session(SessionMode::Pref);
        let b = e.start_session(SessionMode::Pref);
        assert_ne!(a.id, b.id);
        assert_eq!(a.created_at, 42);
    }

    struct Down;
    impl CompletionProvider for Down {
        fn complete(&self, _: &str, _: &GenerationConfig) -> Result<Vec<String>, ProviderError> {
            Err(ProviderError::Http(crate::http::HttpFailure {
                endpoint: "http://x".into(),
                status: Some(503),
                message: "down".into(),
            }))
        }
    }

    #[test]
    fn failed_round_leaves_session_unchanged() {
        let e = SessionEngine::new(index(), Arc::new(HashBagEmbedder::default()), Arc::new(Interpreter::new(Arc::new(Down))));
        let s = e.start_session(SessionMode::Pref);
        let err = e.critique_round(&s.id, "Too loud", 3).unwrap_err();
        assert!(err.retriable());
        assert!(e.session(&s.id).unwrap().rounds.is_empty());
        assert!(matches!(e.critique_round(&s.id, "  ", 3), Err(DialogError::EmptyCritique)));
        assert!(matches!(e.critique_round("nope", "x", 3), Err(DialogError::NotFound(_))));
    }

    #[test]
    fn exclude_shown_skips_earlier_restaurants() {
        let dir_less = engine().with_config(DialogConfig {
            exclude_shown: true,
            journal_dir: None,
        });
        let e = dir_less.unwrap();
        let s = e.start_session(SessionMode::Pref);
        let a = e.critique_round(&s.id, "Not good for a date", 1).unwrap();
        let b = e.critique_round(&s.id, "Not good for a date", 1).unwrap();
        assert_ne!(a.recommendation.id, b.recommendation.id);
        // default: same statement, same restaurant
        let e = engine();
        let s = e.start_session(SessionMode::Pref);
        let a = e.critique_round(&s.id, "Not good for a date", 1).unwrap();
        let b = e.critique_round(&s.id, "Not good for a date", 1).unwrap();
        assert_eq!(a.recommendation.id, b.recommendation.id);
    }

    #[test]
    fn journal_replays_and_restores() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = DialogConfig {
            exclude_shown: false,
            journal_dir: Some(dir.path().to_path_buf()),
        };
        let e = engine().with_config(cfg.clone()).unwrap();
        let s = e.start_session(SessionMode::Pref);
        e.critique_round(&s.id, "It doesn't look good for a date", 2).unwrap();
        e.critique_round(&s.id, "It has a freaking band!", 2).unwrap();
        let live = e.session(&s.id).unwrap();
        let replayed = replay(dir.path().join(format!("{}.jsonl", s.id))).unwrap();
        assert_eq!(replayed, live);
        let e2 = engine().with_config(cfg).unwrap();
        assert_eq!(e2.session(&s.id).unwrap(), live);
        assert_ne!(e2.start_session(SessionMode::Crit).id, s.id);
    }
}
