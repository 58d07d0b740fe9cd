//! Critique-driven conversational recommendation.
//!
//! A user critique ("It doesn't look good for a date") is restated as a
//! positive preference ("I prefer a more romantic place.") by a few-shot
//! completion provider, and the preference is matched against positive
//! review sentences to pick a restaurant together with a testimonial.
//!
//! The crate is organised bottom-up:
//!
//! - [`corpus`]: review ingestion, sentence segmentation, positivity scoring
//!   and the argument-candidate set.
//! - [`interpreter`]: prompt construction and completion providers.
//! - [`retrieval`]: embedding providers, the exact cosine index and top-k search.
//! - [`rerank`]: ranking tasks over retrieved candidates and pluggable rerankers.
//! - [`evalkit`]: Precision@k, nDCG@k, Cohen's kappa, cross-validation and the
//!   with/without-interpretation ablation.
//! - [`dataset`]: critique records and seeded compound generation.
//! - [`dialog`]: multi-round sessions.
//!
//! Data-parallel loops (index build, scoring, per-query evaluation) run on
//! rayon when the `parallel` feature is enabled; see [`exec`].

pub mod corpus;
pub mod dataset;
pub mod dialog;
pub mod evalkit;
pub mod exec;
mod http;
pub mod interpreter;
pub mod jsonl;
pub mod rerank;
pub mod retrieval;
pub mod text;

pub use corpus::{ArgumentCandidate, CorpusStore, Restaurant, Review};
pub use exec::Execution;
pub use http::HttpFailure;
pub use interpreter::{GenerationConfig, Interpreter, PreferenceResult};
pub use retrieval::{CandidateIndex, Query, QueryMode, ScoredArgument};

pub use dataset::{CritiqueRecord, CritiqueSource};
pub use evalkit::EvalReport;
pub use dialog::{Round, Session, SessionEngine, SessionMode};
