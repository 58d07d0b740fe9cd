use critique_core::corpus::{build_candidates, ingest_reviews, IngestConfig, LexiconScorer, DEFAULT_POSITIVITY_THRESHOLD};
use critique_core::interpreter::CassetteProvider;
use critique_core::retrieval::CassetteEmbedder;
use critique_core::{jsonl, CandidateIndex, Execution, GenerationConfig, Interpreter, Query};
use serde::Deserialize;
use std::path::PathBuf;
use std::sync::Arc;

fn showcase(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/showcase").join(name)
}

#[derive(Deserialize)]
struct Case {
    critique: String,
    preference: String,
    bolded: Vec<String>,
}

#[derive(Deserialize)]
struct SingleTurn {
    critique: String,
    preference: String,
    argument: String,
}

#[derive(Deserialize)]
struct Cases {
    cases: Vec<Case>,
    single_turn: SingleTurn,
}

struct Fixture {
    index: CandidateIndex,
    embedder: CassetteEmbedder,
    interpreter: Interpreter,
    cases: Cases,
}

fn fixture() -> Fixture {
    let restaurants: Vec<critique_core::Restaurant> = jsonl::read(showcase("restaurants.jsonl")).unwrap();
    let reviews = jsonl::read(showcase("reviews.jsonl")).unwrap();
    let store = ingest_reviews(reviews, restaurants.clone(), IngestConfig::default()).unwrap();
    let cands = build_candidates(&store, &LexiconScorer::default(), DEFAULT_POSITIVITY_THRESHOLD, Execution::Sequential).unwrap();
    let embedder = CassetteEmbedder::load(showcase("embeddings.jsonl")).unwrap();
    let index = CandidateIndex::build(cands, restaurants, &embedder, Execution::Sequential).unwrap();
    let provider = Arc::new(CassetteProvider::load(showcase("interpreter_cassette.jsonl")).unwrap());
    let interpreter = Interpreter::new(provider).with_config(GenerationConfig {
        n_trials: 3,
        ..GenerationConfig::default()
    });
    let cases = serde_json::from_str(&std::fs::read_to_string(showcase("cases.json")).unwrap()).unwrap();
    Fixture {
        index,
        embedder,
        interpreter,
        cases,
    }
}

#[test]
fn table_cases_interpret_byte_equal() {
    let f = fixture();
    for c in &f.cases.cases {
        let r = f.interpreter.transform(&c.critique).unwrap();
        assert_eq!(r.preference, c.preference);
        assert_eq!(r.raw_completions.len(), 3);
    }
}

#[test]
fn bolded_arguments_rank_top_three_under_pref() {
    let f = fixture();
    for c in &f.cases.cases {
        let pref = f.interpreter.transform(&c.critique).unwrap().preference;
        let hits = f.index.search(&Query::pref(c.critique.clone(), pref).unwrap(), &f.embedder, 3).unwrap();
        let top: Vec<&str> = hits.iter().map(|h| h.candidate.sentence.as_str()).collect();
        for b in &c.bolded {
            assert!(top.contains(&b.as_str()), "{b:?} not in {top:?}");
        }
        let crit = f.index.search(&Query::crit(c.critique.clone()).unwrap(), &f.embedder, 3).unwrap();
        let crit_top: Vec<&str> = crit.iter().map(|h| h.candidate.sentence.as_str()).collect();
        assert_ne!(crit_top, top, "CRIT and PREF agree for {:?}", c.critique);
    }
}

#[test]
fn single_turn_flow() {
    let f = fixture();
    let r = f.interpreter.transform(&f.cases.single_turn.critique).unwrap();
    assert_eq!(r.preference, f.cases.single_turn.preference);
    let (restaurant, arg) = f
        .index
        .recommend(&Query::pref(f.cases.single_turn.critique.clone(), r.preference).unwrap(), &f.embedder)
        .unwrap();
    assert_eq!(arg.candidate.sentence, f.cases.single_turn.argument);
    assert_eq!(arg.candidate.restaurant_id, restaurant.id);
}

#[test]
fn every_candidate_is_positive() {
    let f = fixture();
    assert!(f.index.candidates().iter().all(|c| c.positivity >= DEFAULT_POSITIVITY_THRESHOLD));
}
