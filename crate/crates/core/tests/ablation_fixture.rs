use critique_core::corpus::{build_candidates, ingest_reviews, IngestConfig, LexiconScorer, DEFAULT_POSITIVITY_THRESHOLD};
use critique_core::dataset::{default_rules, generate_compounds, load_critiques, scan_violations, GenerationSpec};
use critique_core::evalkit::{run_ablation, AblationConfig, AspectJudge, PreferenceSource};
use critique_core::interpreter::RuleTableProvider;
use critique_core::retrieval::HashBagEmbedder;
use critique_core::{jsonl, CandidateIndex, Execution, Interpreter, QueryMode};
use std::path::PathBuf;
use std::sync::Arc;

fn ablation(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/ablation").join(name)
}

fn index(exec: Execution) -> CandidateIndex {
    let restaurants: Vec<critique_core::Restaurant> = jsonl::read(ablation("restaurants.jsonl")).unwrap();
    let reviews = jsonl::read(ablation("reviews.jsonl")).unwrap();
    let store = ingest_reviews(reviews, restaurants.clone(), IngestConfig::default()).unwrap();
    let cands = build_candidates(&store, &LexiconScorer::default(), DEFAULT_POSITIVITY_THRESHOLD, exec).unwrap();
    CandidateIndex::build(cands, restaurants, &HashBagEmbedder::default(), exec).unwrap()
}

#[test]
fn shipped_dataset_regenerates() {
    let singles = load_critiques(ablation("singles.jsonl")).unwrap();
    let rules = default_rules();
    let compounds = generate_compounds(&singles, &rules, &GenerationSpec::new(20, 20, 17)).unwrap();
    assert!(scan_violations(&compounds, &singles, &rules).is_empty());
    let mut all = singles.clone();
    all.extend(compounds);
    let shipped = std::fs::read_to_string(ablation("dataset.jsonl")).unwrap();
    assert_eq!(jsonl::to_string(&all), shipped);
}

#[test]
fn interpretation_lifts_precision_at_one() {
    let dataset = load_critiques(ablation("dataset.jsonl")).unwrap();
    let judge = AspectJudge::load(ablation("judge.json")).unwrap();
    let interp = Interpreter::new(Arc::new(RuleTableProvider::load(ablation("rules.jsonl")).unwrap()));
    let mut reports = Vec::new();
    for exec in [Execution::Sequential, Execution::Parallel] {
        let ix = index(exec);
        let r = run_ablation(
            &dataset,
            &ix,
            &HashBagEmbedder::default(),
            &judge,
            PreferenceSource::Interpreter(&interp),
            &AblationConfig::default(),
            exec,
        )
        .unwrap();
        reports.push(r);
    }
    assert_eq!(reports[0].to_json(), reports[1].to_json());
    let ab = reports[0].ablation.as_ref().unwrap();
    let p1 = |m| ab.row(m).unwrap().all.at[0];
    assert!(p1(QueryMode::Pref) >= 2.0 * p1(QueryMode::Crit), "{} vs {}", p1(QueryMode::Pref), p1(QueryMode::Crit));
}
