//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use critique_core::corpus::{build_candidates, ingest_reviews, IngestConfig, LexiconScorer, DEFAULT_POSITIVITY_THRESHOLD};
use critique_core::dataset::{default_rules, load_critiques, CritiqueRecord};
use critique_core::evalkit::{
    cohens_kappa, label_tasks, ndcg_at_k, precision_at_k, run_ablation, AblationConfig, AspectJudge, Gain, PreferenceSource,
};
use critique_core::interpreter::{CassetteEntry, CassetteProvider, RuleTableProvider};
use critique_core::rerank::{assemble_tasks, rerank, OracleReranker, TaskConfig, TaskId, TaskQuery};
use critique_core::retrieval::{CassetteEmbedder, EmbeddingProvider, HashBagEmbedder, SearchOptions};
use critique_core::{jsonl, CandidateIndex, Execution, GenerationConfig, Interpreter, Query, QueryMode, Restaurant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn critique_cmd() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_critique"));
    c.current_dir(fixtures());
    for var in ["CRITIQUE_INDEX", "CRITIQUE_EMBEDDER", "CRITIQUE_PROVIDER", "CRITIQUE_EXEMPLARS", "CRITIQUE_K", "CRITIQUE_PORT"] {
        c.env_remove(var);
    }
    c
}

fn run(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = critique_cmd().args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("critique {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn build_index(dir: &str, embedder: &dyn EmbeddingProvider, exec: Execution) -> CandidateIndex {
    let base = fixtures().join(dir);
    let restaurants: Vec<Restaurant> = jsonl::read(base.join("restaurants.jsonl")).unwrap();
    let reviews = jsonl::read(base.join("reviews.jsonl")).unwrap();
    let store = ingest_reviews(reviews, restaurants.clone(), IngestConfig::default()).unwrap();
    let cands = build_candidates(&store, &LexiconScorer::default(), DEFAULT_POSITIVITY_THRESHOLD, exec).unwrap();
    CandidateIndex::build(cands, restaurants, embedder, exec).unwrap()
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 300;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(1..=30);
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        let k = rng.random_range(1..=n);
        worst = worst.max((precision_at_k(&labels, k).unwrap() - oracle::precision(&labels, k)).abs());
    }
    for _ in 0..trials {
        let n = rng.random_range(1..=6);
        let grades: Vec<u8> = (0..n).map(|_| rng.random_range(1..=3)).collect();
        let k = rng.random_range(1..=8);
        worst = worst.max((ndcg_at_k(&grades, k, Gain::Exponential).unwrap() - oracle::ndcg(&grades, k, false)).abs());
        worst = worst.max((ndcg_at_k(&grades, k, Gain::Linear).unwrap() - oracle::ndcg(&grades, k, true)).abs());
    }
    for _ in 0..trials {
        let n = rng.random_range(1..=80);
        let c = rng.random_range(2..=4);
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let b: Vec<usize> = a.iter().map(|&x| if rng.random_bool(0.3) { rng.random_range(0..c) } else { x }).collect();
        worst = worst.max((cohens_kappa(&a, &b).unwrap() - oracle::kappa(&a, &b, c)).abs());
    }
    ensure!(worst <= 1e-9, "max |delta| {worst:e}");

    for _ in 0..50 {
        let mut g: Vec<u8> = (0..rng.random_range(1..=15)).map(|_| rng.random_range(1..=3)).collect();
        g.sort_unstable_by(|a, b| b.cmp(a));
        for k in 1..=g.len() + 2 {
            ensure!(ndcg_at_k(&g, k, Gain::Exponential).unwrap() == 1.0, "perfect ranking {g:?} k={k}");
        }
        let same: Vec<u8> = g.clone();
        ensure!(cohens_kappa(&g, &same).unwrap() == 1.0, "identical annotators {g:?}");
    }
    let a: Vec<bool> = (0..10_000).map(|_| rng.random_bool(0.5)).collect();
    let b: Vec<bool> = (0..10_000).map(|_| rng.random_bool(0.5)).collect();
    let chance = cohens_kappa(&a, &b).unwrap();
    ensure!(chance.abs() < 0.05, "chance kappa {chance}");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("{} instances each, max |delta| {worst:.1e}, chance kappa {chance:.4}, {elapsed:.2?}", trials))
}

fn retrieval_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..100 {
        let n = rng.random_range(1..=500);
        let dim = rng.random_range(2..=8);
        let (cands, rest) = oracle::random_corpus(&mut rng, n, dim);
        let exec = if trial % 2 == 0 { Execution::Parallel } else { Execution::Sequential };
        let index = CandidateIndex::from_embedded(cands.clone(), rest, "acceptance", exec).map_err(|e| e.to_string())?;
        for _ in 0..3 {
            let q = oracle::random_query(&mut rng, dim);
            let k = rng.random_range(1..=n.min(40));
            let got: Vec<String> = index
                .search_vector(&q, k, &SearchOptions::default())
                .into_iter()
                .map(|s| s.candidate.id)
                .collect();
            ensure!(got == oracle::top_k(&cands, &q, k), "corpus {trial} (n={n}, k={k}) differs");
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("100 corpora x 3 queries, exact order, {elapsed:.2?}"))
}

fn ablation_mirror() -> Outcome {
    let dataset = load_critiques(fixtures().join("ablation/dataset.jsonl")).map_err(|e| e.to_string())?;
    let judge = AspectJudge::load(fixtures().join("ablation/judge.json"))?;
    let rules = RuleTableProvider::load(fixtures().join("ablation/rules.jsonl")).map_err(|e| e.to_string())?;
    let interp = Interpreter::new(Arc::new(rules));
    let embedder = HashBagEmbedder::default();
    let mut json = Vec::new();
    let mut p1 = (0.0, 0.0);
    for exec in [Execution::Parallel, Execution::Sequential] {
        let index = build_index("ablation", &embedder, exec);
        let report = run_ablation(
            &dataset,
            &index,
            &embedder,
            &judge,
            PreferenceSource::Interpreter(&interp),
            &AblationConfig::default(),
            exec,
        )
        .map_err(|e| e.to_string())?;
        let ab = report.ablation.as_ref().unwrap();
        p1 = (ab.row(QueryMode::Crit).unwrap().all.at[0], ab.row(QueryMode::Pref).unwrap().all.at[0]);
        json.push(report.to_json());
    }
    ensure!(json[0] == json[1], "parallel and sequential reports differ");
    let (crit, pref) = p1;
    ensure!(pref >= 2.0 * crit, "PREF P@1 {pref:.3} < 2 x CRIT P@1 {crit:.3}");
    ensure!(pref > 0.0, "PREF P@1 is zero");
    Ok(format!("{} queries, CRIT P@1 {crit:.3}, PREF P@1 {pref:.3}", dataset.len()))
}

fn recorded_examples() -> Outcome {
    let cases: Value = serde_json::from_str(&std::fs::read_to_string(fixtures().join("showcase/cases.json")).unwrap()).unwrap();
    let entries: Vec<CassetteEntry> = jsonl::read(fixtures().join("showcase/interpreter_cassette.jsonl")).map_err(|e| e.to_string())?;
    let provider = CassetteProvider::from_entries(entries.clone());
    let interp = Interpreter::new(Arc::new(provider)).with_config(GenerationConfig {
        n_trials: 3,
        ..GenerationConfig::default()
    });
    let embedder = CassetteEmbedder::load(fixtures().join("showcase/embeddings.jsonl")).map_err(|e| e.to_string())?;
    let index = build_index("showcase", &embedder, Execution::default());
    let mut checked = 0;
    for case in cases["cases"].as_array().unwrap() {
        let critique = case["critique"].as_str().unwrap();
        let want = case["preference"].as_str().unwrap();
        let r = interp.transform(critique).map_err(|e| e.to_string())?;
        let recorded = entries
            .iter()
            .find(|e| e.prompt.ends_with(&format!("\n{critique}=>I prefer")))
            .ok_or(format!("no cassette entry for {critique:?}"))?;
        let from_cassette = format!("I prefer{}", recorded.completions[r.selected_index]);
        ensure!(r.preference == from_cassette, "{critique:?}: {:?} vs cassette {from_cassette:?}", r.preference);
        ensure!(r.preference == want, "{critique:?}: {:?} vs table {want:?}", r.preference);
        let cli = run(&["--config", "app.toml", "transform", "--critique", critique])?;
        ensure!(String::from_utf8_lossy(&cli).trim_end() == want, "CLI transform gave {:?}", String::from_utf8_lossy(&cli));

        let hits = index
            .search(&Query::pref(critique, r.preference.clone()).unwrap(), &embedder, 3)
            .map_err(|e| e.to_string())?;
        let top: Vec<&str> = hits.iter().map(|h| h.candidate.sentence.as_str()).collect();
        for b in case["bolded"].as_array().unwrap() {
            ensure!(top.contains(&b.as_str().unwrap()), "{b} not in PREF top 3 {top:?}");
            checked += 1;
        }
    }
    Ok(format!("{checked} bolded arguments in PREF top 3, preferences byte-equal to cassette"))
}

fn dataset_generation() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = |name: &str| tmp.path().join(name).display().to_string();
    let args = |o: &str| {
        vec![
            "dataset".to_string(),
            "gen".into(),
            "--singles".into(),
            "dataset/singles.jsonl".into(),
            "--pairs".into(),
            "340".into(),
            "--triples".into(),
            "340".into(),
            "--seed".into(),
            "17".into(),
            "--out".into(),
            o.to_string(),
        ]
    };
    for o in [out("a.jsonl"), out("b.jsonl")] {
        let a: Vec<String> = args(&o);
        run(&a.iter().map(String::as_str).collect::<Vec<_>>())?;
    }
    let a = std::fs::read(out("a.jsonl")).unwrap();
    ensure!(a == std::fs::read(out("b.jsonl")).unwrap(), "two runs differ");

    let singles = load_critiques(fixtures().join("dataset/singles.jsonl")).map_err(|e| e.to_string())?;
    ensure!(singles.len() == 340, "{} singles", singles.len());
    let compounds = load_critiques(out("a.jsonl")).map_err(|e| e.to_string())?;
    ensure!(compounds.len() == 680, "{} compounds", compounds.len());
    let by_id: std::collections::BTreeMap<&str, &CritiqueRecord> = singles.iter().map(|s| (s.id.as_str(), s)).collect();
    let rules = default_rules();
    let mut pairs_checked = 0usize;
    for c in &compounds {
        let parts: Vec<&CritiqueRecord> = c.parts.iter().map(|p| by_id[p.as_str()]).collect();
        for i in 0..parts.len() {
            for j in 0..parts.len() {
                if i == j {
                    continue;
                }
                for r in &rules {
                    ensure!(!r.applies(&parts[i].critique, &parts[j].critique), "{} violates {:?}", c.id, r.note);
                }
                pairs_checked += 1;
            }
        }
    }
    let find = |text: &str| singles.iter().find(|s| s.critique == text).map(|s| s.id.clone());
    let meat = find("I'm not a big meat eater.").ok_or("meat single missing")?;
    let veg = find("I'm not in the mood for vegetables.").ok_or("vegetables single missing")?;
    ensure!(
        rules.iter().any(|r| r.applies(&by_id[meat.as_str()].critique, &by_id[veg.as_str()].critique)),
        "no rule covers the meat/vegetables pair"
    );
    let together = compounds.iter().filter(|c| c.parts.contains(&meat) && c.parts.contains(&veg)).count();
    ensure!(together == 0, "{together} compounds pair meat with vegetables");
    Ok(format!("680 compounds, {pairs_checked} ordered part pairs x {} rules clean, meat/vegetables excluded", rules.len()))
}

fn task_assembly() -> Outcome {
    let dataset = load_critiques(fixtures().join("ablation/dataset.jsonl")).map_err(|e| e.to_string())?;
    let judge = AspectJudge::load(fixtures().join("ablation/judge.json"))?;
    ensure!(dataset.len() == 100, "{} fixture queries", dataset.len());
    let embedder = HashBagEmbedder::default();
    let index = build_index("ablation", &embedder, Execution::default());
    let queries: Vec<TaskQuery> = dataset.iter().map(TaskQuery::from).collect();
    let mut tasks = assemble_tasks(&queries, &index, &embedder, &TaskConfig::default(), Execution::default()).map_err(|e| e.to_string())?;
    ensure!(tasks.len() == 300, "{} tasks", tasks.len());
    label_tasks(&mut tasks, &judge).map_err(|e| e.to_string())?;
    let mut disjoint = 0;
    for chunk in tasks.chunks(3) {
        let [t1, t2, t3] = chunk else { unreachable!() };
        ensure!(t1.task == TaskId::Task1 && t2.task == TaskId::Task2 && t3.task == TaskId::Task3, "task order");
        ensure!(t1.candidates.len() == 15 && t2.candidates.len() == 15, "{}: sizes {} {}", t1.query_id, t1.candidates.len(), t2.candidates.len());
        let union: BTreeSet<&str> = t1.candidates.iter().chain(&t2.candidates).map(|c| c.id.as_str()).collect();
        let got: Vec<&str> = t3.candidates.iter().map(|c| c.id.as_str()).collect();
        ensure!(got.len() == union.len() && got.iter().copied().collect::<BTreeSet<_>>() == union, "{}: TASK3 is not the union", t1.query_id);
        if union.len() == 30 {
            disjoint += 1;
        }
    }
    for t in &tasks {
        let r = rerank(t, &OracleReranker::for_task(t)).map_err(|e| e.to_string())?;
        let gains = t.gains_in_order(&r.ordering).ok_or("unlabeled candidate")?;
        for k in 1..=gains.len() {
            let v = ndcg_at_k(&gains, k, Gain::Exponential).unwrap();
            ensure!(v == 1.0, "{}/{} nDCG@{k} = {v}", t.query_id, t.task);
        }
    }
    Ok(format!("100 queries, 300 tasks, oracle nDCG 1.0 at every k, {disjoint} disjoint TASK3 of size 30"))
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn free_port() -> u16 {
    std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn start_server() -> Result<(Server, String), String> {
    let port = free_port();
    let child = critique_cmd()
        .args(["--config", "app.toml", "serve", "--port", &port.to_string()])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let server = Server(child);
    let base = format!("http://127.0.0.1:{port}");
    let client = reqwest::blocking::Client::new();
    let deadline = Instant::now() + Duration::from_secs(60);
    while Instant::now() < deadline {
        if client.get(format!("{base}/healthz")).send().is_ok_and(|r| r.status().is_success()) {
            return Ok((server, base));
        }
        std::thread::sleep(Duration::from_millis(100));
    }
    Err("server did not come up".into())
}

fn scripted_session(script: &[String]) -> Result<Vec<String>, String> {
    let (_server, base) = start_server()?;
    let client = reqwest::blocking::Client::new();
    let post = |path: &str, body: String| -> Result<(u16, String), String> {
        let r = client
            .post(format!("{base}{path}"))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .map_err(|e| e.to_string())?;
        Ok((r.status().as_u16(), r.text().map_err(|e| e.to_string())?))
    };
    let (status, created) = post("/sessions", r#"{"mode":"PREF"}"#.into())?;
    ensure!(status == 201, "POST /sessions -> {status}");
    let id = serde_json::from_str::<Value>(&created).unwrap()["session_id"].as_str().unwrap().to_string();
    let mut bodies = Vec::new();
    for line in script {
        let (status, body) = post(&format!("/sessions/{id}/critique"), serde_json::json!({ "text": line }).to_string())?;
        ensure!(status == 200, "round {line:?} -> {status} {body}");
        bodies.push(body);
    }
    Ok(bodies)
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for name in ["r1.json", "r2.json"] {
        let path = tmp.path().join(name);
        run(&["--config", "app.toml", "eval", "run", "--interpret", "--seed", "17", "--out", path.to_str().unwrap()])?;
        reports.push(std::fs::read(&path).unwrap());
    }
    ensure!(reports[0] == reports[1], "eval run reports differ");
    ensure!(Path::new(&fixtures().join("ablation/dataset.jsonl")).exists(), "fixture dataset missing");

    let cases: Value = serde_json::from_str(&std::fs::read_to_string(fixtures().join("showcase/cases.json")).unwrap()).unwrap();
    let script: Vec<String> = serde_json::from_value(cases["session_script"].clone()).unwrap();
    let a = scripted_session(&script)?;
    let b = scripted_session(&script)?;
    ensure!(a.len() == 3 && a == b, "session replays differ");
    ensure!(a[0].contains(r#""preference":"I prefer a more romantic place.""#), "first round lacks the preference");
    Ok(format!("report {} bytes identical twice; 3-round served session identical across restarts", reports[0].len()))
}

fn main() {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [Criterion; 7] = [
        ("metric oracles", metric_oracles),
        ("retrieval exactness", retrieval_exactness),
        ("ablation mirror", ablation_mirror),
        ("recorded-example fidelity", recorded_examples),
        ("dataset generation", dataset_generation),
        ("task assembly", task_assembly),
        ("end-to-end determinism", end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        if filter.as_ref().is_some_and(|f| !name.contains(f.as_str())) {
            continue;
        }
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
