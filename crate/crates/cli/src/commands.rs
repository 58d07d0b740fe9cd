use crate::{bad_input, CliResult, Overrides};
use clap::Args;
use critique_core::corpus::{build_candidates, ingest_reviews, IngestConfig, DEFAULT_POSITIVITY_THRESHOLD};
use critique_core::dataset::{convert_csv, default_rules, generate_compounds, load_critiques, load_rules, scan_violations, GenerationSpec};
use critique_core::dialog::DialogConfig;
use critique_core::evalkit::{run_eval, AspectJudge, FileLabels, Layered, PreferenceSource};
use critique_core::retrieval::EmbeddingProvider;
use critique_core::{jsonl, ArgumentCandidate, CandidateIndex, Execution, Interpreter, Query, QueryMode, Restaurant, SessionMode};
use critique_server::config::{build_index_from, embedder_from_spec, scorer_from_spec, IndexConfig};
use critique_server::{ApiError, AppConfig, AppState, ConfigError, ErrorCode};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn config_err(e: ConfigError) -> ApiError {
    match e {
        ConfigError::Load(m) if m.contains("embedding") => ApiError::new(ErrorCode::ProviderDown, m),
        other => bad_input(other),
    }
}

fn abs(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn abs_spec(spec: &str) -> String {
    match spec.split_once(':') {
        Some((kind @ ("cassette" | "rules"), path)) => format!("{kind}:{}", abs(Path::new(path)).display()),
        _ => spec.to_string(),
    }
}

impl Overrides {
    fn has_index(&self) -> bool {
        self.index.is_some() || self.restaurants.is_some() || self.reviews.is_some()
    }

    fn index_config(&self, base: IndexConfig) -> IndexConfig {
        let mut ix = if self.index.is_some() || (self.restaurants.is_some() && self.reviews.is_some()) {
            IndexConfig {
                positivity: base.positivity.clone(),
                threshold: base.threshold,
                min_rating: base.min_rating,
                ..IndexConfig::default()
            }
        } else {
            base
        };
        if let Some(p) = &self.index {
            ix.snapshot = Some(abs(p));
        }
        if let Some(p) = &self.restaurants {
            ix.restaurants = Some(abs(p));
        }
        if let Some(p) = &self.reviews {
            ix.reviews = Some(abs(p));
        }
        if let Some(v) = &self.positivity {
            ix.positivity = Some(v.clone());
        }
        if self.threshold.is_some() {
            ix.threshold = self.threshold;
        }
        if self.min_rating.is_some() {
            ix.min_rating = self.min_rating;
        }
        ix
    }
}

/// Config file, then environment.
fn base_config(o: &Overrides) -> CliResult<AppConfig> {
    let cfg = match &o.config {
        Some(p) => AppConfig::load(p).map_err(config_err)?,
        None => AppConfig {
            base_dir: abs(Path::new(".")),
            ..AppConfig::default()
        },
    };
    cfg.with_env().map_err(config_err)
}

/// Config file, environment, then flags.
fn app_config(o: &Overrides) -> CliResult<AppConfig> {
    let mut cfg = base_config(o)?;
    cfg.index = o.index_config(cfg.index.clone());
    if let Some(s) = &o.embedder {
        cfg.embedder = abs_spec(s);
    }
    if let Some(s) = &o.provider {
        cfg.provider = Some(abs_spec(s));
    }
    if let Some(p) = &o.exemplars {
        cfg.exemplars = Some(abs(p));
    }
    if let Some(n) = o.n_trials {
        cfg.generation.n_trials = n;
    }
    if let Some(p) = &o.record {
        cfg.record = Some(abs(p));
    }
    if let Some(k) = o.k {
        cfg.k = k;
    }
    Ok(cfg)
}

fn require_index(cfg: &AppConfig, embedder: &dyn EmbeddingProvider) -> CliResult<CandidateIndex> {
    cfg.build_index(&cfg.index, embedder, Execution::default())
        .map_err(config_err)?
        .ok_or_else(|| ApiError::new(ErrorCode::NoIndex, "no index: pass --index or --restaurants with --reviews"))
}

fn require_interpreter(cfg: &AppConfig) -> CliResult<Arc<Interpreter>> {
    cfg.build_interpreter()
        .map_err(config_err)?
        .ok_or_else(|| bad_input("no completion provider: pass --provider"))
}

fn write_output(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| ApiError::internal(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| ApiError::internal(e.to_string())),
    }
}

pub fn ingest(o: &Overrides, out: Option<PathBuf>) -> CliResult {
    let cfg = app_config(o)?;
    let (Some(rest), Some(rev)) = (&cfg.index.restaurants, &cfg.index.reviews) else {
        return Err(bad_input("ingest needs --restaurants and --reviews"));
    };
    let restaurants: Vec<Restaurant> = jsonl::read(cfg.resolve(rest)).map_err(bad_input)?;
    let reviews = jsonl::read(cfg.resolve(rev)).map_err(bad_input)?;
    let mut ingest = IngestConfig::default();
    if let Some(r) = cfg.index.min_rating {
        ingest.min_rating = r;
    }
    let store = ingest_reviews(reviews, restaurants, ingest).map_err(bad_input)?;
    let scorer = scorer_from_spec(cfg.index.positivity.as_deref().unwrap_or("lexicon")).map_err(config_err)?;
    let threshold = cfg.index.threshold.unwrap_or(DEFAULT_POSITIVITY_THRESHOLD);
    let candidates = build_candidates(&store, scorer.as_ref(), threshold, Execution::default())
        .map_err(|e| ApiError::new(ErrorCode::ProviderDown, e.to_string()))?;
    tracing::info!(
        reviews = store.review_count(),
        dropped_by_rating = store.filtered_by_rating(),
        candidates = candidates.len(),
        "ingested"
    );
    write_output(out.as_deref(), &jsonl::to_string(&candidates))
}

pub fn index_build(o: &Overrides, candidates: Option<PathBuf>, out: PathBuf) -> CliResult {
    let cfg = app_config(o)?;
    let embedder = cfg.build_embedder().map_err(config_err)?;
    let exec = Execution::default();
    let index = match candidates {
        Some(path) => {
            let cands: Vec<ArgumentCandidate> = jsonl::read(&path).map_err(bad_input)?;
            let rest = cfg
                .index
                .restaurants
                .as_ref()
                .ok_or_else(|| bad_input("--candidates needs --restaurants"))?;
            let restaurants: Vec<Restaurant> = jsonl::read(cfg.resolve(rest)).map_err(bad_input)?;
            CandidateIndex::build(cands, restaurants, embedder.as_ref(), exec)?
        }
        None => {
            let (Some(rest), Some(rev)) = (&cfg.index.restaurants, &cfg.index.reviews) else {
                return Err(bad_input("index build needs --candidates or --restaurants with --reviews"));
            };
            let restaurants = jsonl::read(cfg.resolve(rest)).map_err(bad_input)?;
            let reviews = jsonl::read(cfg.resolve(rev)).map_err(bad_input)?;
            build_index_from(restaurants, reviews, &cfg.index, embedder.as_ref(), exec).map_err(config_err)?
        }
    };
    index.save(&out)?;
    tracing::info!(candidates = index.len(), dim = index.dim(), out = %out.display(), "index saved");
    Ok(())
}

pub fn transform(o: &Overrides, critique: &str, json: bool) -> CliResult {
    let cfg = app_config(o)?;
    let interp = require_interpreter(&cfg)?;
    let r = interp.transform(critique)?;
    if json {
        out!("{}", serde_json::to_string_pretty(&r).expect("serializable"));
    } else {
        out!("{}", r.preference);
    }
    Ok(())
}

#[derive(Args)]
pub struct SearchArgs {
    /// Search this text as-is.
    #[arg(long, conflicts_with = "critique")]
    statement: Option<String>,
    /// Build the query from a critique; PREF and CONCAT interpret it unless --preference is given.
    #[arg(long)]
    critique: Option<String>,
    #[arg(long, requires = "critique")]
    preference: Option<String>,
    #[arg(long, default_value = "PREF")]
    mode: QueryMode,
    #[arg(long)]
    json: bool,
}

pub fn search(o: &Overrides, args: SearchArgs) -> CliResult {
    let cfg = app_config(o)?;
    let query = match (&args.statement, &args.critique) {
        (Some(s), _) => Query::statement(args.mode, s.clone()),
        (None, Some(c)) if args.mode == QueryMode::Crit => Query::crit(c.clone())?,
        (None, Some(c)) => {
            let pref = match &args.preference {
                Some(p) => p.clone(),
                None => require_interpreter(&cfg)?.transform(c)?.preference,
            };
            Query::new(args.mode, c.clone(), Some(pref))?
        }
        (None, None) => return Err(bad_input("search needs --statement or --critique")),
    };
    let embedder = cfg.build_embedder().map_err(config_err)?;
    let index = require_index(&cfg, embedder.as_ref())?;
    let hits = index.search(&query, embedder.as_ref(), cfg.k)?;
    if args.json {
        out!("{}", serde_json::to_string_pretty(&hits).expect("serializable"));
        return Ok(());
    }
    out!("# {} {:?}", query.mode, query.statement);
    for h in &hits {
        let name = index.restaurant(&h.candidate.restaurant_id).map_or("?", |r| r.name.as_str());
        out!("{}\t{:.6}\t{}\t{}\t{}", h.rank, h.score, h.candidate.id, name, h.candidate.sentence);
    }
    Ok(())
}

#[derive(Args)]
pub struct GenArgs {
    /// Single-round critiques (JSONL).
    #[arg(long)]
    singles: PathBuf,
    #[arg(long, default_value_t = 0)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    triples: usize,
    #[arg(long, default_value_t = 17)]
    seed: u64,
    /// Contradiction rules (JSONL); the bundled set otherwise.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Write the singles ahead of the compounds.
    #[arg(long)]
    include_singles: bool,
    #[arg(long)]
    max_attempts: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn dataset_gen(args: GenArgs) -> CliResult {
    let singles = load_critiques(&args.singles).map_err(bad_input)?;
    let rules = match &args.rules {
        Some(p) => load_rules(p).map_err(bad_input)?,
        None => default_rules(),
    };
    let mut spec = GenerationSpec::new(args.pairs, args.triples, args.seed);
    if let Some(n) = args.max_attempts {
        spec.max_attempts = n;
    }
    let compounds = generate_compounds(&singles, &rules, &spec).map_err(bad_input)?;
    let violations = scan_violations(&compounds, &singles, &rules);
    if let Some(v) = violations.first() {
        return Err(ApiError::internal(format!("{} compounds violate a contradiction rule, first {}", violations.len(), v.id)));
    }
    tracing::info!(singles = singles.len(), compounds = compounds.len(), "generated");
    let mut out = Vec::new();
    if args.include_singles {
        out.extend(singles.iter().filter(|s| s.rounds == 1).cloned());
    }
    out.extend(compounds);
    write_output(args.out.as_deref(), &jsonl::to_string(&out))
}

pub fn dataset_convert(csv: PathBuf, out: Option<PathBuf>) -> CliResult {
    let text = std::fs::read_to_string(&csv).map_err(|e| bad_input(format!("{}: {e}", csv.display())))?;
    let records = convert_csv(&text).map_err(bad_input)?;
    write_output(out.as_deref(), &jsonl::to_string(&records))
}

#[derive(Args)]
pub struct EvalArgs {
    /// Critique dataset (JSONL).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Annotator labels (JSONL); consulted before --judge.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Aspect judge (JSON).
    #[arg(long)]
    judge: Option<PathBuf>,
    /// Interpret critiques with the provider instead of using the dataset's preferences.
    #[arg(long)]
    interpret: bool,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Queries sampled for the ranking tasks; 0 uses all.
    #[arg(long)]
    task_queries: Option<usize>,
    /// Report path (JSON). The text summary goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn eval_run(o: &Overrides, args: EvalArgs) -> CliResult {
    let cfg = base_config(o)?;
    let ev = &cfg.eval;
    let mut config = ev.config.clone();
    if let Some(k) = o.k {
        config.k = k;
    }
    if let Some(f) = args.folds {
        config.folds = f;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(n) = args.task_queries {
        config.task_queries = (n > 0).then_some(n);
    }

    let embedder_spec = match (&o.embedder, &ev.embedder) {
        (Some(s), _) => abs_spec(s),
        (None, Some(s)) => cfg.resolve_spec(s),
        (None, None) => cfg.resolve_spec(&cfg.embedder),
    };
    let embedder = embedder_from_spec(&embedder_spec).map_err(config_err)?;
    let index_cfg = if o.has_index() {
        o.index_config(IndexConfig::default())
    } else {
        ev.index.clone().unwrap_or_else(|| cfg.index.clone())
    };
    let index = cfg
        .build_index(&index_cfg, embedder.as_ref(), Execution::default())
        .map_err(config_err)?
        .ok_or_else(|| ApiError::new(ErrorCode::NoIndex, "no index: pass --index or --restaurants with --reviews"))?;

    let dataset_path = args
        .dataset
        .map(|p| abs(&p))
        .or_else(|| ev.dataset.as_ref().map(|p| cfg.resolve(p)))
        .ok_or_else(|| bad_input("eval run needs --dataset"))?;
    let dataset = load_critiques(&dataset_path).map_err(bad_input)?;

    let mut labels = Layered::default();
    let mut agreement = Vec::new();
    let labels_path = args.labels.map(|p| abs(&p)).or_else(|| ev.labels.as_ref().map(|p| cfg.resolve(p)));
    if let Some(p) = labels_path {
        let file = FileLabels::load(&p).map_err(bad_input)?;
        agreement = file.agreement();
        labels = labels.push(file);
    }
    let judge_path = args.judge.map(|p| abs(&p)).or_else(|| ev.judge.as_ref().map(|p| cfg.resolve(p)));
    if let Some(p) = judge_path {
        labels = labels.push(AspectJudge::load(&p).map_err(bad_input)?);
    }
    if labels.0.is_empty() {
        return Err(bad_input("eval run needs --labels or --judge"));
    }

    let interp = if args.interpret {
        let spec = match (&o.provider, &ev.provider, &cfg.provider) {
            (Some(s), _, _) => abs_spec(s),
            (None, Some(s), _) | (None, None, Some(s)) => s.clone(),
            (None, None, None) => return Err(bad_input("--interpret needs --provider")),
        };
        let mut c = AppConfig {
            provider: Some(spec),
            ..cfg.clone()
        };
        if let Some(p) = &o.exemplars {
            c.exemplars = Some(abs(p));
        }
        if let Some(n) = o.n_trials {
            c.generation.n_trials = n;
        }
        Some(require_interpreter(&c)?)
    } else {
        None
    };
    let preferences = match &interp {
        Some(i) => PreferenceSource::Interpreter(i),
        None => PreferenceSource::Dataset,
    };
    let report = run_eval(
        &dataset,
        Arc::new(index),
        embedder,
        &labels,
        preferences,
        agreement,
        &config,
        Execution::default(),
    )?;
    match &args.out {
        Some(p) => {
            write_output(Some(p), &report.to_json())?;
            let _ = write!(std::io::stdout().lock(), "{}", report.render());
            Ok(())
        }
        None => write_output(None, &report.to_json()),
    }
}

pub fn serve(o: &Overrides, port: Option<u16>, host: &str) -> CliResult {
    let mut cfg = app_config(o)?;
    if let Some(p) = port {
        cfg.port = p;
    }
    let state = AppState::from_config(&cfg).map_err(config_err)?;
    let addr: std::net::SocketAddr = format!("{host}:{}", cfg.port).parse().map_err(bad_input)?;
    let state = Arc::new(state);
    let rt = tokio::runtime::Runtime::new().map_err(|e| ApiError::internal(e.to_string()))?;
    let served = rt.block_on(critique_server::serve(state.clone(), addr));
    // Blocking HTTP clients inside the state must not be dropped on a runtime thread.
    drop(rt);
    drop(state);
    served.map_err(|e| ApiError::internal(format!("{addr}: {e}")))
}

#[derive(Args)]
pub struct ChatArgs {
    #[arg(long, default_value = "PREF")]
    mode: SessionMode,
    /// Read critiques from this file instead of stdin.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Print each round as a JSON line.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    journal_dir: Option<PathBuf>,
}

pub fn chat(o: &Overrides, args: ChatArgs) -> CliResult {
    let cfg = app_config(o)?;
    let embedder = cfg.build_embedder().map_err(config_err)?;
    let index = Arc::new(require_index(&cfg, embedder.as_ref())?);
    let interp = cfg.build_interpreter().map_err(config_err)?;
    let dialog = DialogConfig {
        exclude_shown: cfg.exclude_shown,
        journal_dir: args.journal_dir.as_ref().map(|p| abs(p)).or_else(|| cfg.journal_dir.as_ref().map(|p| cfg.resolve(p))),
    };
    let state = AppState::new(Some(index), embedder, interp, dialog).map_err(config_err)?;
    let engine = state.engine.expect("index is loaded");
    let session = engine.start_session(args.mode);
    eprintln!("session {} ({})", session.id, session.mode.as_str());

    let reader: Box<dyn BufRead> = match &args.script {
        Some(p) => Box::new(std::io::BufReader::new(
            std::fs::File::open(p).map_err(|e| bad_input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::stdin().lock()),
    };
    let mut failed = None;
    let stdout = std::io::stdout();
    for line in reader.lines() {
        let line = line.map_err(|e| ApiError::internal(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match engine.critique_round(&session.id, &line, cfg.k) {
            Ok(round) => {
                let mut out = stdout.lock();
                if args.json {
                    writeln!(out, "{}", serde_json::to_string(&round).expect("serializable")).ok();
                } else {
                    writeln!(out, "[{}] {}", round.index, round.critique).ok();
                    if let Some(p) = &round.preference {
                        writeln!(out, "    preference: {p}").ok();
                    }
                    writeln!(out, "    recommend:  {} ({})", round.recommendation.name, round.recommendation.id).ok();
                    writeln!(out, "    because:    \"{}\" ({:.4})", round.argument.candidate.sentence, round.argument.score).ok();
                }
            }
            Err(e) => {
                let api = ApiError::from(e);
                eprintln!("{}", serde_json::to_string(&api).expect("serializable"));
                failed = Some(api);
            }
        }
    }
    failed.map_or(Ok(()), Err)
}
