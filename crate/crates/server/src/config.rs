//! Application config: a TOML file plus `CRITIQUE_*` environment overrides.
//!
//! Relative paths are resolved against the directory holding the config file.

use critique_core::corpus::{
    build_candidates, ingest_reviews, ConstantScorer, HttpPositivityScorer, IngestConfig, LexiconScorer,
    PositivityScorer, DEFAULT_POSITIVITY_THRESHOLD,
};
use critique_core::dataset::{load_critiques, CritiqueRecord};
use critique_core::evalkit::{AspectJudge, EvalConfig, FileLabels};
use critique_core::interpreter::{
    load_exemplars, CassetteProvider, CompletionProvider, EchoProvider, HttpCompletionProvider, RecordingProvider,
    RuleTableProvider,
};
use critique_core::retrieval::{CachedEmbedder, CassetteEmbedder, EmbeddingProvider, HashBagEmbedder, HttpEmbedder};
use critique_core::{jsonl, CandidateIndex, Execution, GenerationConfig, Interpreter};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("bad {what} spec {spec:?}: {reason}")]
    Spec { what: &'static str, spec: String, reason: String },
    #[error("env {var}: {message}")]
    Env { var: &'static str, message: String },
    #[error("{0}")]
    Load(String),
}

/// Where the candidate index comes from.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexConfig {
    /// A saved index snapshot. Takes precedence over `restaurants`/`reviews`.
    pub snapshot: Option<PathBuf>,
    pub restaurants: Option<PathBuf>,
    pub reviews: Option<PathBuf>,
    /// `lexicon`, `constant:X` or `http:URL`.
    pub positivity: Option<String>,
    pub threshold: Option<f64>,
    pub min_rating: Option<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    pub dataset: Option<PathBuf>,
    pub judge: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Separate corpus for evaluation; the serving index is used otherwise.
    pub index: Option<IndexConfig>,
    pub embedder: Option<String>,
    /// Interprets critiques during evaluation; the dataset's own
    /// preferences are used when unset.
    pub provider: Option<String>,
    #[serde(flatten)]
    pub config: EvalConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub port: u16,
    pub k: usize,
    /// `hashbag[:DIM]`, `cassette:PATH` or `http:URL`.
    pub embedder: String,
    /// `cassette:PATH`, `rules:PATH`, `echo:TEXT` or `http:URL`.
    pub provider: Option<String>,
    pub exemplars: Option<PathBuf>,
    /// Appends every live completion exchange to this cassette.
    pub record: Option<PathBuf>,
    pub generation: GenerationConfig,
    pub journal_dir: Option<PathBuf>,
    pub exclude_shown: bool,
    pub index: IndexConfig,
    pub eval: EvalSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            port: DEFAULT_PORT,
            k: DEFAULT_K,
            embedder: "hashbag".into(),
            provider: None,
            exemplars: None,
            record: None,
            generation: GenerationConfig::default(),
            journal_dir: None,
            exclude_shown: false,
            index: IndexConfig::default(),
            eval: EvalSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

impl AppConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, ConfigError> {
        let mut cfg: AppConfig = toml::from_str(text).map_err(|e| ConfigError::File {
            path: "<config>".into(),
            message: e.to_string(),
        })?;
        cfg.base_dir = base_dir.into();
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base).map_err(|e| match e {
            ConfigError::File { message, .. } => ConfigError::File {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    /// Applies `CRITIQUE_*` variables from the process environment.
    pub fn with_env(self) -> Result<Self, ConfigError> {
        self.with_overrides(env_var)
    }

    pub fn with_overrides(mut self, get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        if let Some(v) = get("CRITIQUE_INDEX") {
            self.index.snapshot = Some(PathBuf::from(v));
        }
        if let Some(v) = get("CRITIQUE_EMBEDDER") {
            self.embedder = v;
        }
        if let Some(v) = get("CRITIQUE_PROVIDER") {
            self.provider = Some(v);
        }
        if let Some(v) = get("CRITIQUE_EXEMPLARS") {
            self.exemplars = Some(PathBuf::from(v));
        }
        if let Some(v) = get("CRITIQUE_JOURNAL_DIR") {
            self.journal_dir = Some(PathBuf::from(v));
        }
        if let Some(v) = get("CRITIQUE_K") {
            self.k = v.parse().map_err(|e| ConfigError::Env {
                var: "CRITIQUE_K",
                message: format!("{v:?}: {e}"),
            })?;
        }
        if let Some(v) = get("CRITIQUE_PORT") {
            self.port = v.parse().map_err(|e| ConfigError::Env {
                var: "CRITIQUE_PORT",
                message: format!("{v:?}: {e}"),
            })?;
        }
        Ok(self)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn resolve_spec(&self, spec: &str) -> String {
        match spec.split_once(':') {
            Some((kind @ ("cassette" | "rules"), path)) => {
                format!("{kind}:{}", self.resolve(Path::new(path)).display())
            }
            _ => spec.to_string(),
        }
    }

    pub fn build_embedder(&self) -> Result<Arc<dyn EmbeddingProvider>, ConfigError> {
        embedder_from_spec(&self.resolve_spec(&self.embedder))
    }

    pub fn build_interpreter(&self) -> Result<Option<Arc<Interpreter>>, ConfigError> {
        let Some(spec) = &self.provider else {
            return Ok(None);
        };
        let mut provider = provider_from_spec(&self.resolve_spec(spec))?;
        if let Some(path) = &self.record {
            provider = Arc::new(RecordingProvider::new(provider, self.resolve(path)));
        }
        let mut interp = Interpreter::new(provider).with_config(self.generation.clone());
        if let Some(p) = &self.exemplars {
            let ex = load_exemplars(self.resolve(p)).map_err(|e| ConfigError::Load(e.to_string()))?;
            interp = interp.with_exemplars(ex);
        }
        Ok(Some(Arc::new(interp)))
    }

    /// `None` when the config names no corpus at all.
    pub fn build_index(
        &self,
        index: &IndexConfig,
        embedder: &dyn EmbeddingProvider,
        exec: Execution,
    ) -> Result<Option<CandidateIndex>, ConfigError> {
        if let Some(snap) = &index.snapshot {
            let path = self.resolve(snap);
            return CandidateIndex::load_for(&path, embedder, exec)
                .map(Some)
                .map_err(|e| ConfigError::Load(format!("{}: {e}", path.display())));
        }
        let (Some(rest), Some(rev)) = (&index.restaurants, &index.reviews) else {
            return Ok(None);
        };
        let restaurants = jsonl::read(self.resolve(rest)).map_err(|e| ConfigError::Load(e.to_string()))?;
        let reviews = jsonl::read(self.resolve(rev)).map_err(|e| ConfigError::Load(e.to_string()))?;
        build_index_from(restaurants, reviews, index, embedder, exec).map(Some)
    }

    pub fn load_eval_dataset(&self) -> Result<Option<Vec<CritiqueRecord>>, ConfigError> {
        self.eval
            .dataset
            .as_ref()
            .map(|p| load_critiques(self.resolve(p)).map_err(|e| ConfigError::Load(e.to_string())))
            .transpose()
    }

    pub fn load_eval_judge(&self) -> Result<Option<AspectJudge>, ConfigError> {
        self.eval
            .judge
            .as_ref()
            .map(|p| AspectJudge::load(self.resolve(p)).map_err(ConfigError::Load))
            .transpose()
    }

    pub fn load_eval_labels(&self) -> Result<Option<FileLabels>, ConfigError> {
        self.eval
            .labels
            .as_ref()
            .map(|p| FileLabels::load(self.resolve(p)).map_err(ConfigError::Load))
            .transpose()
    }
}

pub fn build_index_from(
    restaurants: Vec<critique_core::Restaurant>,
    reviews: Vec<critique_core::Review>,
    index: &IndexConfig,
    embedder: &dyn EmbeddingProvider,
    exec: Execution,
) -> Result<CandidateIndex, ConfigError> {
    let mut ingest = IngestConfig::default();
    if let Some(r) = index.min_rating {
        ingest.min_rating = r;
    }
    let store = ingest_reviews(reviews, restaurants.clone(), ingest).map_err(|e| ConfigError::Load(e.to_string()))?;
    let scorer = scorer_from_spec(index.positivity.as_deref().unwrap_or("lexicon"))?;
    let threshold = index.threshold.unwrap_or(DEFAULT_POSITIVITY_THRESHOLD);
    let candidates =
        build_candidates(&store, scorer.as_ref(), threshold, exec).map_err(|e| ConfigError::Load(e.to_string()))?;
    CandidateIndex::build(candidates, restaurants, embedder, exec).map_err(|e| ConfigError::Load(e.to_string()))
}

fn spec_err(what: &'static str, spec: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Spec {
        what,
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

pub fn embedder_from_spec(spec: &str) -> Result<Arc<dyn EmbeddingProvider>, ConfigError> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "hashbag" if arg.is_empty() => Ok(Arc::new(HashBagEmbedder::default())),
        "hashbag" => {
            let dim: usize = arg.parse().map_err(|_| spec_err("embedder", spec, "dimension must be a positive integer"))?;
            if dim == 0 {
                return Err(spec_err("embedder", spec, "dimension must be a positive integer"));
            }
            Ok(Arc::new(HashBagEmbedder::with_dim(dim)))
        }
        "cassette" => CassetteEmbedder::load(arg)
            .map(|c| Arc::new(c) as Arc<dyn EmbeddingProvider>)
            .map_err(|e| spec_err("embedder", spec, e.to_string())),
        "http" | "https" => {
            let model = env_var("CRITIQUE_EMBED_MODEL").unwrap_or_else(|| "default".into());
            let key = env_var("CRITIQUE_EMBED_KEY");
            Ok(Arc::new(CachedEmbedder::new(HttpEmbedder::new(spec, model, key))))
        }
        _ => Err(spec_err("embedder", spec, "expected hashbag[:DIM], cassette:PATH or http:URL")),
    }
}

pub fn provider_from_spec(spec: &str) -> Result<Arc<dyn CompletionProvider>, ConfigError> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "cassette" => CassetteProvider::load(arg)
            .map(|c| Arc::new(c) as Arc<dyn CompletionProvider>)
            .map_err(|e| spec_err("provider", spec, e.to_string())),
        "rules" => RuleTableProvider::load(arg)
            .map(|c| Arc::new(c) as Arc<dyn CompletionProvider>)
            .map_err(|e| spec_err("provider", spec, e.to_string())),
        "echo" => Ok(Arc::new(EchoProvider(arg.to_string()))),
        "http" | "https" => {
            let model = env_var("CRITIQUE_LM_MODEL").unwrap_or_else(|| "default".into());
            Ok(Arc::new(HttpCompletionProvider::from_env(spec, model, "CRITIQUE_LM_KEY")))
        }
        _ => Err(spec_err("provider", spec, "expected cassette:PATH, rules:PATH, echo:TEXT or http:URL")),
    }
}

pub fn scorer_from_spec(spec: &str) -> Result<Box<dyn PositivityScorer>, ConfigError> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "lexicon" => Ok(Box::new(LexiconScorer::default())),
        "constant" => {
            let v: f64 = arg.parse().map_err(|_| spec_err("positivity", spec, "expected a number"))?;
            Ok(Box::new(ConstantScorer(v)))
        }
        "http" | "https" => Ok(Box::new(HttpPositivityScorer::new(spec, env_var("CRITIQUE_POSITIVITY_KEY")))),
        _ => Err(spec_err("positivity", spec, "expected lexicon, constant:X or http:URL")),
    }
}
