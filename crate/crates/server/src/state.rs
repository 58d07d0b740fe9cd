use crate::config::{AppConfig, ConfigError};
use critique_core::dataset::CritiqueRecord;
use critique_core::dialog::DialogConfig;
use critique_core::evalkit::{AspectJudge, EvalConfig, FileLabels};
use critique_core::interpreter::{CompletionProvider, ProviderError};
use critique_core::retrieval::EmbeddingProvider;
use critique_core::{CandidateIndex, Execution, GenerationConfig, Interpreter, SessionEngine};
use std::sync::Arc;

/// Stands in when no completion provider is configured.
struct Unconfigured;

impl CompletionProvider for Unconfigured {
    fn complete(&self, _prompt: &str, _config: &GenerationConfig) -> Result<Vec<String>, ProviderError> {
        Err(ProviderError::Io("no completion provider is configured".into()))
    }
}

pub struct EvalState {
    pub dataset: Option<Vec<CritiqueRecord>>,
    pub judge: Option<AspectJudge>,
    pub labels: Option<FileLabels>,
    pub index: Option<Arc<CandidateIndex>>,
    pub embedder: Arc<dyn EmbeddingProvider>,
    pub interpreter: Option<Arc<Interpreter>>,
    pub config: EvalConfig,
}

pub struct AppState {
    pub index: Option<Arc<CandidateIndex>>,
    pub embedder: Arc<dyn EmbeddingProvider>,
    pub interpreter: Arc<Interpreter>,
    pub has_interpreter: bool,
    pub engine: Option<Arc<SessionEngine>>,
    pub k: usize,
    pub eval: EvalState,
    pub exec: Execution,
}

impl AppState {
    pub fn new(
        index: Option<Arc<CandidateIndex>>,
        embedder: Arc<dyn EmbeddingProvider>,
        interpreter: Option<Arc<Interpreter>>,
        dialog: DialogConfig,
    ) -> Result<Self, ConfigError> {
        let has_interpreter = interpreter.is_some();
        let interpreter = interpreter.unwrap_or_else(|| Arc::new(Interpreter::new(Arc::new(Unconfigured))));
        let engine = index
            .clone()
            .map(|ix| {
                SessionEngine::new(ix, embedder.clone(), interpreter.clone())
                    .with_config(dialog)
                    .map(Arc::new)
                    .map_err(|e| ConfigError::Load(e.to_string()))
            })
            .transpose()?;
        Ok(AppState {
            eval: EvalState {
                dataset: None,
                judge: None,
                labels: None,
                index: None,
                embedder: embedder.clone(),
                interpreter: None,
                config: EvalConfig::default(),
            },
            index,
            embedder,
            interpreter,
            has_interpreter,
            engine,
            k: crate::config::DEFAULT_K,
            exec: Execution::default(),
        })
    }

    pub fn from_config(cfg: &AppConfig) -> Result<Self, ConfigError> {
        let exec = Execution::default();
        let embedder = cfg.build_embedder()?;
        let index = cfg.build_index(&cfg.index, embedder.as_ref(), exec)?.map(Arc::new);
        let interpreter = cfg.build_interpreter()?;
        let dialog = DialogConfig {
            exclude_shown: cfg.exclude_shown,
            journal_dir: cfg.journal_dir.as_ref().map(|p| cfg.resolve(p)),
        };
        let mut state = AppState::new(index, embedder, interpreter.clone(), dialog)?;
        state.k = cfg.k;
        state.exec = exec;

        let ev = &cfg.eval;
        if let Some(spec) = &ev.embedder {
            let probe = AppConfig {
                embedder: spec.clone(),
                ..cfg.clone()
            };
            state.eval.embedder = probe.build_embedder()?;
        }
        if let Some(ix) = &ev.index {
            state.eval.index = cfg.build_index(ix, state.eval.embedder.as_ref(), exec)?.map(Arc::new);
        } else if ev.embedder.is_some() {
            return Err(ConfigError::Load("eval.embedder needs an eval.index built with it".into()));
        }
        state.eval.interpreter = match &ev.provider {
            Some(spec) => AppConfig {
                provider: Some(spec.clone()),
                ..cfg.clone()
            }
            .build_interpreter()?,
            None => interpreter,
        };
        state.eval.dataset = cfg.load_eval_dataset()?;
        state.eval.judge = cfg.load_eval_judge()?;
        state.eval.labels = cfg.load_eval_labels()?;
        state.eval.config = ev.config.clone();
        Ok(state)
    }
}
