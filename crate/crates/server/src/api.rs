use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use critique_core::dialog::DialogError;
use critique_core::evalkit::EvalError;
use critique_core::interpreter::InterpretError;
use critique_core::retrieval::{EmbedError, RetrievalError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    BadInput,
    NoIndex,
    ProviderDown,
    NotFound,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::BadInput => StatusCode::BAD_REQUEST,
            ErrorCode::NoIndex => StatusCode::SERVICE_UNAVAILABLE,
            ErrorCode::ProviderDown => StatusCode::BAD_GATEWAY,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::BadInput => "BAD_INPUT",
            ErrorCode::NoIndex => "NO_INDEX",
            ErrorCode::ProviderDown => "PROVIDER_DOWN",
            ErrorCode::NotFound => "NOT_FOUND",
            ErrorCode::Internal => "INTERNAL",
        }
    }

    /// Process exit status used by the CLI for this code.
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorCode::BadInput => 2,
            ErrorCode::NoIndex => 3,
            ErrorCode::ProviderDown => 4,
            ErrorCode::NotFound => 5,
            ErrorCode::Internal => 1,
        }
    }
}

impl std::fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    pub retriable: bool,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            retriable: false,
        }
    }

    pub fn bad_input(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadInput, message)
    }

    pub fn no_index() -> Self {
        Self::new(ErrorCode::NoIndex, "no candidate index is loaded")
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Internal, message)
    }

    fn provider(message: impl Into<String>, retriable: bool) -> Self {
        ApiError {
            code: ErrorCode::ProviderDown,
            message: message.into(),
            retriable,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.code == ErrorCode::Internal {
            tracing::error!(message = %self.message, "internal error");
        }
        (self.code.status(), Json(self)).into_response()
    }
}

impl From<InterpretError> for ApiError {
    fn from(e: InterpretError) -> Self {
        let msg = e.to_string();
        match e {
            InterpretError::EmptyCritique => ApiError::bad_input(msg),
            InterpretError::Provider(ref p) => ApiError::provider(msg, p.retriable()),
            InterpretError::NoCompletions | InterpretError::Degenerate(_) => ApiError::provider(msg, false),
            InterpretError::NoExemplars | InterpretError::BadExemplar(_) | InterpretError::BadConfig(_) => {
                ApiError::internal(msg)
            }
        }
    }
}

impl From<RetrievalError> for ApiError {
    fn from(e: RetrievalError) -> Self {
        let msg = e.to_string();
        match e {
            RetrievalError::EmptyCritique | RetrievalError::ZeroK | RetrievalError::MissingPreference(_) => {
                ApiError::bad_input(msg)
            }
            RetrievalError::Embed(EmbedError::EmptyText) => ApiError::bad_input(msg),
            RetrievalError::Embed(ref inner) => ApiError::provider(msg, inner.retriable()),
            RetrievalError::EmptyIndex => ApiError::new(ErrorCode::NoIndex, msg),
            _ => ApiError::internal(msg),
        }
    }
}

impl From<DialogError> for ApiError {
    fn from(e: DialogError) -> Self {
        match e {
            DialogError::NotFound(_) => ApiError::new(ErrorCode::NotFound, e.to_string()),
            DialogError::EmptyCritique | DialogError::ZeroK => ApiError::bad_input(e.to_string()),
            DialogError::Interpret(i) => i.into(),
            DialogError::Retrieval(r) => r.into(),
            DialogError::Journal(_) => ApiError::internal(e.to_string()),
        }
    }
}

impl From<EvalError> for ApiError {
    fn from(e: EvalError) -> Self {
        let msg = e.to_string();
        match e {
            EvalError::EmptyDataset
            | EvalError::Config(_)
            | EvalError::BadFolds(_)
            | EvalError::TooFewQueries { .. }
            | EvalError::MissingLabels(_)
            | EvalError::Metric(_) => ApiError::bad_input(msg),
            EvalError::Interpret { source, query_id } => {
                let mut api = ApiError::from(source);
                api.message = format!("interpreting {query_id}: {}", api.message);
                api
            }
            EvalError::Retrieval(r) => r.into(),
            EvalError::Rerank(_) | EvalError::Ranker(_) => ApiError::internal(msg),
        }
    }
}
