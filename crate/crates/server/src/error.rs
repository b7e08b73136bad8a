use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

/// Failures surfaced on the wire. Each maps to one status code.
#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("image could not be decoded: {0}")]
    BadImage(String),
    #[error("upload exceeds {limit} bytes")]
    PayloadTooLarge { limit: usize },
    #[error("detector unavailable: {0}")]
    AdapterUnavailable(String),
    #[error("no precomputed detections for {0}")]
    MissingPrecomputed(String),
    #[error("scan `{0}` not found")]
    NotFound(String),
    #[error("unknown object class `{0}`")]
    UnknownObjectClass(String),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            Self::BadRequest(_) | Self::UnknownCategory(_) => StatusCode::BAD_REQUEST,
            Self::BadImage(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Self::MissingPrecomputed(_) => StatusCode::FAILED_DEPENDENCY,
            Self::PayloadTooLarge { .. } => StatusCode::PAYLOAD_TOO_LARGE,
            Self::AdapterUnavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            Self::NotFound(_) | Self::UnknownObjectClass(_) => StatusCode::NOT_FOUND,
            Self::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::BadRequest(_) => "BadRequest",
            Self::BadImage(_) => "BadImage",
            Self::PayloadTooLarge { .. } => "PayloadTooLarge",
            Self::AdapterUnavailable(_) => "AdapterUnavailable",
            Self::MissingPrecomputed(_) => "MissingPrecomputed",
            Self::NotFound(_) => "NotFound",
            Self::UnknownObjectClass(_) => "UnknownObjectClass",
            Self::UnknownCategory(_) => "UnknownCategory",
            Self::Internal(_) => "Internal",
        }
    }
}

impl From<accesslens::Error> for ApiError {
    fn from(e: accesslens::Error) -> Self {
        use accesslens::Error as E;
        match e {
            E::AdapterUnavailable(m) => Self::AdapterUnavailable(m),
            E::MissingPrecomputed(m) => Self::MissingPrecomputed(m),
            E::UnknownObjectClass(m) => Self::UnknownObjectClass(m),
            E::UnknownCategory(m) => Self::UnknownCategory(m),
            E::Parse { .. } | E::InconsistentInput(_) | E::UnknownClass(_) | E::UnknownClassId(_) => {
                Self::BadRequest(e.to_string())
            }
            other => Self::Internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if let Self::Internal(m) = &self {
            tracing::error!("{m}");
        }
        let body = ErrorBody {
            error: self.kind(),
            message: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}
