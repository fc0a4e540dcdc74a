use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::{json, Value};

/// Success body: `{"data": ...}`.
pub struct Data<T>(pub T);

impl<T: Serialize> IntoResponse for Data<T> {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Envelope<T> {
            data: T,
        }
        Json(Envelope { data: self.0 }).into_response()
    }
}

/// Error body: `{"error": {"code", "message", "details"?}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), details: None }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code, "message": self.message });
        if let Some(d) = self.details {
            error["details"] = d;
        }
        (self.status, Json(json!({ "error": error }))).into_response()
    }
}

impl From<popmine::Error> for ApiError {
    fn from(e: popmine::Error) -> Self {
        use popmine::Error as E;
        let (status, code) = match &e {
            E::Conflict(_) | E::DuplicateAnnotation(_) | E::DuplicateId(_) => (StatusCode::CONFLICT, "conflict"),
            E::Argument(_) => (StatusCode::BAD_REQUEST, "invalid_argument"),
            E::Invalid { .. } | E::Line { .. } | E::Json(_) | E::Xml { .. } | E::FeedFormat(_) | E::Dimension { .. } => {
                (StatusCode::BAD_REQUEST, "invalid_input")
            }
            E::Io { .. } | E::Training(_) => {
                tracing::error!("{e}");
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        };
        ApiError::new(status, code, e.to_string())
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
