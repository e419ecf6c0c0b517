use thiserror::Error;

/// Errors raised by the wire codec and record validation.
#[derive(Debug, Error)]
pub enum PayloadError {
    /// The bytes are not syntactically valid JSON.
    #[error("malformed payload: {0}")]
    Parse(String),
    /// Valid JSON but not the expected shape (missing field, wrong type).
    #[error("payload schema: {0}")]
    Schema(String),
    /// Shape is fine but a field violates a record invariant.
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },
}

impl PayloadError {
    pub fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        PayloadError::Validation {
            field,
            reason: reason.into(),
        }
    }

    /// Name of the offending field, when the error is tied to one.
    pub fn field(&self) -> Option<&str> {
        match self {
            PayloadError::Validation { field, .. } => Some(field),
            _ => None,
        }
    }
}
