use std::fmt;

use orthonn::Error as LibError;
use serde_json::json;

/// User-facing input problem (exit code 1), optionally tied to a config field.
#[derive(Debug)]
pub struct Validation {
    pub field: Option<String>,
    pub message: String,
    /// Error kind reported in the JSON body [default: Validation].
    pub kind: Option<&'static str>,
}

impl Validation {
    pub fn field(field: &str, message: impl fmt::Display) -> Self {
        Validation { field: Some(field.to_string()), message: message.to_string(), kind: None }
    }

    pub fn with_kind(mut self, kind: &'static str) -> Self {
        self.kind = Some(kind);
        self
    }
}

impl fmt::Display for Validation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "{field}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for Validation {}

pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

fn library_is_validation(e: &LibError) -> bool {
    matches!(
        e,
        LibError::ZeroVector
            | LibError::DimensionTooSmall(_)
            | LibError::LayoutMismatch { .. }
            | LibError::WidthMismatch { .. }
            | LibError::InvalidGate(..)
            | LibError::OverlappingGates(_)
            | LibError::NotOrthogonal { .. }
            | LibError::NotSquare { .. }
            | LibError::NormError { .. }
            | LibError::LengthMismatch(..)
            | LibError::InvalidPlan(_)
            | LibError::DimensionMismatch { .. }
            | LibError::Parse { .. }
            | LibError::NonBinaryLabel { .. }
            | LibError::SingleClass
            | LibError::Invalid(_)
    )
}

fn library_kind(e: &LibError) -> &'static str {
    match e {
        LibError::ZeroVector => "ZeroVector",
        LibError::NotOrthogonal { .. } => "NotOrthogonal",
        LibError::NotSquare { .. } => "NotSquare",
        LibError::NonFiniteLoss { .. } => "NonFiniteLoss",
        LibError::Parse { .. } => "Parse",
        LibError::SingleClass => "SingleClass",
        LibError::DimensionMismatch { .. } => "DimensionMismatch",
        LibError::LengthMismatch(..) => "LengthMismatch",
        LibError::NonBinaryLabel { .. } => "NonBinaryLabel",
        LibError::Io(_) => "Io",
        _ => "Library",
    }
}

/// Exit code and machine-readable JSON body for an error.
pub fn report(err: &anyhow::Error) -> (i32, serde_json::Value) {
    let message = format!("{err:#}");
    for cause in err.chain() {
        if let Some(v) = cause.downcast_ref::<Validation>() {
            return (
                EXIT_VALIDATION,
                json!({ "error": "validation", "kind": v.kind.unwrap_or("Validation"), "field": v.field, "message": message }),
            );
        }
        if let Some(e) = cause.downcast_ref::<LibError>() {
            let (code, class) = if library_is_validation(e) { (EXIT_VALIDATION, "validation") } else { (EXIT_RUNTIME, "runtime") };
            let mut body = json!({ "error": class, "kind": library_kind(e), "field": null, "message": message });
            if let LibError::NotOrthogonal { defect } = e {
                body["defect"] = json!(defect);
            }
            return (code, body);
        }
    }
    (EXIT_RUNTIME, json!({ "error": "runtime", "kind": "Runtime", "field": null, "message": message }))
}
