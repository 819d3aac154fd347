use serde::Serialize;
use serde_json::Value;
use xurdf::model::{Finding as ModelFinding, Severity};
use xurdf::urdf::UrdfError;
use xurdf::LoadError;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARSE: u8 = 1;
pub const EXIT_SEMANTIC: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Warnings,
    Error,
}

/// Broad class of a finding; `code` carries the precise kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Category {
    Io,
    XmlSyntax,
    XmlSemantics,
    Extension,
    Config,
    Build,
    Validation,
    Numerics,
}

#[derive(Clone, Debug, Serialize)]
pub struct Finding {
    pub severity: &'static str,
    pub category: Category,
    pub code: String,
    pub subject: String,
    pub message: String,
}

impl Finding {
    pub fn error(
        category: Category,
        code: &str,
        subject: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Finding {
            severity: "error",
            category,
            code: code.into(),
            subject: subject.into(),
            message: message.into(),
        }
    }

    pub fn warning(
        category: Category,
        code: &str,
        subject: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Finding {
            severity: "warning",
            ..Finding::error(category, code, subject, message)
        }
    }

    pub fn from_model(f: &ModelFinding) -> Self {
        let make = match f.severity {
            Severity::Error => Finding::error,
            Severity::Warning => Finding::warning,
        };
        make(
            Category::Validation,
            &f.code,
            f.subject.clone(),
            f.message.clone(),
        )
    }

    /// Maps a load failure to its finding and exit code.
    pub fn from_load(e: &LoadError) -> (Self, u8) {
        let (category, exit) = match e {
            LoadError::Urdf(UrdfError::XmlSyntax { .. }) => (Category::XmlSyntax, EXIT_PARSE),
            LoadError::Urdf(_) => (Category::XmlSemantics, EXIT_PARSE),
            LoadError::Extension(_) => (Category::Extension, EXIT_PARSE),
            LoadError::Build(_) => (Category::Build, EXIT_SEMANTIC),
        };
        (
            Finding::error(category, e.code(), e.subject(), e.to_string()),
            exit,
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CliReport {
    pub schema_version: u32,
    pub command: String,
    pub status: Status,
    pub payload: Value,
    pub findings: Vec<Finding>,
}

/// A finished command: its report and process exit code.
#[derive(Debug)]
pub struct Outcome {
    pub exit: u8,
    pub report: CliReport,
}

impl Outcome {
    /// Status follows the exit code and the presence of warnings.
    pub fn new(command: &str, exit: u8, payload: Value, findings: Vec<Finding>) -> Self {
        let status = if exit != EXIT_OK {
            Status::Error
        } else if findings.is_empty() {
            Status::Ok
        } else {
            Status::Warnings
        };
        Outcome {
            exit,
            report: CliReport {
                schema_version: SCHEMA_VERSION,
                command: command.into(),
                status,
                payload,
                findings,
            },
        }
    }

    pub fn failed(command: &str, exit: u8, finding: Finding) -> Self {
        Outcome::new(command, exit, Value::Null, vec![finding])
    }
}
