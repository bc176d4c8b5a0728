//! Failure classes and their process exit codes.

use std::fmt;

/// `0` success, `1` numerical failure or failed check, `2` validation
/// failure, `3` resource exhaustion.
#[derive(Clone, Debug, PartialEq)]
pub enum Failure {
    Validation(String),
    Resource(String),
    Numeric(String),
    /// An `expect` value or a suite cross-check did not hold.
    Check(String),
}

impl Failure {
    pub fn from_core(e: symdyn::Error) -> Self {
        match e {
            symdyn::Error::Invalid { .. } => Failure::Validation(e.to_string()),
            e if e.is_resource() => Failure::Resource(e.to_string()),
            e => Failure::Numeric(e.to_string()),
        }
    }

    pub fn with_prefix(self, path: &str) -> Self {
        let f = |m: String| format!("{path}: {m}");
        match self {
            Failure::Validation(m) => Failure::Validation(f(m)),
            Failure::Resource(m) => Failure::Resource(f(m)),
            Failure::Numeric(m) => Failure::Numeric(f(m)),
            Failure::Check(m) => Failure::Check(f(m)),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Numeric(_) | Failure::Check(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Resource(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Validation(_) => "validation",
            Failure::Resource(_) => "resource",
            Failure::Numeric(_) => "numeric",
            Failure::Check(_) => "check",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Resource(m) | Failure::Numeric(m) | Failure::Check(m) => m,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for Failure {}

impl From<symdyn::Error> for Failure {
    fn from(e: symdyn::Error) -> Self {
        Failure::from_core(e)
    }
}
