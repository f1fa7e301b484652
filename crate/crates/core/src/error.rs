use thiserror::Error;

use crate::print::{show_set, show_type};
use crate::syntax::{CaptureSet, Type};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    /// An operand position that must be a variable holds a compound term.
    MnfViolation,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {}{message}", if *.kind == ParseErrorKind::MnfViolation { "not in monadic normal form: " } else { "" })]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// Failures of the checkers. Every variant that stems from a specific rule
/// carries the rule's name.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unbound type variable `{0}`")]
    UnboundTypeVariable(String),
    #[error("ill-formed type: `{var}` {detail}")]
    IllFormedType { var: String, detail: String },
    #[error("[{rule}] expected a function, found `{}`", show_type(.found))]
    NotAFunction { rule: &'static str, found: Type },
    #[error("[{rule}] expected a type function, found `{}`", show_type(.found))]
    NotATypeFunction { rule: &'static str, found: Type },
    #[error("[{rule}] expected a boxed value, found `{}`", show_type(.found))]
    NotABoxed { rule: &'static str, found: Type },
    #[error("[{rule}] `{}` is not a subtype of `{}`", show_type(.actual), show_type(.expected))]
    SubtypeFailure {
        rule: &'static str,
        actual: Type,
        expected: Type,
    },
    #[error("[{rule}] capture set `{}` escapes the environment", show_set(.set))]
    EscapeViolation { rule: &'static str, set: CaptureSet },
    #[error("[{rule}] `{}` does not subcapture `{}`", show_set(.sub), show_set(.sup))]
    SubcaptureFailure {
        rule: &'static str,
        sub: CaptureSet,
        sup: CaptureSet,
    },
    #[error("[{rule}] cannot adapt `{}` to `{}`", show_type(.actual), show_type(.expected))]
    AdaptFailure {
        rule: &'static str,
        actual: Type,
        expected: Type,
    },
    #[error("fuel exhausted")]
    FuelExhausted,
}

impl TypeError {
    /// Input problems (as opposed to a genuine typing failure).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            TypeError::UnboundVariable(_)
                | TypeError::UnboundTypeVariable(_)
                | TypeError::IllFormedType { .. }
        )
    }

    /// A short stable name for the variant, used in reports.
    pub fn class(&self) -> &'static str {
        match self {
            TypeError::UnboundVariable(_) => "UnboundVariable",
            TypeError::UnboundTypeVariable(_) => "UnboundTypeVariable",
            TypeError::IllFormedType { .. } => "IllFormedType",
            TypeError::NotAFunction { .. } => "NotAFunction",
            TypeError::NotATypeFunction { .. } => "NotATypeFunction",
            TypeError::NotABoxed { .. } => "NotABoxed",
            TypeError::SubtypeFailure { .. } => "SubtypeFailure",
            TypeError::EscapeViolation { .. } => "EscapeViolation",
            TypeError::SubcaptureFailure { .. } => "SubcaptureFailure",
            TypeError::AdaptFailure { .. } => "AdaptFailure",
            TypeError::FuelExhausted => "FuelExhausted",
        }
    }
}

pub type TResult<T> = Result<T, TypeError>;
