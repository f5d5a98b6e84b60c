//! The rule language: declarations, simple-event rules, meta-event rules and
//! domain constraints.

mod ast;
mod parser;
mod validate;

use thiserror::Error;

use crate::model::Name;

pub use ast::{Atom, Boundary, CompareOp, Head, Literal, Rule, RuleKind, Tes};
pub use parser::{parse_facts, parse_tes};
pub use validate::stratify;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("{line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("line {line}: predicate {name} declared twice")]
    DuplicateDeclaration { name: Name, line: usize },
    #[error("line {line}: undeclared predicate {name}")]
    UndeclaredPredicate { name: Name, line: usize },
    #[error("line {line}: {pred} expects {expected} arguments, found {found}")]
    ArityMismatch {
        pred: Name,
        expected: String,
        found: usize,
        line: usize,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("line {line}: sort conflict for {variable}: {message}")]
    SortConflict {
        variable: Name,
        line: usize,
        message: String,
    },
    #[error("line {line}: unsafe variable {variable} in `{rule}`")]
    SafetyViolation {
        rule: String,
        variable: Name,
        line: usize,
    },
    #[error("meta rules are not stratified: negation inside cycle {}", fmt_cycle(.0))]
    NotStratified(Vec<Name>),
    #[error("nonpersistent predicate {0} has an existence rule but no window rule")]
    MissingWindowRule(Name),
}

fn fmt_cycle(preds: &[Name]) -> String {
    preds
        .iter()
        .map(Name::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}
