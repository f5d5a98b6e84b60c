use thiserror::Error;

use crate::lang::SpecError;
use crate::query::{EvalError, InvalidSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid specification: {0}")]
    InvalidSpec(#[from] InvalidSpec),
    #[error("enumeration stopped after {cap} candidate subsets")]
    CapExceeded { cap: usize },
    #[error("guard violated: {0}")]
    GuardViolated(String),
    #[error("{0} facts is too many for exhaustive subset enumeration")]
    TooLarge(usize),
}
