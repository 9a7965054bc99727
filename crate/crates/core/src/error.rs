use thiserror::Error;

use crate::value::Name;

/// Failures of term evaluation, rule evaluation and firing.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(Name),
    #[error("symbol `{0}` is not in the vocabulary")]
    UnknownSymbol(Name),
    #[error("`{symbol}` has arity {expected} but was applied to {found} arguments")]
    ArityMismatch {
        symbol: Name,
        expected: usize,
        found: usize,
    },
    #[error("type error: {0}")]
    Type(String),
    #[error("choose over `{0}` reached without a choice resolution")]
    UnresolvedChoice(Name),
    #[error("choice resolution does not match the rule: {0}")]
    BadChoice(String),
    #[error("update of static symbol `{0}`")]
    StaticUpdate(Name),
    #[error("universe `{0}` is not declared")]
    UnknownUniverse(Name),
    #[error("choose rule nested inside a var rule")]
    NestedChoice,
    #[error("division by zero")]
    DivisionByZero,
}
