//! Elements of the superuniverse.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

/// Shared, cheaply clonable identifier used for symbols, universes and
/// named elements.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// The tag of a named element. Integers, booleans and `undef` carry their
/// own tags in [`Value`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementKind {
    Datum,
    Agent,
    Mode,
    Opaque,
}

impl ElementKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ElementKind::Datum => "datum",
            ElementKind::Agent => "agent",
            ElementKind::Mode => "mode",
            ElementKind::Opaque => "opaque",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "datum" => ElementKind::Datum,
            "agent" => ElementKind::Agent,
            "mode" => ElementKind::Mode,
            "opaque" => ElementKind::Opaque,
            _ => return None,
        })
    }
}

/// An element of the superuniverse.
///
/// Equality is structural; values with different tags are never equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Undef,
    Bool(bool),
    Int(i64),
    Datum(Name),
    Agent(Name),
    Mode(Name),
    Opaque(Name),
}

impl Value {
    pub const TRUE: Value = Value::Bool(true);
    pub const FALSE: Value = Value::Bool(false);

    pub fn element(kind: ElementKind, n: &str) -> Value {
        let n = name(n);
        match kind {
            ElementKind::Datum => Value::Datum(n),
            ElementKind::Agent => Value::Agent(n),
            ElementKind::Mode => Value::Mode(n),
            ElementKind::Opaque => Value::Opaque(n),
        }
    }

    pub fn datum(n: &str) -> Value {
        Value::Datum(name(n))
    }

    pub fn agent(n: &str) -> Value {
        Value::Agent(name(n))
    }

    pub fn mode(n: &str) -> Value {
        Value::Mode(name(n))
    }

    pub fn opaque(n: &str) -> Value {
        Value::Opaque(name(n))
    }

    pub fn is_undef(&self) -> bool {
        matches!(self, Value::Undef)
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Name and kind of a named element, `None` for integers, booleans and undef.
    pub fn element_name(&self) -> Option<(ElementKind, &str)> {
        match self {
            Value::Datum(n) => Some((ElementKind::Datum, n)),
            Value::Agent(n) => Some((ElementKind::Agent, n)),
            Value::Mode(n) => Some((ElementKind::Mode, n)),
            Value::Opaque(n) => Some((ElementKind::Opaque, n)),
            _ => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Value::Undef => "undef",
            Value::Bool(_) => "boolean",
            Value::Int(_) => "integer",
            Value::Datum(_) => "datum",
            Value::Agent(_) => "agent-id",
            Value::Mode(_) => "mode",
            Value::Opaque(_) => "opaque",
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Undef => f.write_str("undef"),
            Value::Bool(true) => f.write_str("true"),
            Value::Bool(false) => f.write_str("false"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Datum(n) | Value::Agent(n) | Value::Mode(n) | Value::Opaque(n) => {
                f.write_str(n)
            }
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logic_constants_are_distinct() {
        assert_ne!(Value::TRUE, Value::FALSE);
        assert_ne!(Value::Undef, Value::TRUE);
        assert_ne!(Value::Undef, Value::FALSE);
    }

    #[test]
    fn different_tags_never_equal() {
        assert_ne!(Value::datum("x"), Value::agent("x"));
        assert_ne!(Value::Int(0), Value::FALSE);
        assert_ne!(Value::Int(1), Value::TRUE);
    }
}
