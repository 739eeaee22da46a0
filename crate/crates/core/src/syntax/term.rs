use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

/// Interned-by-sharing symbol used for predicate, variable and constant names.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// A term is a variable, a constant, or a labeled null created by the chase.
///
/// The derived ordering puts variables before constants before nulls; the chase
/// relies on constants sorting before nulls when it orders triggers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Name),
    Const(Name),
    Null(u64),
}

impl Term {
    pub fn var(s: &str) -> Term {
        Term::Var(name(s))
    }

    pub fn constant(s: &str) -> Term {
        Term::Const(name(s))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Term::Null(_))
    }

    pub fn as_var(&self) -> Option<&Name> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

/// Constants that are not plain lowercase identifiers need quoting to re-parse.
fn constant_needs_quotes(c: &str) -> bool {
    let mut chars = c.chars();
    match chars.next() {
        Some(first) if first.is_ascii_lowercase() || first.is_ascii_digit() => {
            !c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
        }
        _ => true,
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) if constant_needs_quotes(c) => {
                write!(f, "'{}'", c.replace('\\', "\\\\").replace('\'', "\\'"))
            }
            Term::Const(c) => write!(f, "{c}"),
            Term::Null(i) => write!(f, "_n{i}"),
        }
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
