use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

use super::term::{Name, Term};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: Name,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<Name>, args: Vec<Term>) -> Atom {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// Variables in order of first occurrence.
    pub fn vars(&self) -> impl Iterator<Item = &Name> + '_ {
        let mut seen = BTreeSet::new();
        self.args
            .iter()
            .filter_map(Term::as_var)
            .filter(move |v| seen.insert(*v))
    }

    pub fn var_set(&self) -> BTreeSet<Name> {
        self.args.iter().filter_map(Term::as_var).cloned().collect()
    }

    pub fn contains_var(&self, v: &str) -> bool {
        self.args.iter().any(|t| matches!(t, Term::Var(x) if &**x == v))
    }

    /// Argument indices (0-based) holding the variable `v`.
    pub fn positions_of(&self, v: &str) -> Vec<usize> {
        self.args
            .iter()
            .enumerate()
            .filter(|(_, t)| matches!(t, Term::Var(x) if &**x == v))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn nulls(&self) -> impl Iterator<Item = u64> + '_ {
        self.args.iter().filter_map(|t| match t {
            Term::Null(n) => Some(*n),
            _ => None,
        })
    }

    pub fn constants(&self) -> impl Iterator<Item = &Name> + '_ {
        self.args.iter().filter_map(|t| match t {
            Term::Const(c) => Some(c),
            _ => None,
        })
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(Term::is_var)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

impl Serialize for Atom {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

pub fn vars_of<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> BTreeSet<Name> {
    atoms
        .into_iter()
        .flat_map(|a| a.args.iter().filter_map(Term::as_var).cloned())
        .collect()
}

pub fn write_atoms(f: &mut fmt::Formatter<'_>, atoms: &[Atom]) -> fmt::Result {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}
