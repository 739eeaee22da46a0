use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::atom::Atom;
use super::term::{Name, Term};

/// A finite map from variable names to terms; identity outside its domain.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Substitution {
    map: BTreeMap<Name, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Name, Term)>) -> Substitution {
        let mut s = Substitution::new();
        for (v, t) in pairs {
            s.insert(v, t);
        }
        s
    }

    /// Binds `v` to `t`. A binding of a variable to itself is kept, which lets
    /// one-way matching pin a variable in place.
    pub fn insert(&mut self, v: Name, t: Term) {
        self.map.insert(v, t);
    }

    /// Drops bindings of variables to themselves.
    pub fn normalized(mut self) -> Substitution {
        self.map.retain(|v, t| !matches!(t, Term::Var(w) if w == v));
        self
    }

    pub fn get(&self, v: &str) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn remove(&mut self, v: &str) -> Option<Term> {
        self.map.remove(v)
    }

    pub fn contains(&self, v: &str) -> bool {
        self.map.contains_key(v)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Term)> {
        self.map.iter()
    }

    pub fn apply_term(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| t.clone()),
            _ => t.clone(),
        }
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        Atom {
            predicate: a.predicate.clone(),
            args: a.args.iter().map(|t| self.apply_term(t)).collect(),
        }
    }

    pub fn apply_atoms<'a>(&self, atoms: impl IntoIterator<Item = &'a Atom>) -> Vec<Atom> {
        atoms.into_iter().map(|a| self.apply_atom(a)).collect()
    }

    /// The composition `other ∘ self`: apply `self` first, then `other`.
    pub fn then(&self, other: &Substitution) -> Substitution {
        let mut out = Substitution::new();
        for (v, t) in &self.map {
            out.insert(v.clone(), other.apply_term(t));
        }
        for (v, t) in &other.map {
            if !self.map.contains_key(v) {
                out.insert(v.clone(), t.clone());
            }
        }
        out.normalized()
    }

    /// Keeps only the bindings whose variable satisfies `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&str) -> bool) -> Substitution {
        Substitution {
            map: self
                .map
                .iter()
                .filter(|(v, _)| keep(v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} -> {t}")?;
        }
        f.write_str("}")
    }
}

pub fn apply(atom: &Atom, s: &Substitution) -> Atom {
    s.apply_atom(atom)
}
