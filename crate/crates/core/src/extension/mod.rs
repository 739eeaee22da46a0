//! Body/head pairs reachable by unfolding rule heads into rule bodies.

mod bound;
mod canonical;

use std::collections::HashMap;

use serde::Serialize;

pub use bound::{bell, bound_b, type_equivalent, BigValue, BoundReport};
pub use canonical::{canonical_pair, pairs_isomorphic};

use crate::syntax::{mgu, Atom, Name, Program, Substitution, Term};

pub const DEFAULT_MAX_PAIRS: usize = 100_000;

/// How a pair entered the set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    /// A rule body with one of the rule's head atoms.
    Rule { rule: Name, head_index: usize },
    /// The head of base pair `base` unified into body atom `atom` of pair `source`.
    Unfold {
        base: usize,
        source: usize,
        atom: Atom,
        eta1: Substitution,
        eta2: Substitution,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtensionPair {
    pub id: usize,
    pub body: Vec<Atom>,
    pub head: Atom,
    pub level: usize,
    pub origin: Origin,
}

impl ExtensionPair {
    pub fn vars(&self) -> std::collections::BTreeSet<Name> {
        crate::syntax::vars_of(self.body.iter().chain(std::iter::once(&self.head)))
    }
}

impl std::fmt::Display for ExtensionPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("<{")?;
        crate::syntax::atom::write_atoms(f, &self.body)?;
        write!(f, "}}, {}>", self.head)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_pairs: usize,
    pub max_body: usize,
}

impl Limits {
    pub fn for_program(p: &Program, max_pairs: usize) -> Limits {
        Limits {
            max_pairs,
            max_body: 8 * p.max_body().max(1),
        }
    }
}

type PairKey = (Vec<Atom>, Atom);

#[derive(Clone, Debug, Default)]
pub struct ExtensionSet {
    pub pairs: Vec<ExtensionPair>,
    pub iteration: usize,
    pub saturated: bool,
    pub capped: bool,
    /// Set once `max_pairs` stops further growth.
    pub full: bool,
    base_len: usize,
    index: HashMap<PairKey, usize>,
}

impl ExtensionSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The pairs of the base level.
    pub fn base(&self) -> &[ExtensionPair] {
        &self.pairs[..self.base_len]
    }

    pub fn contains(&self, body: &[Atom], head: &Atom) -> bool {
        let (b, h, _) = canonical_pair(body, head);
        self.index.contains_key(&(b, h))
    }

    pub fn find(&self, body: &[Atom], head: &Atom) -> Option<&ExtensionPair> {
        let (b, h, _) = canonical_pair(body, head);
        self.index.get(&(b, h)).map(|&i| &self.pairs[i])
    }

    /// Ids of the pairs added at `level`.
    pub fn level_ids(&self, level: usize) -> impl Iterator<Item = usize> + '_ {
        self.pairs
            .iter()
            .filter(move |p| p.level == level)
            .map(|p| p.id)
    }

    /// The derivation chain of a pair, from the pair itself back to its rule.
    pub fn provenance(&self, id: usize) -> Vec<&ExtensionPair> {
        let mut out = vec![&self.pairs[id]];
        let mut cur = id;
        while let Origin::Unfold { source, .. } = &self.pairs[cur].origin {
            cur = *source;
            out.push(&self.pairs[cur]);
        }
        out
    }

    fn insert(&mut self, body: Vec<Atom>, head: Atom, level: usize, origin: Origin) -> bool {
        let (body, head, _) = canonical_pair(&body, &head);
        let key = (body, head);
        if self.index.contains_key(&key) {
            return false;
        }
        let id = self.pairs.len();
        self.index.insert(key.clone(), id);
        self.pairs.push(ExtensionPair {
            id,
            body: key.0,
            head: key.1,
            level,
            origin,
        });
        true
    }

    /// Performs one unfolding round over the pairs of the latest level.
    /// Returns the ids of the new pairs.
    pub fn step(&mut self, limits: Limits) -> Vec<usize> {
        let level = self.iteration;
        let frontier: Vec<usize> = self.level_ids(level).collect();
        let start = self.pairs.len();
        let mut candidates = Vec::new();
        for &source in &frontier {
            for base in 0..self.base_len {
                candidates.extend(unfold(&self.pairs[base], &self.pairs[source]));
            }
        }
        self.iteration += 1;
        for (body, head, origin) in candidates {
            if self.pairs.len() >= limits.max_pairs {
                self.capped = true;
                self.full = true;
                break;
            }
            if body.len() > limits.max_body {
                self.capped = true;
                continue;
            }
            self.insert(body, head, level + 1, origin);
        }
        if self.pairs.len() == start && !self.capped {
            self.saturated = true;
        }
        (start..self.pairs.len()).collect()
    }
}

fn rename(atom: &Atom, prefix: &str) -> Atom {
    Atom {
        predicate: atom.predicate.clone(),
        args: atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => Term::Var(Name::from(format!("{prefix}{v}").as_str())),
                other => other.clone(),
            })
            .collect(),
    }
}

/// An existential variable `z` of `h1` stands for a fresh null, so it may only
/// meet variables of `b` that occur in no other body atom, and never a
/// constant or another term of `h1`.
fn null_stays_local(
    z: &Name,
    h1: &Atom,
    b: &Atom,
    body: &[Atom],
    eta1: &Substitution,
    eta2: &Substitution,
) -> bool {
    let img = eta1.apply_term(&Term::Var(z.clone()));
    if !img.is_var() {
        return false;
    }
    let clash = h1
        .vars()
        .any(|w| w != z && eta1.apply_term(&Term::Var(w.clone())) == img);
    if clash {
        return false;
    }
    b.vars()
        .filter(|v| eta2.apply_term(&Term::Var((*v).clone())) == img)
        .all(|v| body.iter().all(|a| a == b || !a.contains_var(v)))
}

/// All unfoldings of the base pair's head into the body atoms of `source`.
fn unfold(base: &ExtensionPair, source: &ExtensionPair) -> Vec<(Vec<Atom>, Atom, Origin)> {
    let b1: Vec<Atom> = base.body.iter().map(|a| rename(a, "U")).collect();
    let h1 = rename(&base.head, "U");
    let body_vars = crate::syntax::vars_of(&b1);
    let existentials: Vec<Name> = h1.vars().filter(|v| !body_vars.contains(*v)).cloned().collect();
    let mut out = Vec::new();
    for b in &source.body {
        let Some((eta1, eta2)) = mgu(&h1, b) else {
            continue;
        };
        if !existentials
            .iter()
            .all(|z| null_stays_local(z, &h1, b, &source.body, &eta1, &eta2))
        {
            continue;
        }
        let target = eta2.apply_atom(b);
        let mut body = eta1.apply_atoms(&b1);
        for a in &source.body {
            let img = eta2.apply_atom(a);
            if img != target {
                body.push(img);
            }
        }
        let head = eta2.apply_atom(&source.head);
        out.push((
            body,
            head,
            Origin::Unfold {
                base: base.id,
                source: source.id,
                atom: b.clone(),
                eta1,
                eta2,
            },
        ));
    }
    out
}

/// One pair per rule and head atom, deduplicated up to renaming.
pub fn sigma0(p: &Program) -> ExtensionSet {
    let mut set = ExtensionSet::default();
    for rule in &p.rules {
        for (i, h) in rule.head.iter().enumerate() {
            set.insert(
                rule.body.clone(),
                h.clone(),
                0,
                Origin::Rule {
                    rule: rule.label.clone(),
                    head_index: i,
                },
            );
        }
    }
    set.base_len = set.pairs.len();
    if set.pairs.is_empty() {
        set.saturated = true;
    }
    set
}

/// `current` extended by one unfolding round against `base`.
pub fn extend_step(base: &ExtensionSet, current: &ExtensionSet, limits: Limits) -> ExtensionSet {
    debug_assert_eq!(base.base_len, current.base_len);
    let mut next = current.clone();
    next.step(limits);
    next
}

/// Unfolds until no new pair appears, or a limit is hit.
pub fn saturate(p: &Program, max_pairs: usize) -> ExtensionSet {
    saturate_with(p, Limits::for_program(p, max_pairs))
}

pub fn saturate_with(p: &Program, limits: Limits) -> ExtensionSet {
    let mut set = sigma0(p);
    while !set.saturated && !set.full {
        if set.step(limits).is_empty() {
            break;
        }
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_atoms, parse_program};

    const SIGMA3: &str = "s31: t(X, Y) -> exists Z: t(Y, Z).\n\
        s32: t(X, Y) -> s(X), s(Y).\n\
        s33: t(X1, V), s(V), t(W, Z1) -> u(X1, V, W, Z1).\n\
        s34: u(X2, Y, Y, Z2) -> v(X2, Z2).\n\
        s35: v(X3, Z3) -> t(X3, Z3).";

    fn has(set: &ExtensionSet, body: &str, head: &str) -> bool {
        set.contains(&parse_atoms(body).unwrap(), &parse_atoms(head).unwrap()[0])
    }

    #[test]
    fn sigma0_counts() {
        let p = parse_program(SIGMA3).unwrap();
        let s = sigma0(&p);
        assert_eq!(s.len(), 6);
        assert!(has(&s, "t(X1, V), s(V), t(W, Z1)", "u(X1, V, W, Z1)"));
        assert!(has(&s, "u(X2, Y, Y, Z2)", "v(X2, Z2)"));
        assert!(has(&s, "v(X3, Z3)", "t(X3, Z3)"));
        assert_eq!(sigma0(&Program::default()).len(), 0);
    }

    #[test]
    fn sigma3_unfolding_reaches_p21() {
        let p = parse_program(SIGMA3).unwrap();
        let limits = Limits::for_program(&p, 10_000);
        let s0 = sigma0(&p);
        let s1 = extend_step(&s0, &s0, limits);
        assert!(has(&s1, "u(X2, Y, Y, Z2)", "t(X2, Z2)"));
        let s2 = extend_step(&s0, &s1, limits);
        assert!(has(&s2, "t(X1, V), s(V), t(V, Z1)", "t(X1, Z1)"));
        for pair in &s1.pairs {
            assert!(s2.contains(&pair.body, &pair.head));
        }
    }

    #[test]
    fn empty_program_saturates_immediately() {
        let s = saturate(&Program::default(), DEFAULT_MAX_PAIRS);
        assert!(s.saturated && !s.capped && s.is_empty());
    }

    #[test]
    fn provenance_chain_ends_at_a_rule() {
        let p = parse_program(SIGMA3).unwrap();
        let s = saturate(&p, 2_000);
        let p21 = s
            .find(
                &parse_atoms("t(X1, V), s(V), t(V, Z1)").unwrap(),
                &parse_atoms("t(X1, Z1)").unwrap()[0],
            )
            .expect("p21 present");
        let chain = s.provenance(p21.id);
        assert!(chain.len() >= 3);
        assert!(matches!(chain.last().unwrap().origin, Origin::Rule { .. }));
    }
}
