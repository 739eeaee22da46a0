use std::collections::BTreeMap;

use super::atom::Atom;
use super::subst::Substitution;
use super::term::{Name, Term};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Var(u8, Name),
    Rigid(Term),
}

struct UnionFind {
    parent: BTreeMap<Key, Key>,
}

impl UnionFind {
    fn find(&mut self, k: &Key) -> Key {
        let mut root = k.clone();
        while let Some(p) = self.parent.get(&root) {
            if *p == root {
                break;
            }
            root = p.clone();
        }
        let mut cur = k.clone();
        while cur != root {
            let next = self.parent.get(&cur).cloned().unwrap_or_else(|| root.clone());
            self.parent.insert(cur, root.clone());
            cur = next;
        }
        root
    }

    /// Unions two classes; the smaller key stays root, so a rigid term is never
    /// displaced by a variable and two rigid terms never merge.
    fn union(&mut self, a: &Key, b: &Key) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return true;
        }
        match (&ra, &rb) {
            (Key::Rigid(_), Key::Rigid(_)) => false,
            (Key::Rigid(_), _) => {
                self.parent.insert(rb, ra);
                true
            }
            (_, Key::Rigid(_)) => {
                self.parent.insert(ra, rb);
                true
            }
            _ if ra < rb => {
                self.parent.insert(rb, ra);
                true
            }
            _ => {
                self.parent.insert(ra, rb);
                true
            }
        }
    }
}

fn key(side: u8, t: &Term) -> Key {
    match t {
        Term::Var(v) => Key::Var(side, v.clone()),
        other => Key::Rigid(other.clone()),
    }
}

/// Most general unifier of two atoms whose variables are treated as disjoint
/// (the variables of `a1` and of `a2` live in separate namespaces).
///
/// Returns `(θ1, θ2)` with `a1θ1 = a2θ2`. Each class of unified variables is
/// represented by its constant when it has one, otherwise by the smallest
/// variable of `a1` in it. Every class meets `a1`, so images only use names
/// from `a1` and constants.
pub fn mgu(a1: &Atom, a2: &Atom) -> Option<(Substitution, Substitution)> {
    if a1.predicate != a2.predicate || a1.arity() != a2.arity() {
        return None;
    }
    let mut uf = UnionFind {
        parent: BTreeMap::new(),
    };
    for (s, t) in a1.args.iter().zip(&a2.args) {
        if !uf.union(&key(1, s), &key(2, t)) {
            return None;
        }
    }
    let image = |uf: &mut UnionFind, side: u8, v: &Name| -> Term {
        match uf.find(&Key::Var(side, v.clone())) {
            Key::Rigid(t) => t,
            Key::Var(_, w) => Term::Var(w),
        }
    };
    let mut theta1 = Substitution::new();
    for v in a1.vars() {
        let t = image(&mut uf, 1, v);
        theta1.insert(v.clone(), t);
    }
    let mut theta2 = Substitution::new();
    for v in a2.vars() {
        let t = image(&mut uf, 2, v);
        theta2.insert(v.clone(), t);
    }
    Some((theta1.normalized(), theta2.normalized()))
}

/// One-way matching: extends `s` so that `pattern·s = target`, treating every
/// term of `target` as rigid. On failure `s` may hold partial bindings.
pub fn match_atom(pattern: &Atom, target: &Atom, s: &mut Substitution) -> bool {
    if pattern.predicate != target.predicate || pattern.arity() != target.arity() {
        return false;
    }
    for (p, t) in pattern.args.iter().zip(&target.args) {
        match p {
            Term::Var(v) => match s.get(v) {
                Some(bound) if bound != t => return false,
                Some(_) => {}
                None => s.insert(v.clone(), t.clone()),
            },
            rigid if rigid != t => return false,
            _ => {}
        }
    }
    true
}
