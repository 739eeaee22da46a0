use std::collections::BTreeMap;

use crate::syntax::{Atom, Name, Substitution, Term};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum KeyTerm {
    Var(usize),
    /// An unnamed variable: the rank of its occurrence signature, then its
    /// position among the unnamed variables of the atom.
    Fresh(usize, usize),
    Rigid(Term),
}

type AtomKey = (Name, Vec<KeyTerm>);

/// Leaves explored while breaking ties before falling back to the first choice.
const LEAF_BUDGET: usize = 1000;

fn key_of(atom: &Atom, naming: &BTreeMap<Name, usize>, sigs: &BTreeMap<Name, usize>) -> AtomKey {
    let mut provisional: BTreeMap<&Name, usize> = BTreeMap::new();
    let args = atom
        .args
        .iter()
        .map(|t| match t {
            Term::Var(v) => match naming.get(v) {
                Some(&i) => KeyTerm::Var(i),
                None => {
                    let n = provisional.len();
                    let local = *provisional.entry(v).or_insert(n);
                    KeyTerm::Fresh(sigs.get(v).copied().unwrap_or(0), local)
                }
            },
            other => KeyTerm::Rigid(other.clone()),
        })
        .collect();
    (atom.predicate.clone(), args)
}

/// Ranks every body variable by the sorted list of (predicate, position)
/// pairs where it occurs. Renaming leaves the ranks unchanged.
fn signatures(body: &[Atom]) -> BTreeMap<Name, usize> {
    let mut occ: BTreeMap<Name, Vec<(Name, usize)>> = BTreeMap::new();
    for a in body {
        for (i, t) in a.args.iter().enumerate() {
            if let Term::Var(v) = t {
                occ.entry(v.clone()).or_default().push((a.predicate.clone(), i));
            }
        }
    }
    for list in occ.values_mut() {
        list.sort();
    }
    let mut distinct: Vec<&Vec<(Name, usize)>> = occ.values().collect();
    distinct.sort();
    distinct.dedup();
    occ.iter()
        .map(|(v, list)| (v.clone(), distinct.binary_search(&list).expect("present")))
        .collect()
}

fn name_vars(atom: &Atom, naming: &mut BTreeMap<Name, usize>) {
    for v in atom.vars() {
        let n = naming.len();
        naming.entry(v.clone()).or_insert(n + 1);
    }
}

struct Search<'a> {
    body: &'a [Atom],
    sigs: BTreeMap<Name, usize>,
    leaves: usize,
    best: Option<(Vec<AtomKey>, BTreeMap<Name, usize>)>,
}

impl Search<'_> {
    fn explore(&mut self, remaining: Vec<usize>, naming: BTreeMap<Name, usize>) {
        if remaining.is_empty() {
            self.leaves += 1;
            let mut keys: Vec<AtomKey> = self
                .body
                .iter()
                .map(|a| key_of(a, &naming, &self.sigs))
                .collect();
            keys.sort();
            keys.dedup();
            if self.best.as_ref().is_none_or(|(k, _)| keys < *k) {
                self.best = Some((keys, naming));
            }
            return;
        }
        let keys: Vec<AtomKey> = remaining
            .iter()
            .map(|&i| key_of(&self.body[i], &naming, &self.sigs))
            .collect();
        let min = keys.iter().min().cloned().expect("nonempty");
        let choices: Vec<usize> = (0..remaining.len()).filter(|&j| keys[j] == min).collect();
        // Choices whose atoms have no unnamed variable lead to the same naming.
        let all_named = self.body[remaining[choices[0]]]
            .vars()
            .all(|v| naming.contains_key(v));
        let branch: Vec<usize> = if all_named || self.leaves >= LEAF_BUDGET {
            choices[..1].to_vec()
        } else {
            // A choice whose component is an isomorphic copy of an already
            // chosen one leads to the same leaves.
            let mut kept: Vec<(usize, Vec<usize>)> = Vec::new();
            for &j in &choices {
                let comp = self.component(remaining[j], &remaining, &naming);
                let symmetric = kept.iter().any(|(k, other)| {
                    other.iter().all(|i| !comp.contains(i))
                        && self.swappable(remaining[j], &comp, remaining[*k], other, &naming)
                });
                if !symmetric {
                    kept.push((j, comp));
                }
            }
            kept.into_iter().map(|(j, _)| j).collect()
        };
        for j in branch {
            let mut naming = naming.clone();
            name_vars(&self.body[remaining[j]], &mut naming);
            let mut rest = remaining.clone();
            rest.remove(j);
            self.explore(rest, naming);
        }
    }
}

impl Search<'_> {
    /// Atoms of `remaining` connected to atom `i` through unnamed variables.
    fn component(&self, i: usize, remaining: &[usize], naming: &BTreeMap<Name, usize>) -> Vec<usize> {
        let mut comp = vec![i];
        let mut k = 0;
        while k < comp.len() {
            let a = &self.body[comp[k]];
            for &r in remaining {
                if comp.contains(&r) {
                    continue;
                }
                let b = &self.body[r];
                if a.vars().any(|v| !naming.contains_key(v) && b.contains_var(v)) {
                    comp.push(r);
                }
            }
            k += 1;
        }
        comp
    }

    /// Whether some bijection of unnamed variables maps component `c1` onto
    /// `c2` and atom `i` onto atom `j`, fixing named variables.
    fn swappable(
        &self,
        i: usize,
        c1: &[usize],
        j: usize,
        c2: &[usize],
        naming: &BTreeMap<Name, usize>,
    ) -> bool {
        if c1.len() != c2.len() {
            return false;
        }
        let mut fwd: BTreeMap<Name, Name> = naming.keys().map(|v| (v.clone(), v.clone())).collect();
        let mut bwd = fwd.clone();
        if !bij_match(&self.body[i], &self.body[j], &mut fwd, &mut bwd) {
            return false;
        }
        let rest1: Vec<Atom> = c1.iter().filter(|&&x| x != i).map(|&x| self.body[x].clone()).collect();
        let rest2: Vec<Atom> = c2.iter().filter(|&&x| x != j).map(|&x| self.body[x].clone()).collect();
        let mut used = vec![false; rest2.len()];
        iso_search(&rest1, &rest2, 0, &mut used, &fwd, &bwd)
    }
}

/// Canonical representative of the pair `⟨body, head⟩` up to variable renaming.
///
/// Head variables are numbered first in order of occurrence; body atoms are
/// then picked by least key, branching on ties, and the lexicographically least
/// sorted body wins. Returns the renamed body (sorted, deduplicated), the renamed
/// head, and the renaming that was applied.
pub fn canonical_pair(body: &[Atom], head: &Atom) -> (Vec<Atom>, Atom, Substitution) {
    let mut naming = BTreeMap::new();
    name_vars(head, &mut naming);
    let mut search = Search {
        body,
        sigs: signatures(body),
        leaves: 0,
        best: None,
    };
    search.explore((0..body.len()).collect(), naming);
    let (_, naming) = search.best.expect("at least one leaf");
    let renaming = Substitution::from_pairs(
        naming
            .iter()
            .map(|(v, i)| (v.clone(), Term::Var(Name::from(format!("V{i}").as_str())))),
    );
    let mut keyed: Vec<(AtomKey, Atom)> = body
        .iter()
        .map(|a| (key_of(a, &naming, &BTreeMap::new()), renaming.apply_atom(a)))
        .collect();
    keyed.sort();
    keyed.dedup();
    let body = keyed.into_iter().map(|(_, a)| a).collect();
    (body, renaming.apply_atom(head), renaming)
}

/// Looks for a variable bijection mapping one pair onto the other, fixing constants.
pub fn pairs_isomorphic(b1: &[Atom], h1: &Atom, b2: &[Atom], h2: &Atom) -> bool {
    let dedup = |b: &[Atom]| {
        let mut v = b.to_vec();
        v.sort();
        v.dedup();
        v
    };
    let (b1, b2) = (dedup(b1), dedup(b2));
    if b1.len() != b2.len() {
        return false;
    }
    let mut fwd = BTreeMap::new();
    let mut bwd = BTreeMap::new();
    if !bij_match(h1, h2, &mut fwd, &mut bwd) {
        return false;
    }
    let mut used = vec![false; b2.len()];
    iso_search(&b1, &b2, 0, &mut used, &fwd, &bwd)
}

fn bij_match(
    a: &Atom,
    b: &Atom,
    fwd: &mut BTreeMap<Name, Name>,
    bwd: &mut BTreeMap<Name, Name>,
) -> bool {
    if a.predicate != b.predicate || a.arity() != b.arity() {
        return false;
    }
    for (s, t) in a.args.iter().zip(&b.args) {
        match (s, t) {
            (Term::Var(x), Term::Var(y)) => {
                if fwd.get(x).is_some_and(|z| z != y) || bwd.get(y).is_some_and(|z| z != x) {
                    return false;
                }
                fwd.insert(x.clone(), y.clone());
                bwd.insert(y.clone(), x.clone());
            }
            (s, t) if s == t && !s.is_var() => {}
            _ => return false,
        }
    }
    true
}

fn iso_search(
    b1: &[Atom],
    b2: &[Atom],
    i: usize,
    used: &mut [bool],
    fwd: &BTreeMap<Name, Name>,
    bwd: &BTreeMap<Name, Name>,
) -> bool {
    if i == b1.len() {
        return true;
    }
    for j in 0..b2.len() {
        if used[j] {
            continue;
        }
        let mut f = fwd.clone();
        let mut g = bwd.clone();
        if bij_match(&b1[i], &b2[j], &mut f, &mut g) {
            used[j] = true;
            if iso_search(b1, b2, i + 1, used, &f, &g) {
                return true;
            }
            used[j] = false;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_atoms;

    fn pair(b: &str, h: &str) -> (Vec<Atom>, Atom) {
        (parse_atoms(b).unwrap(), parse_atoms(h).unwrap().remove(0))
    }

    #[test]
    fn renamed_pairs_collide() {
        let (b1, h1) = pair("t(X1, V), s(V), t(V, Z1)", "t(X1, Z1)");
        let (b2, h2) = pair("t(A, Q), s(A), t(P, A)", "t(P, Q)");
        let c1 = canonical_pair(&b1, &h1);
        let c2 = canonical_pair(&b2, &h2);
        assert_eq!((c1.0.clone(), c1.1.clone()), (c2.0, c2.1));
        assert_eq!(c1.1.to_string(), "t(V1, V2)");
    }

    #[test]
    fn ties_are_broken_canonically() {
        let (b1, h1) = pair("r(A, B), r(B, C), r(C, A)", "p(A)");
        let (b2, h2) = pair("r(Q, Y), r(Y, Q2), r(Q2, Q)", "p(Y)");
        let c1 = canonical_pair(&b1, &h1);
        let c2 = canonical_pair(&b2, &h2);
        assert_eq!(c1.0, c2.0);
        assert!(pairs_isomorphic(&b1, &h1, &c1.0, &c1.1));
    }

    #[test]
    fn non_isomorphic_pairs_differ() {
        let (b1, h1) = pair("t(X, Y), t(Y, Z)", "t(X, Z)");
        let (b2, h2) = pair("t(X, Y), t(Z, Y)", "t(X, Z)");
        assert_ne!(canonical_pair(&b1, &h1).0, canonical_pair(&b2, &h2).0);
        assert!(!pairs_isomorphic(&b1, &h1, &b2, &h2));
    }

    #[test]
    fn symmetric_components_canonicalise_quickly() {
        let copies = |prefix: &str, order: &[usize]| -> Vec<Atom> {
            order
                .iter()
                .flat_map(|i| {
                    parse_atoms(&format!("p(X, {prefix}{i}), q({prefix}{i}, X)")).unwrap()
                })
                .collect()
        };
        let head = parse_atoms("h(X)").unwrap().remove(0);
        let b1 = copies("A", &(0..12).collect::<Vec<_>>());
        let b2 = copies("B", &(0..12).rev().collect::<Vec<_>>());
        let start = std::time::Instant::now();
        let c1 = canonical_pair(&b1, &head);
        let c2 = canonical_pair(&b2, &head);
        assert!(start.elapsed() < std::time::Duration::from_secs(2));
        assert_eq!(c1.0, c2.0);
        assert_eq!(c1.0.len(), 24);
    }

    #[test]
    fn duplicates_and_constants() {
        let (b, h) = pair("t(X, c), t(X, c)", "u(X)");
        let (body, head, _) = canonical_pair(&b, &h);
        assert_eq!(body.len(), 1);
        assert_eq!(body[0].to_string(), "t(V1, c)");
        assert_eq!(head.to_string(), "u(V1)");
    }
}
