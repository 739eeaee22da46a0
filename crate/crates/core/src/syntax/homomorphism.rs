use std::collections::{BTreeMap, HashSet};

use super::atom::Atom;
use super::subst::Substitution;
use super::term::{Name, Term};

/// Lazy backtracking enumeration of the substitutions mapping every pattern
/// atom onto some target atom. Terms of the target are treated as rigid.
///
/// Pattern atoms are tried in order of descending variable count and
/// candidates in target order, so the output order is deterministic.
pub struct Homomorphisms<'a> {
    pattern: Vec<&'a Atom>,
    target: &'a [Atom],
    cands: Vec<Vec<usize>>,
    pos: Vec<usize>,
    trail: Vec<Vec<Name>>,
    binding: BTreeMap<Name, Term>,
    depth: usize,
    done: bool,
}

impl<'a> Homomorphisms<'a> {
    /// Builds a search where pattern atom `i` may only map onto the target
    /// atoms listed in `cands[i]` (given in the order they should be tried).
    pub fn with_candidates(
        pattern: &'a [Atom],
        target: &'a [Atom],
        cands: Vec<Vec<usize>>,
        init: &Substitution,
    ) -> Homomorphisms<'a> {
        let mut order: Vec<usize> = (0..pattern.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(pattern[i].var_set().len()));
        let mut slots: Vec<Option<Vec<usize>>> = cands.into_iter().map(Some).collect();
        let cands = order
            .iter()
            .map(|&i| slots[i].take().unwrap_or_default())
            .collect();
        let n = pattern.len();
        Homomorphisms {
            pattern: order.iter().map(|&i| &pattern[i]).collect(),
            target,
            cands,
            pos: vec![0; n],
            trail: vec![Vec::new(); n],
            binding: init.iter().map(|(v, t)| (v.clone(), t.clone())).collect(),
            depth: 0,
            done: false,
        }
    }

    fn undo(&mut self, d: usize) {
        for v in self.trail[d].drain(..) {
            self.binding.remove(&v);
        }
    }

    fn try_bind(&mut self, d: usize, t: usize) -> bool {
        let p = self.pattern[d];
        let a = &self.target[t];
        if p.predicate != a.predicate || p.arity() != a.arity() {
            return false;
        }
        for (pt, at) in p.args.iter().zip(&a.args) {
            match pt {
                Term::Var(v) => match self.binding.get(v) {
                    Some(b) if b != at => {
                        self.undo(d);
                        return false;
                    }
                    Some(_) => {}
                    None => {
                        self.binding.insert(v.clone(), at.clone());
                        self.trail[d].push(v.clone());
                    }
                },
                rigid if rigid != at => {
                    self.undo(d);
                    return false;
                }
                _ => {}
            }
        }
        true
    }

    fn snapshot(&self) -> Substitution {
        Substitution::from_pairs(self.binding.iter().map(|(v, t)| (v.clone(), t.clone())))
    }
}

impl Iterator for Homomorphisms<'_> {
    type Item = Substitution;

    fn next(&mut self) -> Option<Substitution> {
        if self.done {
            return None;
        }
        let n = self.pattern.len();
        loop {
            if self.depth == n {
                let out = self.snapshot();
                if n == 0 {
                    self.done = true;
                } else {
                    self.depth -= 1;
                    self.undo(self.depth);
                }
                return Some(out);
            }
            let d = self.depth;
            let mut advanced = false;
            while self.pos[d] < self.cands[d].len() {
                let t = self.cands[d][self.pos[d]];
                self.pos[d] += 1;
                if self.try_bind(d, t) {
                    advanced = true;
                    break;
                }
            }
            if advanced {
                self.depth += 1;
                if self.depth < n {
                    self.pos[self.depth] = 0;
                }
            } else if d == 0 {
                self.done = true;
                return None;
            } else {
                self.depth -= 1;
                self.undo(self.depth);
            }
        }
    }
}

/// Candidate lists by predicate and arity, skipping duplicate target atoms.
pub fn candidates_by_predicate(pattern: &[Atom], target: &[Atom]) -> Vec<Vec<usize>> {
    let mut seen = HashSet::new();
    let mut index: BTreeMap<(&str, usize), Vec<usize>> = BTreeMap::new();
    for (i, a) in target.iter().enumerate() {
        if seen.insert(a) {
            index.entry((&a.predicate, a.arity())).or_default().push(i);
        }
    }
    pattern
        .iter()
        .map(|p| {
            index
                .get(&(&*p.predicate, p.arity()))
                .cloned()
                .unwrap_or_default()
        })
        .collect()
}

/// Enumerates every `h` with `pattern·h ⊆ target`, restricted to the pattern variables.
pub fn find_homomorphisms<'a>(pattern: &'a [Atom], target: &'a [Atom]) -> Homomorphisms<'a> {
    find_homomorphisms_from(pattern, target, &Substitution::new())
}

/// As [`find_homomorphisms`], extending a fixed initial binding.
pub fn find_homomorphisms_from<'a>(
    pattern: &'a [Atom],
    target: &'a [Atom],
    init: &Substitution,
) -> Homomorphisms<'a> {
    let cands = candidates_by_predicate(pattern, target);
    Homomorphisms::with_candidates(pattern, target, cands, init)
}
