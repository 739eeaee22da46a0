//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use num_bigint::BigUint;
use triguard_core::{name, parse_facts, parse_program, Atom, Database, Name, Program, Rule, Term};

pub fn corpus_text(file: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(file);
    std::fs::read_to_string(path).expect("corpus file")
}

pub fn corpus_program(file: &str) -> Program {
    parse_program(&corpus_text(file)).expect("corpus parses")
}

pub const CORPUS_PROGRAMS: [&str; 8] = [
    "guarded.dlg",
    "sigma1.dlg",
    "sigma2.dlg",
    "sigma3.dlg",
    "sticky.dlg",
    "successor.dlg",
    "transitive.dlg",
    "wa.dlg",
];

/// A small database touching every predicate of `p`: `D2` when the schema
/// allows it, otherwise two facts per predicate over `c1` and `c2`.
pub fn database_for(p: &Program) -> Database {
    let d2 = parse_facts(&corpus_text("d2.facts")).unwrap();
    if p.check_atoms(&d2.facts).is_ok() && d2.facts.iter().all(|f| p.schema.contains_key(&f.predicate)) {
        return d2;
    }
    let mut facts = Vec::new();
    for (pred, &arity) in &p.schema {
        let alt = (0..arity)
            .map(|i| Term::Const(name(if i % 2 == 0 { "c1" } else { "c2" })))
            .collect();
        let same = (0..arity).map(|_| Term::Const(name("c2"))).collect();
        facts.push(Atom::new(pred.clone(), alt));
        facts.push(Atom::new(pred.clone(), same));
    }
    Database::new(facts).unwrap()
}

fn bind(a: &Atom, f: &Atom, s: &mut BTreeMap<Name, Term>) -> bool {
    if a.predicate != f.predicate || a.args.len() != f.args.len() {
        return false;
    }
    for (x, y) in a.args.iter().zip(&f.args) {
        match x {
            Term::Var(v) => match s.get(v) {
                Some(t) if t != y => return false,
                Some(_) => {}
                None => {
                    s.insert(v.clone(), y.clone());
                }
            },
            other if other != y => return false,
            _ => {}
        }
    }
    true
}

fn subst(a: &Atom, s: &BTreeMap<Name, Term>) -> Atom {
    Atom::new(
        a.predicate.clone(),
        a.args
            .iter()
            .map(|t| match t {
                Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| t.clone()),
                other => other.clone(),
            })
            .collect(),
    )
}

/// Level-by-level oblivious chase by enumerating every tuple of atoms for
/// every rule body. Returns `(atom, level)` in creation order.
pub fn naive_chase(d: &Database, p: &Program, k: usize) -> Vec<(Atom, usize)> {
    let mut atoms: Vec<(Atom, usize)> = Vec::new();
    let mut seen: HashSet<Atom> = HashSet::new();
    for f in &d.facts {
        if seen.insert(f.clone()) {
            atoms.push((f.clone(), 0));
        }
    }
    let mut next_null = 1u64;
    for j in 1..=k {
        let snapshot = atoms.len();
        let mut pending: Vec<(usize, Vec<usize>, BTreeMap<Name, Term>)> = Vec::new();
        for (ri, rule) in p.rules.iter().enumerate() {
            let n = rule.body.len();
            let mut idx = vec![0usize; n];
            'tuples: loop {
                let mut s = BTreeMap::new();
                let ok = (0..n).all(|i| bind(&rule.body[i], &atoms[idx[i]].0, &mut s));
                if ok && idx.iter().map(|&i| atoms[i].1).max() == Some(j - 1) {
                    pending.push((ri, idx.clone(), s));
                }
                for pos in (0..n).rev() {
                    idx[pos] += 1;
                    if idx[pos] < snapshot {
                        continue 'tuples;
                    }
                    idx[pos] = 0;
                }
                break;
            }
        }
        if pending.is_empty() {
            break;
        }
        pending.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        for (ri, _, mut s) in pending {
            let rule = &p.rules[ri];
            for z in &rule.existentials {
                s.insert(z.clone(), Term::Null(next_null));
                next_null += 1;
            }
            for h in &rule.head {
                let a = subst(h, &s);
                if seen.insert(a.clone()) {
                    atoms.push((a, j));
                }
            }
        }
    }
    atoms
}

/// Every map from the pattern variables into the target terms that sends
/// each pattern atom onto a target atom.
pub fn exhaustive_homomorphisms(pattern: &[Atom], target: &[Atom]) -> BTreeSet<Vec<(Name, Term)>> {
    let vars: Vec<Name> = triguard_core::vars_of(pattern).into_iter().collect();
    let terms: Vec<Term> = target
        .iter()
        .flat_map(|a| a.args.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let facts: HashSet<&Atom> = target.iter().collect();
    let mut out = BTreeSet::new();
    if terms.is_empty() && !vars.is_empty() {
        return out;
    }
    let mut choice = vec![0usize; vars.len()];
    loop {
        let s: BTreeMap<Name, Term> = vars
            .iter()
            .cloned()
            .zip(choice.iter().map(|&c| terms[c].clone()))
            .collect();
        if pattern.iter().all(|a| facts.contains(&subst(a, &s))) {
            out.insert(s.into_iter().collect());
        }
        let mut pos = vars.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < terms.len() {
                break;
            }
            choice[pos] = 0;
        }
    }
}

/// All set partitions of `0..n`, as block labels per element.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(i: usize, max: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == labels.len() {
            out.push(labels.clone());
            return;
        }
        for b in 0..=max {
            labels[i] = b;
            rec(i + 1, if b == max { max + 1 } else { max }, labels, out);
        }
    }
    if n == 0 {
        out.push(Vec::new());
    } else {
        rec(0, 0, &mut labels, &mut out);
    }
    out
}

/// The side-tagged terms that a unifier of `a1` and `a2` can identify.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Item {
    Var(u8, Name),
    Const(Name),
}

pub fn items(a1: &Atom, a2: &Atom) -> Vec<Item> {
    let mut set = BTreeSet::new();
    for (side, a) in [(1u8, a1), (2u8, a2)] {
        for t in &a.args {
            match t {
                Term::Var(v) => {
                    set.insert(Item::Var(side, v.clone()));
                }
                Term::Const(c) => {
                    set.insert(Item::Const(c.clone()));
                }
                Term::Null(_) => unreachable!("rule atoms"),
            }
        }
    }
    set.into_iter().collect()
}

/// The finest partition of `items` whose quotient makes the atoms equal,
/// found by trying every partition.
pub fn brute_force_unifier(a1: &Atom, a2: &Atom) -> Option<Vec<usize>> {
    if a1.predicate != a2.predicate || a1.args.len() != a2.args.len() {
        return None;
    }
    let its = items(a1, a2);
    let pos = |side: u8, t: &Term| -> usize {
        let it = match t {
            Term::Var(v) => Item::Var(side, v.clone()),
            Term::Const(c) => Item::Const(c.clone()),
            Term::Null(_) => unreachable!(),
        };
        its.binary_search(&it).unwrap()
    };
    let mut best: Option<Vec<usize>> = None;
    let mut best_blocks = 0;
    for part in partitions(its.len()) {
        let consts_ok = {
            let mut seen = BTreeMap::new();
            its.iter().enumerate().all(|(i, it)| match it {
                Item::Const(c) => seen.insert(part[i], c.clone()).is_none(),
                Item::Var(..) => true,
            })
        };
        if !consts_ok {
            continue;
        }
        let equal = a1
            .args
            .iter()
            .zip(&a2.args)
            .all(|(x, y)| part[pos(1, x)] == part[pos(2, y)]);
        if !equal {
            continue;
        }
        let blocks = part.iter().max().map_or(0, |m| m + 1);
        if blocks > best_blocks || best.is_none() {
            best_blocks = blocks;
            best = Some(part);
        }
    }
    best
}

/// BELL numbers through Stirling numbers of the second kind.
pub fn bell_by_stirling(n: usize) -> BigUint {
    let mut row = vec![BigUint::from(1u32)];
    for i in 1..=n {
        let mut next = vec![BigUint::from(0u32); i + 1];
        for k in 1..=i {
            let carry = if k < row.len() { &row[k] * BigUint::from(k) } else { BigUint::from(0u32) };
            next[k] = carry + &row[k - 1];
        }
        row = next;
    }
    row.iter().sum()
}

/// Applies `fv` to every variable and `fp` to every predicate of `p`.
pub fn rename_program(p: &Program, fv: impl Fn(&str) -> String, fp: impl Fn(&str) -> String) -> Program {
    let atom = |a: &Atom| {
        Atom::new(
            name(&fp(&a.predicate)),
            a.args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => Term::Var(name(&fv(v))),
                    other => other.clone(),
                })
                .collect(),
        )
    };
    let rules = p
        .rules
        .iter()
        .map(|r| {
            Rule::new(
                r.label.clone(),
                r.body.iter().map(atom).collect(),
                r.head.iter().map(atom).collect(),
                r.existentials.iter().map(|z| name(&fv(z))).collect(),
            )
            .unwrap()
        })
        .collect();
    Program::new(rules).unwrap()
}

#[test]
fn partitions_are_counted_by_bell() {
    for n in 0..7 {
        assert_eq!(BigUint::from(partitions(n).len()), bell_by_stirling(n));
    }
}
