//! Property tests against brute-force reference implementations.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use proptest::prelude::*;
use triguard_core::baselines::{random_ruleset, GenParams};
use triguard_core::chase::{chase_to_level, DEFAULT_MAX_ATOMS};
use triguard_core::extension::{bell, canonical_pair, pairs_isomorphic, saturate, type_equivalent};
use triguard_core::nullsets::NullAnalysis;
use triguard_core::rtc::{classify_tg, TgOptions, TgOutcome};
use triguard_core::{find_homomorphisms, mgu, name, Atom, Database, Name, Program, Term};

fn term(vars: &'static [&'static str], consts: &'static [&'static str]) -> impl Strategy<Value = Term> {
    prop_oneof![
        4 => proptest::sample::select(vars).prop_map(Term::var),
        1 => proptest::sample::select(consts).prop_map(Term::constant),
    ]
}

fn atom_over(pred: &'static str, arity: usize, t: impl Strategy<Value = Term>) -> impl Strategy<Value = Atom> {
    proptest::collection::vec(t, arity).prop_map(move |args| Atom::new(name(pred), args))
}

fn rule_atom() -> impl Strategy<Value = Atom> {
    (1usize..=3).prop_flat_map(|n| atom_over("p", n, term(&["X", "Y", "Z", "W"], &["a", "b"])))
}

fn ground(pred: &'static str, arity: usize) -> impl Strategy<Value = Atom> {
    atom_over(pred, arity, proptest::sample::select(&["a", "b", "c"][..]).prop_map(Term::constant))
}

fn pattern_atom() -> impl Strategy<Value = Atom> {
    let t = || term(&["X", "Y", "Z"], &["a"]);
    prop_oneof![atom_over("e", 2, t()), atom_over("f", 1, t())]
}

fn gen_params() -> impl Strategy<Value = GenParams> {
    (any::<u64>(), 0.0f64..=0.6).prop_map(|(seed, p)| GenParams {
        seed,
        existential_probability: p,
        ..GenParams::default()
    })
}

/// Tokens on a cycle of the dependency graph together with everything they reach.
fn cyclic_by_reachability(p: &Program) -> BTreeSet<String> {
    let a = NullAnalysis::new(p);
    let mut succ: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (x, y) in &a.graph.edges {
        succ.entry(x.to_string()).or_default().push(y.to_string());
    }
    let reach = |start: &String| -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = succ.get(start).cloned().unwrap_or_default();
        while let Some(x) = stack.pop() {
            if seen.insert(x.clone()) {
                stack.extend(succ.get(&x).cloned().unwrap_or_default());
            }
        }
        seen
    };
    let mut out = BTreeSet::new();
    for n in &a.graph.nodes {
        let n = n.to_string();
        let r = reach(&n);
        if r.contains(&n) {
            out.extend(r);
        }
    }
    out
}

/// `a1` maps onto `a2` by an injective term map that fixes constants and
/// shared variables, so other variables can only go to other variables.
fn type_equivalent_brute(a1: &Atom, a2: &Atom) -> bool {
    if a1.predicate != a2.predicate || a1.arity() != a2.arity() {
        return false;
    }
    let shared: BTreeSet<Name> = a1.var_set().intersection(&a2.var_set()).cloned().collect();
    let free: Vec<Name> = a1.var_set().difference(&shared).cloned().collect();
    let targets: Vec<Term> = a2.var_set().difference(&shared).cloned().map(Term::Var).collect();
    if targets.is_empty() && !free.is_empty() {
        return false;
    }
    let mut choice = vec![0usize; free.len()];
    loop {
        let map: BTreeMap<&Name, &Term> = free.iter().zip(choice.iter().map(|&c| &targets[c])).collect();
        let image = |t: &Term| match t {
            Term::Var(v) => map.get(v).map_or_else(|| t.clone(), |x| (*x).clone()),
            other => other.clone(),
        };
        let images: Vec<Term> = a1.args.iter().map(image).collect();
        let distinct_in: BTreeSet<&Term> = a1.args.iter().collect();
        let distinct_out: BTreeSet<Term> = a1.args.iter().map(image).collect();
        if images == a2.args && distinct_in.len() == distinct_out.len() {
            return true;
        }
        let mut pos = free.len();
        loop {
            if pos == 0 {
                return false;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < targets.len() {
                break;
            }
            choice[pos] = 0;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mgu_matches_partition_search(a1 in rule_atom(), a2 in rule_atom()) {
        let a2 = if a2.arity() == a1.arity() { a2 } else { Atom::new(a2.predicate.clone(), a1.args.clone()) };
        let brute = brute_force_unifier(&a1, &a2);
        let fast = mgu(&a1, &a2);
        prop_assert_eq!(brute.is_some(), fast.is_some());
        if let (Some(part), Some((e1, e2))) = (brute, fast) {
            prop_assert_eq!(e1.apply_atom(&a1), e2.apply_atom(&a2));
            let its = items(&a1, &a2);
            let image = |it: &Item| match it {
                Item::Var(1, v) => e1.apply_term(&Term::Var(v.clone())),
                Item::Var(_, v) => e2.apply_term(&Term::Var(v.clone())),
                Item::Const(c) => Term::Const(c.clone()),
            };
            for i in 0..its.len() {
                for j in 0..its.len() {
                    prop_assert_eq!(image(&its[i]) == image(&its[j]), part[i] == part[j]);
                }
            }
        }
    }

    #[test]
    fn homomorphisms_match_exhaustive_search(
        pattern in proptest::collection::vec(pattern_atom(), 1..=3),
        e in proptest::collection::vec(ground("e", 2), 0..=6),
        f in proptest::collection::vec(ground("f", 1), 0..=2),
    ) {
        let target: Vec<Atom> = e.into_iter().chain(f).collect();
        let fast: Vec<Vec<(Name, Term)>> = find_homomorphisms(&pattern, &target)
            .map(|h| h.iter().map(|(v, t)| (v.clone(), t.clone())).collect())
            .collect();
        let as_set: BTreeSet<_> = fast.iter().cloned().collect();
        prop_assert_eq!(as_set.len(), fast.len(), "duplicates reported");
        prop_assert_eq!(as_set, exhaustive_homomorphisms(&pattern, &target));
    }

    #[test]
    fn type_equivalence_matches_bijection_search(a1 in rule_atom(), a2 in rule_atom()) {
        prop_assert_eq!(type_equivalent(&a1, &a2), type_equivalent_brute(&a1, &a2));
        prop_assert!(type_equivalent(&a1, &a1));
        prop_assert_eq!(type_equivalent(&a1, &a2), type_equivalent(&a2, &a1));
    }

    #[test]
    fn canonical_pairs_ignore_renaming_and_order(
        body in proptest::collection::vec(rule_atom(), 1..=3),
        head in rule_atom(),
        rot in 0usize..3,
    ) {
        let rename = |a: &Atom| Atom::new(a.predicate.clone(), a.args.iter().map(|t| match t {
            Term::Var(v) => Term::var(&format!("R{v}")),
            other => other.clone(),
        }).collect());
        let mut other: Vec<Atom> = body.iter().map(rename).collect();
        let k = rot % other.len();
        other.rotate_left(k);
        let (b1, h1, _) = canonical_pair(&body, &head);
        let (b2, h2, _) = canonical_pair(&other, &rename(&head));
        prop_assert_eq!(&b1, &b2);
        prop_assert_eq!(&h1, &h2);
        prop_assert!(pairs_isomorphic(&body, &head, &other, &rename(&head)));
    }

    #[test]
    fn isomorphism_agrees_with_canonical_forms(
        b1 in proptest::collection::vec(rule_atom(), 1..=2),
        h1 in rule_atom(),
        b2 in proptest::collection::vec(rule_atom(), 1..=2),
        h2 in rule_atom(),
    ) {
        let (c1, d1, _) = canonical_pair(&b1, &h1);
        let (c2, d2, _) = canonical_pair(&b2, &h2);
        prop_assert_eq!(pairs_isomorphic(&b1, &h1, &b2, &h2), c1 == c2 && d1 == d2);
    }

    #[test]
    fn bell_matches_stirling_sums(n in 0usize..=25) {
        prop_assert_eq!(bell(n), bell_by_stirling(n));
    }

    #[test]
    fn cyclic_nulls_are_those_on_cycles(g in gen_params()) {
        let p = random_ruleset(&g);
        let a = NullAnalysis::new(&p);
        let fast: BTreeSet<String> = a.cyclic.iter().map(|t| t.to_string()).collect();
        prop_assert_eq!(fast, cyclic_by_reachability(&p));
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extension_ignores_rule_order(g in gen_params()) {
        let p = random_ruleset(&g);
        let mut rules = p.rules.clone();
        rules.reverse();
        let q = Program::new(rules).unwrap();
        let (s, t) = (saturate(&p, 500), saturate(&q, 500));
        prop_assume!(s.saturated && t.saturated);
        let keys = |x: &triguard_core::extension::ExtensionSet| -> BTreeSet<(Vec<Atom>, Atom)> {
            x.pairs.iter().map(|p| (p.body.clone(), p.head.clone())).collect()
        };
        prop_assert_eq!(keys(&s), keys(&t));
    }

    #[test]
    fn verdicts_survive_renaming(g in gen_params()) {
        let p = random_ruleset(&g);
        let kind = |o: &TgOutcome| std::mem::discriminant(o);
        let base = classify_tg(&p, TgOptions::default());
        let alpha = rename_program(&p, |v| format!("{v}x"), |q| q.to_string());
        let preds = rename_program(&p, |v| v.to_string(), |q| format!("{q}_r"));
        prop_assert_eq!(kind(&classify_tg(&alpha, TgOptions::default()).outcome), kind(&base.outcome));
        prop_assert_eq!(kind(&classify_tg(&preds, TgOptions::default()).outcome), kind(&base.outcome));
    }

    #[test]
    fn chase_agrees_with_naive_enumeration(g in gen_params(), picks in proptest::collection::vec(0usize..64, 1..=4)) {
        let p = random_ruleset(&g);
        let preds: Vec<(&Name, &usize)> = p.schema.iter().collect();
        let consts = ["c1", "c2"];
        let facts: Vec<Atom> = picks.iter().map(|&k| {
            let (pred, &arity) = preds[k % preds.len()];
            Atom::new(pred.clone(), (0..arity).map(|i| Term::constant(consts[(k >> i) & 1])).collect())
        }).collect();
        let d = Database::new(facts).unwrap();
        let inst = chase_to_level(&d, &p, 3, DEFAULT_MAX_ATOMS);
        let fast: Vec<(Atom, usize)> = inst.atoms().iter().map(|a| (a.clone(), inst.level_of(a).unwrap())).collect();
        prop_assert_eq!(fast, naive_chase(&d, &p, 3));
    }
}
