//! Interchangeable nulls and the bounded-nulls probe.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use serde::{Serialize, Serializer};

use super::{chase_to_level, LabeledInstance};
use crate::error::ChaseError;
use crate::extension::{bound_b, saturate, BigValue};
use crate::syntax::{vars_of, Atom, Database, Homomorphisms, Name, Program, Substitution, Term};

/// The numbers behind the bounded-nulls argument, computed exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeBounds {
    #[serde(serialize_with = "as_string")]
    pub m: BigUint,
    pub n_cap: BigValue,
    pub n_prime: BigValue,
    #[serde(serialize_with = "as_string")]
    pub d: BigUint,
    /// Largest variable count over the explored extension pairs.
    pub max_pair_vars: usize,
    pub pairs_explored: usize,
    /// Whether the extension was explored completely.
    pub saturated: bool,
}

fn as_string<S: Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(n)
}

/// `m = d · maxvars · maxarity · |VAR(shape)|`,
/// `N = m^(|DOM(D)| + |CONST(Σ)| + |VAR(shape)|)` and `N' = N^N`.
pub fn probe_bounds(d: &Database, p: &Program, shape: &[Atom], max_pairs: usize) -> ProbeBounds {
    let report = bound_b(p);
    let ext = saturate(p, max_pairs);
    let max_pair_vars = ext.pairs.iter().map(|x| x.vars().len()).max().unwrap_or(0);
    let shape_vars = vars_of(shape).len();
    let m = &report.d
        * BigUint::from(max_pair_vars)
        * BigUint::from(p.max_arity())
        * BigUint::from(shape_vars);
    let exponent = d.constants().len() + p.constants().len() + shape_vars;
    let n_cap = BigValue::pow(BigValue::Exact(m.clone()), BigValue::exact(exponent));
    let n_prime = BigValue::pow(n_cap.clone(), n_cap.clone());
    ProbeBounds {
        m,
        n_cap,
        n_prime,
        d: report.d,
        max_pair_vars,
        pairs_explored: ext.len(),
        saturated: ext.saturated,
    }
}

/// Whether the shape atoms are joined through shared variables.
fn connected(shape: &[Atom]) -> bool {
    if shape.is_empty() {
        return false;
    }
    let mut reached = vec![false; shape.len()];
    reached[0] = true;
    let mut stack = vec![0];
    while let Some(i) = stack.pop() {
        for j in 0..shape.len() {
            if !reached[j] && shape[i].vars().any(|v| shape[j].contains_var(v)) {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    reached.into_iter().all(|r| r)
}

fn nulls_of(atoms: &[Atom]) -> BTreeSet<u64> {
    atoms.iter().flat_map(Atom::nulls).collect()
}

/// All images of a connected shape under injective variable maps.
struct Images {
    list: Vec<Vec<Atom>>,
    by_null: BTreeMap<u64, Vec<usize>>,
}

impl Images {
    fn new(shape: &[Atom], inst: &LabeledInstance) -> Images {
        let mut out = Images {
            list: Vec::new(),
            by_null: BTreeMap::new(),
        };
        if !connected(shape) {
            return out;
        }
        let vars: Vec<Name> = vars_of(shape).into_iter().collect();
        for h in Homomorphisms::with_candidates(
            shape,
            inst.atoms(),
            candidates(shape, inst),
            &Substitution::new(),
        ) {
            let values: BTreeSet<Term> = vars.iter().filter_map(|v| h.get(v).cloned()).collect();
            if values.len() != vars.len() {
                continue;
            }
            let image = h.apply_atoms(shape);
            let id = out.list.len();
            for n in nulls_of(&image) {
                out.by_null.entry(n).or_default().push(id);
            }
            out.list.push(image);
        }
        out
    }

    fn shared(&self, ni: u64, nj: u64) -> Vec<usize> {
        let (Some(a), Some(b)) = (self.by_null.get(&ni), self.by_null.get(&nj)) else {
            return Vec::new();
        };
        let b: BTreeSet<usize> = b.iter().copied().collect();
        a.iter().copied().filter(|i| b.contains(i)).collect()
    }
}

fn candidates(pattern: &[Atom], inst: &LabeledInstance) -> Vec<Vec<usize>> {
    pattern
        .iter()
        .map(|a| {
            inst.with_predicate(&a.predicate)
                .iter()
                .copied()
                .filter(|&i| inst.atoms()[i].arity() == a.arity())
                .collect()
        })
        .collect()
}

/// Whether the nulls of `image` can be sent to nulls, with `ni` and `nj`
/// sharing an image, so that the result stays inside the instance.
fn mergeable(image: &[Atom], ni: u64, nj: u64, inst: &LabeledInstance) -> bool {
    let var_of = |n: u64| Term::Var(Name::from(format!("N{}", if n == nj { ni } else { n }).as_str()));
    let pattern: Vec<Atom> = image
        .iter()
        .map(|a| Atom {
            predicate: a.predicate.clone(),
            args: a
                .args
                .iter()
                .map(|t| match t {
                    Term::Null(n) => var_of(*n),
                    other => other.clone(),
                })
                .collect(),
        })
        .collect();
    Homomorphisms::with_candidates(
        &pattern,
        inst.atoms(),
        candidates(&pattern, inst),
        &Substitution::new(),
    )
    .any(|h| h.iter().all(|(_, t)| t.is_null()))
}

/// Decides shape-interchangeability of two nulls by exhaustive search over
/// the given instance.
pub fn interchangeable(ni: u64, nj: u64, shape: &[Atom], inst: &LabeledInstance) -> bool {
    if ni == nj {
        return true;
    }
    let images = Images::new(shape, inst);
    images
        .shared(ni, nj)
        .into_iter()
        .all(|i| mergeable(&images.list[i], ni, nj, inst))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeViolation {
    pub null: Term,
    pub level: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeReport {
    pub n_small: usize,
    pub n_big: usize,
    pub k: usize,
    pub atoms: usize,
    pub old_nulls: usize,
    pub new_nulls: usize,
    pub images: usize,
    /// For each late null, the early null it was found interchangeable with.
    pub partners: BTreeMap<String, Term>,
    pub violations: Vec<ProbeViolation>,
}

/// For every null created above level `n_big` and up to `n_big + k`, looks for
/// an interchangeable null created at level `n_small` or below, judged on the
/// chase up to level `n_big + k`.
pub fn bounded_nulls_probe(
    d: &Database,
    p: &Program,
    shape: &[Atom],
    bounds: (usize, usize, usize),
    max_atoms: usize,
) -> Result<ProbeReport, ChaseError> {
    let (n_small, n_big, k) = bounds;
    if n_small >= n_big {
        return Err(ChaseError::InvalidProbeBounds { n_small, n_big });
    }
    let depth = n_big + k;
    let inst = chase_to_level(d, p, depth, max_atoms);
    if let Some(t) = &inst.truncated {
        return Err(ChaseError::InstanceTooLarge {
            level: t.complete_level + 1,
            atoms: t.atoms,
            max_atoms,
        });
    }
    let levels = inst.null_levels();
    let old: Vec<u64> = levels
        .iter()
        .filter(|(_, &l)| l <= n_small)
        .map(|(&n, _)| n)
        .collect();
    let new: Vec<(u64, usize)> = levels
        .iter()
        .filter(|(_, &l)| l > n_big && l <= depth)
        .map(|(&n, &l)| (n, l))
        .collect();
    let images = Images::new(shape, &inst);
    let mut partners = BTreeMap::new();
    let mut violations = Vec::new();
    for &(nj, level) in &new {
        let partner = old.iter().copied().find(|&ni| {
            images
                .shared(ni, nj)
                .into_iter()
                .all(|i| mergeable(&images.list[i], ni, nj, &inst))
        });
        match partner {
            Some(ni) => {
                partners.insert(Term::Null(nj).to_string(), Term::Null(ni));
            }
            None => violations.push(ProbeViolation {
                null: Term::Null(nj),
                level,
            }),
        }
    }
    Ok(ProbeReport {
        n_small,
        n_big,
        k,
        atoms: inst.len(),
        old_nulls: old.len(),
        new_nulls: new.len(),
        images: images.list.len(),
        partners,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chase::DEFAULT_MAX_ATOMS;
    use crate::extension::bell;
    use crate::syntax::{parse_atoms, parse_facts, parse_program};

    const SIGMA1: &str = "s11: t(X, Y) -> exists Z: t(Y, Z), u(Y, Z).\n\
                          s12: t(X, Y), u(Y, Z) -> t(Y, Z), u(X, Y).";
    const SIGMA2: &str = "s11: t(X, Y) -> exists Z: t(Y, Z), u(Y, Z).\n\
                          s12: t(X, Y), u(Y, Z) -> t(X, Z), u(X, Y).";

    fn d2() -> Database {
        parse_facts("t(c1, c2). u(c1, c2).").unwrap()
    }

    #[test]
    fn trivial_interchangeability() {
        let p = parse_program(SIGMA2).unwrap();
        let inst = chase_to_level(&d2(), &p, 3, DEFAULT_MAX_ATOMS);
        let shape = parse_atoms("t(X, Y)").unwrap();
        assert!(interchangeable(1, 1, &shape, &inst));
        // No t-atom mentions a null that does not exist.
        assert!(interchangeable(1, 999, &shape, &inst));
        let apart = parse_atoms("t(X, Y), u(Z, W)").unwrap();
        assert!(interchangeable(1, 2, &apart, &inst));
    }

    #[test]
    fn sigma2_pulls_nulls_together() {
        let p = parse_program(SIGMA2).unwrap();
        let inst = chase_to_level(&d2(), &p, 4, DEFAULT_MAX_ATOMS);
        let shape = parse_atoms("t(X, Y)").unwrap();
        // t(_n1, _n2) is present but no t-atom repeats a null.
        assert!(!interchangeable(1, 2, &shape, &inst));
        let last = *inst.null_levels().keys().last().unwrap();
        let joined = inst
            .atoms()
            .iter()
            .any(|a| a.predicate.as_ref() == "t" && a.nulls().any(|n| n == 1) && a.nulls().any(|n| n == last));
        assert_eq!(interchangeable(1, last, &shape, &inst), !joined);
    }

    #[test]
    fn probe_on_both_programs() {
        let s1 = parse_program(SIGMA1).unwrap();
        let shape = parse_atoms("t(X, Y), u(Y, Z)").unwrap();
        let r = bounded_nulls_probe(&d2(), &s1, &shape, (2, 4, 2), DEFAULT_MAX_ATOMS).unwrap();
        assert!(r.violations.is_empty(), "{r:?}");
        assert!(r.new_nulls > 0);
        let s2 = parse_program(SIGMA2).unwrap();
        let shape = parse_atoms("t(X, Y)").unwrap();
        let r = bounded_nulls_probe(&d2(), &s2, &shape, (2, 4, 2), DEFAULT_MAX_ATOMS).unwrap();
        assert!(!r.violations.is_empty());
    }

    #[test]
    fn probe_edge_cases() {
        let shape = parse_atoms("t(X, Y)").unwrap();
        let r = bounded_nulls_probe(&d2(), &Program::default(), &shape, (1, 2, 1), 100).unwrap();
        assert_eq!((r.old_nulls, r.new_nulls), (0, 0));
        assert!(r.violations.is_empty());
        assert!(matches!(
            bounded_nulls_probe(&d2(), &Program::default(), &shape, (2, 2, 1), 100),
            Err(ChaseError::InvalidProbeBounds { .. })
        ));
        let p = parse_program(SIGMA2).unwrap();
        assert!(matches!(
            bounded_nulls_probe(&d2(), &p, &shape, (1, 3, 3), 20),
            Err(ChaseError::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn bounds_arithmetic() {
        let b = probe_bounds(&Database::default(), &Program::default(), &[], 100);
        assert_eq!(b.n_cap, BigValue::exact(1u32));
        let p = parse_program(SIGMA2).unwrap();
        let shape = parse_atoms("t(X, Y)").unwrap();
        let b = probe_bounds(&d2(), &p, &shape, 1000);
        assert_eq!(b.d, bound_b(&p).d);
        // d = |Σ⁰| · |schema| · BELL(2) = 4 · 2 · 2.
        assert_eq!(b.d, BigUint::from(4u32) * 2u32 * bell(2));
        let m = BigUint::from(16u32) * BigUint::from(b.max_pair_vars) * 2u32 * 2u32;
        assert_eq!(b.m, m);
        // Exponent: two database constants, none in the rules, two shape variables.
        assert_eq!(b.n_cap, BigValue::pow(BigValue::Exact(m), BigValue::exact(4u32)));
    }
}
