//! Seeded random rule sets for property tests.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::syntax::{Atom, Name, Program, Rule, Term};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenParams {
    pub seed: u64,
    pub max_rules: usize,
    pub max_body_atoms: usize,
    pub max_arity: usize,
    pub n_predicates: usize,
    pub n_variables: usize,
    pub existential_probability: f64,
}

impl Default for GenParams {
    fn default() -> GenParams {
        GenParams {
            seed: 0,
            max_rules: 3,
            max_body_atoms: 2,
            max_arity: 3,
            n_predicates: 3,
            n_variables: 4,
            existential_probability: 0.3,
        }
    }
}

impl GenParams {
    fn clamped(&self) -> GenParams {
        GenParams {
            seed: self.seed,
            max_rules: self.max_rules.max(1),
            max_body_atoms: self.max_body_atoms.max(1),
            max_arity: self.max_arity.max(1),
            n_predicates: self.n_predicates.max(1),
            n_variables: self.n_variables.max(1),
            existential_probability: self.existential_probability.clamp(0.0, 1.0),
        }
    }
}

/// Smaller arities are drawn more often.
fn arity(rng: &mut ChaCha8Rng, max: usize) -> usize {
    let weights: Vec<usize> = (1..=max).map(|a| max + 1 - a).collect();
    let total: usize = weights.iter().sum();
    let mut pick = rng.gen_range(0..total);
    for (i, w) in weights.iter().enumerate() {
        if pick < *w {
            return i + 1;
        }
        pick -= w;
    }
    max
}

/// A program with single-atom heads, deterministic in `g.seed`. Body
/// variables are reused often so that joins are common.
pub fn random_ruleset(g: &GenParams) -> Program {
    let g = g.clamped();
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let arities: Vec<usize> = (0..g.n_predicates)
        .map(|_| arity(&mut rng, g.max_arity))
        .collect();
    let pred = |i: usize| Name::from(format!("p{i}").as_str());
    let n_rules = rng.gen_range(1..=g.max_rules);
    let mut rules = Vec::new();
    for r in 0..n_rules {
        let n_body = rng.gen_range(1..=g.max_body_atoms);
        let mut used: Vec<Name> = Vec::new();
        let mut body = Vec::new();
        for _ in 0..n_body {
            let pi = rng.gen_range(0..g.n_predicates);
            let args = (0..arities[pi])
                .map(|_| {
                    let v = if !used.is_empty() && rng.gen_bool(0.5) {
                        used[rng.gen_range(0..used.len())].clone()
                    } else {
                        Name::from(format!("X{}", rng.gen_range(0..g.n_variables)).as_str())
                    };
                    if !used.contains(&v) {
                        used.push(v.clone());
                    }
                    Term::Var(v)
                })
                .collect();
            body.push(Atom::new(pred(pi), args));
        }
        let hi = rng.gen_range(0..g.n_predicates);
        let mut existentials = BTreeSet::new();
        let args = (0..arities[hi])
            .map(|_| {
                if rng.gen_bool(g.existential_probability) {
                    let z = Name::from(format!("Z{}", existentials.len()).as_str());
                    existentials.insert(z.clone());
                    Term::Var(z)
                } else {
                    Term::Var(used[rng.gen_range(0..used.len())].clone())
                }
            })
            .collect();
        let head = vec![Atom::new(pred(hi), args)];
        let label = Name::from(format!("r{}", r + 1).as_str());
        rules.push(Rule::new(label, body, head, existentials).expect("generated rules are well formed"));
    }
    Program::new(rules).expect("predicates keep one arity")
}
