//! Membership checks for four well-known decidable classes: weakly acyclic,
//! guarded, sticky and shy rule sets.

mod generator;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::nullsets::{compute_null_sets, NullSetTable, TokenSet};
use crate::syntax::{Name, Program, Rule};

pub use generator::{random_ruleset, GenParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ClassName {
    Wa,
    Guarded,
    Sticky,
    Shy,
}

impl ClassName {
    pub const ALL: [ClassName; 4] = [
        ClassName::Wa,
        ClassName::Guarded,
        ClassName::Sticky,
        ClassName::Shy,
    ];

    pub fn check(self, p: &Program) -> ClassVerdict {
        match self {
            ClassName::Wa => is_weakly_acyclic(p),
            ClassName::Guarded => is_guarded(p),
            ClassName::Sticky => is_sticky(p),
            ClassName::Shy => is_shy(p),
        }
    }
}

impl fmt::Display for ClassName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassName::Wa => "WA",
            ClassName::Guarded => "GUARDED",
            ClassName::Sticky => "STICKY",
            ClassName::Shy => "SHY",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassVerdict {
    pub class_name: ClassName,
    pub member: bool,
    /// For non-members, what breaks the condition; empty otherwise.
    pub evidence: String,
}

impl ClassVerdict {
    fn member(class_name: ClassName) -> ClassVerdict {
        ClassVerdict {
            class_name,
            member: true,
            evidence: String::new(),
        }
    }

    fn violation(class_name: ClassName, evidence: String) -> ClassVerdict {
        ClassVerdict {
            class_name,
            member: false,
            evidence,
        }
    }
}

/// A predicate argument, shown as `p[i]` with `i` counted from 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub predicate: Name,
    pub index: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.predicate, self.index + 1)
    }
}

fn positions_of(atoms: &[crate::syntax::Atom], v: &str) -> Vec<Position> {
    atoms
        .iter()
        .flat_map(|a| {
            a.positions_of(v).into_iter().map(|i| Position {
                predicate: a.predicate.clone(),
                index: i,
            })
        })
        .collect()
}

/// The position graph: for every frontier variable, ordinary edges to its head
/// positions and special edges to the positions of existential variables.
pub fn position_graph(p: &Program) -> BTreeSet<(Position, Position, bool)> {
    let mut edges = BTreeSet::new();
    for rule in &p.rules {
        let ex: Vec<Position> = rule
            .existentials
            .iter()
            .flat_map(|z| positions_of(&rule.head, z))
            .collect();
        for x in rule.frontier() {
            for from in positions_of(&rule.body, &x) {
                for to in positions_of(&rule.head, &x) {
                    edges.insert((from.clone(), to, false));
                }
                for to in &ex {
                    edges.insert((from.clone(), to.clone(), true));
                }
            }
        }
    }
    edges
}

/// Weakly acyclic iff no cycle of the position graph uses a special edge.
pub fn is_weakly_acyclic(p: &Program) -> ClassVerdict {
    let edges = position_graph(p);
    let mut g: DiGraph<Position, bool> = DiGraph::new();
    let mut ids: BTreeMap<Position, NodeIndex> = BTreeMap::new();
    for (a, b, _) in &edges {
        for n in [a, b] {
            if !ids.contains_key(n) {
                ids.insert(n.clone(), g.add_node(n.clone()));
            }
        }
    }
    for (a, b, special) in &edges {
        g.add_edge(ids[a], ids[b], *special);
    }
    let mut comp = vec![0; g.node_count()];
    for (c, scc) in tarjan_scc(&g).into_iter().enumerate() {
        for n in scc {
            comp[n.index()] = c;
        }
    }
    for (a, b, special) in &edges {
        if *special && comp[ids[a].index()] == comp[ids[b].index()] {
            let back = shortest_path(&g, ids[b], ids[a]);
            let mut cycle = vec![a.to_string(), format!("=> {b}")];
            cycle.extend(back.iter().skip(1).map(|n| format!("-> {}", g[*n])));
            return ClassVerdict::violation(ClassName::Wa, cycle.join(" "));
        }
    }
    ClassVerdict::member(ClassName::Wa)
}

fn shortest_path(g: &DiGraph<Position, bool>, from: NodeIndex, to: NodeIndex) -> Vec<NodeIndex> {
    let mut prev: BTreeMap<NodeIndex, NodeIndex> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = BTreeSet::from([from]);
    while let Some(n) = queue.pop_front() {
        if n == to {
            break;
        }
        let mut next: Vec<NodeIndex> = g.neighbors(n).collect();
        next.sort();
        for m in next {
            if seen.insert(m) {
                prev.insert(m, n);
                queue.push_back(m);
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[&cur];
        path.push(cur);
    }
    path.reverse();
    path
}

/// Guarded iff every rule body has an atom holding all body variables.
pub fn is_guarded(p: &Program) -> ClassVerdict {
    for rule in &p.rules {
        let vars = rule.body_vars();
        if !rule.body.iter().any(|a| vars.iter().all(|v| a.contains_var(v))) {
            return ClassVerdict::violation(
                ClassName::Guarded,
                format!("rule {}: no body atom contains all of {}", rule.label, list(&vars)),
            );
        }
    }
    ClassVerdict::member(ClassName::Guarded)
}

fn list(vars: &BTreeSet<Name>) -> String {
    let v: Vec<&str> = vars.iter().map(|v| &**v).collect();
    format!("{{{}}}", v.join(", "))
}

/// Body variables marked by the sticky marking procedure, per rule.
pub fn sticky_marking(p: &Program) -> Vec<BTreeSet<Name>> {
    let mut marked: Vec<BTreeSet<Name>> = p
        .rules
        .iter()
        .map(|r| {
            r.body_vars()
                .into_iter()
                .filter(|v| r.head.iter().any(|h| !h.contains_var(v)))
                .collect()
        })
        .collect();
    loop {
        let positions: BTreeSet<Position> = p
            .rules
            .iter()
            .zip(&marked)
            .flat_map(|(r, m)| m.iter().flat_map(|v| positions_of(&r.body, v)))
            .collect();
        let mut changed = false;
        for (r, m) in p.rules.iter().zip(marked.iter_mut()) {
            for v in r.frontier() {
                if !m.contains(&v) && positions_of(&r.head, &v).iter().any(|q| positions.contains(q)) {
                    m.insert(v);
                    changed = true;
                }
            }
        }
        if !changed {
            return marked;
        }
    }
}

/// Sticky iff no marked variable occurs more than once in a rule body.
pub fn is_sticky(p: &Program) -> ClassVerdict {
    for (rule, m) in p.rules.iter().zip(sticky_marking(p)) {
        for v in &m {
            let n: usize = rule.body.iter().map(|a| a.positions_of(v).len()).sum();
            if n > 1 {
                return ClassVerdict::violation(
                    ClassName::Sticky,
                    format!("rule {}: marked variable {v} occurs {n} times in the body", rule.label),
                );
            }
        }
    }
    ClassVerdict::member(ClassName::Sticky)
}

/// The nulls that may reach `v` through every body occurrence in `rule`.
fn attackers(table: &NullSetTable, p: &Program, r: usize, v: &str) -> TokenSet {
    table.rule_intersection(p, r, v)
}

fn atoms_with(rule: &Rule, v: &str) -> BTreeSet<usize> {
    rule.body
        .iter()
        .enumerate()
        .filter(|(_, a)| a.contains_var(v))
        .map(|(i, _)| i)
        .collect()
}

/// Shy iff in every rule a variable joining two body atoms can hold no null,
/// and two head variables from different body atoms cannot hold the same null.
pub fn is_shy(p: &Program) -> ClassVerdict {
    let table = compute_null_sets(p);
    for (r, rule) in p.rules.iter().enumerate() {
        let vars: Vec<Name> = rule.body_vars().into_iter().collect();
        for v in &vars {
            let att = attackers(&table, p, r, v);
            if atoms_with(rule, v).len() > 1 && !att.is_empty() {
                return ClassVerdict::violation(
                    ClassName::Shy,
                    format!(
                        "rule {}: join variable {v} is attacked by {}",
                        rule.label,
                        att.iter().next().expect("nonempty")
                    ),
                );
            }
        }
        let frontier = rule.frontier();
        for (i, x) in vars.iter().enumerate() {
            for y in &vars[i + 1..] {
                if !frontier.contains(x) || !frontier.contains(y) {
                    continue;
                }
                let together = rule.body.iter().any(|a| a.contains_var(x) && a.contains_var(y));
                if together {
                    continue;
                }
                let ax = attackers(&table, p, r, x);
                let ay = attackers(&table, p, r, y);
                if let Some(n) = ax.intersection(&ay).next() {
                    return ClassVerdict::violation(
                        ClassName::Shy,
                        format!(
                            "rule {}: head variables {x} and {y} from different body atoms are both attacked by {n}",
                            rule.label
                        ),
                    );
                }
            }
        }
    }
    ClassVerdict::member(ClassName::Shy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    const SIGMA1: &str = "s11: t(X, Y) -> exists Z: t(Y, Z), u(Y, Z).\n\
                          s12: t(X, Y), u(Y, Z) -> t(Y, Z), u(X, Y).";
    const SIGMA2: &str = "s11: t(X, Y) -> exists Z: t(Y, Z), u(Y, Z).\n\
                          s12: t(X, Y), u(Y, Z) -> t(X, Z), u(X, Y).";

    fn prog(s: &str) -> Program {
        parse_program(s).unwrap()
    }

    #[test]
    fn sigma1_is_in_none_of_the_classes() {
        let p = prog(SIGMA1);
        for c in ClassName::ALL {
            let v = c.check(&p);
            assert!(!v.member, "{c}");
            assert!(!v.evidence.is_empty());
        }
    }

    #[test]
    fn weak_acyclicity() {
        assert!(is_weakly_acyclic(&prog("r: t(X, Y), t(Y, Z) -> t(X, Z).")).member);
        let v = is_weakly_acyclic(&prog("r: t(X, Y) -> exists Z: t(Y, Z)."));
        assert!(!v.member);
        assert_eq!(v.evidence, "t[2] => t[2]");
        let edges = position_graph(&prog("r: t(X, Y) -> exists Z: t(Y, Z)."));
        let shown: Vec<String> = edges
            .iter()
            .map(|(a, b, s)| format!("{a}{}{b}", if *s { "=>" } else { "->" }))
            .collect();
        assert_eq!(shown, vec!["t[2]->t[1]", "t[2]=>t[2]"]);
        assert!(is_weakly_acyclic(&prog("r: p(X) -> exists Y: q(X, Y).")).member);
    }

    #[test]
    fn guardedness() {
        assert!(is_guarded(&prog("s11: t(X, Y) -> exists Z: t(Y, Z), u(Y, Z).")).member);
        assert!(is_guarded(&prog("g: r(X, Y, Z), s(X, Y, Z) -> v(X).")).member);
        let v = is_guarded(&prog(SIGMA1));
        assert_eq!(v.evidence, "rule s12: no body atom contains all of {X, Y, Z}");
    }

    #[test]
    fn stickiness() {
        assert!(is_sticky(&prog("r: t(X, Y) -> s(X, Y).")).member);
        let v = is_sticky(&prog("r: t(X, Y), t(Y, Z) -> t(X, Z)."));
        assert!(!v.member);
        assert!(v.evidence.contains("marked variable Y"));
        let m = sticky_marking(&prog(SIGMA1));
        let s12: Vec<&str> = m[1].iter().map(|v| &**v).collect();
        assert_eq!(s12, vec!["X", "Y", "Z"]);
    }

    #[test]
    fn shyness() {
        assert!(is_shy(&prog("r: t(X, Y), t(Y, Z) -> t(X, Z).")).member);
        // In Σ₂ the null of s11 reaches t[2] and u[2]; Y joins t[2] with u[1].
        // u[1] only ever holds the frontier Y of s11 or X of s12, both of which
        // can carry the null, so Y is attacked.
        let v = is_shy(&prog(SIGMA2));
        assert!(!v.member);
        assert_eq!(v.evidence, "rule s12: join variable Y is attacked by n_s11_Z");
        assert!(is_shy(&prog("r: p(X) -> exists Y: q(X, Y).\ns: q(X, Y), p(X) -> p(X).")).member);
    }

    #[test]
    fn class_names_print() {
        let names: Vec<String> = ClassName::ALL.iter().map(|c| c.to_string()).collect();
        assert_eq!(names, vec!["WA", "GUARDED", "STICKY", "SHY"]);
    }
}
