//! Null-sets, the existential dependency graph and cyclically-affected variables.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Serialize, Serializer};

use crate::syntax::{Atom, Name, Program, Term};

/// The placeholder for nulls invented by existential variable `var` of rule `rule`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NullToken {
    pub rule: Name,
    pub var: Name,
}

impl NullToken {
    pub fn new(rule: &str, var: &str) -> NullToken {
        NullToken {
            rule: rule.into(),
            var: var.into(),
        }
    }
}

impl fmt::Display for NullToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n_{}_{}", self.rule, self.var)
    }
}

impl Serialize for NullToken {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

pub type TokenSet = BTreeSet<NullToken>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Body,
    Head,
}

/// An argument position of one atom occurrence in the program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occurrence {
    pub rule: usize,
    pub side: Side,
    pub atom: usize,
    pub arg: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NullSetTable {
    entries: BTreeMap<Occurrence, TokenSet>,
    head_union: BTreeMap<(Name, usize), TokenSet>,
    pub rounds: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct NullSetRow {
    pub rule: Name,
    pub side: Side,
    pub atom: Atom,
    pub arg: usize,
    pub nulls: TokenSet,
}

impl NullSetTable {
    pub fn get(&self, occ: Occurrence) -> &TokenSet {
        static EMPTY: TokenSet = BTreeSet::new();
        self.entries.get(&occ).unwrap_or(&EMPTY)
    }

    pub fn body(&self, rule: usize, atom: usize, arg: usize) -> &TokenSet {
        self.get(Occurrence {
            rule,
            side: Side::Body,
            atom,
            arg,
        })
    }

    pub fn head(&self, rule: usize, atom: usize, arg: usize) -> &TokenSet {
        self.get(Occurrence {
            rule,
            side: Side::Head,
            atom,
            arg,
        })
    }

    /// Union of the entries of every head atom over `predicate` at argument `arg`.
    pub fn head_union(&self, predicate: &str, arg: usize) -> &TokenSet {
        static EMPTY: TokenSet = BTreeSet::new();
        self.head_union
            .get(&(Name::from(predicate), arg))
            .unwrap_or(&EMPTY)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Occurrence, &TokenSet)> {
        self.entries.iter()
    }

    /// Intersection of the body entries at the occurrences of `var` in rule `rule`.
    pub fn rule_intersection(&self, p: &Program, rule: usize, var: &str) -> TokenSet {
        let mut acc: Option<TokenSet> = None;
        for (i, atom) in p.rules[rule].body.iter().enumerate() {
            for arg in atom.positions_of(var) {
                let s = self.body(rule, i, arg);
                acc = Some(match acc {
                    None => s.clone(),
                    Some(a) => a.intersection(s).cloned().collect(),
                });
            }
        }
        acc.unwrap_or_default()
    }

    /// Intersection over the occurrences of `var` in `atoms` of the head unions.
    pub fn set_intersection(&self, atoms: &[Atom], var: &str) -> TokenSet {
        let mut acc: Option<TokenSet> = None;
        for atom in atoms {
            for arg in atom.positions_of(var) {
                let s = self.head_union(&atom.predicate, arg);
                acc = Some(match acc {
                    None => s.clone(),
                    Some(a) => a.intersection(s).cloned().collect(),
                });
            }
        }
        acc.unwrap_or_default()
    }

    pub fn rows(&self, p: &Program) -> Vec<NullSetRow> {
        self.entries
            .iter()
            .map(|(occ, nulls)| {
                let rule = &p.rules[occ.rule];
                let atom = match occ.side {
                    Side::Body => &rule.body[occ.atom],
                    Side::Head => &rule.head[occ.atom],
                };
                NullSetRow {
                    rule: rule.label.clone(),
                    side: occ.side,
                    atom: atom.clone(),
                    arg: occ.arg + 1,
                    nulls: nulls.clone(),
                }
            })
            .collect()
    }
}

/// Least fixpoint of the null-set equations, starting from empty sets.
///
/// Head positions holding an existential variable get that variable's token;
/// head positions holding a frontier variable get the intersection of the
/// variable's body entries; body positions get the union of all head entries
/// with the same predicate and argument index.
pub fn compute_null_sets(p: &Program) -> NullSetTable {
    let mut table = NullSetTable::default();
    for (r, rule) in p.rules.iter().enumerate() {
        for (i, atom) in rule.body.iter().enumerate() {
            for arg in 0..atom.arity() {
                table.entries.insert(
                    Occurrence {
                        rule: r,
                        side: Side::Body,
                        atom: i,
                        arg,
                    },
                    TokenSet::new(),
                );
            }
        }
        for (i, atom) in rule.head.iter().enumerate() {
            for (arg, t) in atom.args.iter().enumerate() {
                let init = match t {
                    Term::Var(z) if rule.is_existential(z) => {
                        std::iter::once(NullToken::new(&rule.label, z)).collect()
                    }
                    _ => TokenSet::new(),
                };
                table.entries.insert(
                    Occurrence {
                        rule: r,
                        side: Side::Head,
                        atom: i,
                        arg,
                    },
                    init,
                );
            }
        }
    }
    loop {
        table.rounds += 1;
        let mut union: BTreeMap<(Name, usize), TokenSet> = BTreeMap::new();
        for (occ, set) in &table.entries {
            if occ.side == Side::Head {
                let atom = &p.rules[occ.rule].head[occ.atom];
                union
                    .entry((atom.predicate.clone(), occ.arg))
                    .or_default()
                    .extend(set.iter().cloned());
            }
        }
        table.head_union = union;
        let mut changed = false;
        for (r, rule) in p.rules.iter().enumerate() {
            for (i, atom) in rule.body.iter().enumerate() {
                for arg in 0..atom.arity() {
                    let new = table.head_union(&atom.predicate, arg).clone();
                    let occ = Occurrence {
                        rule: r,
                        side: Side::Body,
                        atom: i,
                        arg,
                    };
                    if table.entries[&occ] != new {
                        changed = true;
                        table.entries.insert(occ, new);
                    }
                }
            }
        }
        for (r, rule) in p.rules.iter().enumerate() {
            for (i, atom) in rule.head.iter().enumerate() {
                for (arg, t) in atom.args.iter().enumerate() {
                    let Term::Var(y) = t else { continue };
                    if rule.is_existential(y) {
                        continue;
                    }
                    let new = table.rule_intersection(p, r, y);
                    let occ = Occurrence {
                        rule: r,
                        side: Side::Head,
                        atom: i,
                        arg,
                    };
                    if table.entries[&occ] != new {
                        changed = true;
                        table.entries.insert(occ, new);
                    }
                }
            }
        }
        if !changed {
            return table;
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExistentialDependencyGraph {
    pub nodes: TokenSet,
    pub edges: BTreeSet<(NullToken, NullToken)>,
}

impl ExistentialDependencyGraph {
    pub fn successors<'a>(&'a self, n: &'a NullToken) -> impl Iterator<Item = &'a NullToken> + 'a {
        self.edges
            .iter()
            .filter(move |(a, _)| a == n)
            .map(|(_, b)| b)
    }

    /// Deterministic DOT rendering; tokens in `highlight` are drawn filled.
    pub fn to_dot(&self, highlight: &TokenSet) -> String {
        let mut out = String::from("digraph existential_dependencies {\n");
        for n in &self.nodes {
            if highlight.contains(n) {
                out.push_str(&format!(
                    "  \"{n}\" [style=filled, fillcolor=lightcoral, cyclic=true];\n"
                ));
            } else {
                out.push_str(&format!("  \"{n}\";\n"));
            }
        }
        for (a, b) in &self.edges {
            out.push_str(&format!("  \"{a}\" -> \"{b}\";\n"));
        }
        out.push_str("}\n");
        out
    }
}

/// Edge `n' -> n(σ, Z)` whenever `n'` survives the body intersection of some
/// frontier variable of `σ` and `Z` is existential in `σ`.
pub fn build_dependency_graph(p: &Program, t: &NullSetTable) -> ExistentialDependencyGraph {
    let mut g = ExistentialDependencyGraph::default();
    for (_, set) in t.iter() {
        g.nodes.extend(set.iter().cloned());
    }
    for (r, rule) in p.rules.iter().enumerate() {
        if rule.existentials.is_empty() {
            continue;
        }
        let targets: Vec<NullToken> = rule
            .existentials
            .iter()
            .map(|z| NullToken::new(&rule.label, z))
            .collect();
        for y in rule.frontier() {
            for source in t.rule_intersection(p, r, &y) {
                for target in &targets {
                    g.edges.insert((source.clone(), target.clone()));
                }
            }
        }
    }
    g
}

/// Tokens lying on a cycle, plus everything reachable from them.
pub fn cyc_null(g: &ExistentialDependencyGraph) -> TokenSet {
    let mut graph: DiGraph<&NullToken, ()> = DiGraph::new();
    let mut index: BTreeMap<&NullToken, NodeIndex> = BTreeMap::new();
    for n in &g.nodes {
        index.insert(n, graph.add_node(n));
    }
    for (a, b) in &g.edges {
        let ia = *index.entry(a).or_insert_with(|| graph.add_node(a));
        let ib = *index.entry(b).or_insert_with(|| graph.add_node(b));
        graph.add_edge(ia, ib, ());
    }
    let mut seeds = Vec::new();
    for scc in tarjan_scc(&graph) {
        let cyclic = scc.len() > 1 || graph.contains_edge(scc[0], scc[0]);
        if cyclic {
            seeds.extend(scc);
        }
    }
    let mut seen: BTreeSet<NodeIndex> = seeds.iter().copied().collect();
    let mut queue: VecDeque<NodeIndex> = seeds.into_iter().collect();
    while let Some(n) = queue.pop_front() {
        for m in graph.neighbors(n) {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    seen.into_iter().map(|i| graph[i].clone()).collect()
}

/// Everything about a program's nulls that the later analyses consult.
#[derive(Clone, Debug)]
pub struct NullAnalysis {
    pub table: NullSetTable,
    pub graph: ExistentialDependencyGraph,
    pub cyclic: TokenSet,
}

impl NullAnalysis {
    pub fn new(p: &Program) -> NullAnalysis {
        let table = compute_null_sets(p);
        let graph = build_dependency_graph(p, &table);
        let cyclic = cyc_null(&graph);
        NullAnalysis {
            table,
            graph,
            cyclic,
        }
    }

    /// Whether `var` may carry a cyclic null through every occurrence in `atoms`.
    pub fn is_cyclically_affected(&self, atoms: &[Atom], var: &str) -> bool {
        !self.cyclic.is_empty()
            && self
                .table
                .set_intersection(atoms, var)
                .iter()
                .any(|n| self.cyclic.contains(n))
    }

    pub fn var_hat(&self, atoms: &[Atom]) -> BTreeSet<Name> {
        crate::syntax::vars_of(atoms)
            .into_iter()
            .filter(|v| self.is_cyclically_affected(atoms, v))
            .collect()
    }

    pub fn link_vars(&self, atoms: &[Atom], b1: &Atom, b2: &Atom) -> BTreeSet<Name> {
        let hat = self.var_hat(atoms);
        link_with(&hat, b1, b2)
    }
}

pub(crate) fn link_with(hat: &BTreeSet<Name>, b1: &Atom, b2: &Atom) -> BTreeSet<Name> {
    let v2 = b2.var_set();
    b1.var_set()
        .into_iter()
        .filter(|v| v2.contains(v) && hat.contains(v))
        .collect()
}

pub fn var_hat(p: &Program, b: &[Atom]) -> BTreeSet<Name> {
    NullAnalysis::new(p).var_hat(b)
}

pub fn link_vars(p: &Program, b: &[Atom], b1: &Atom, b2: &Atom) -> BTreeSet<Name> {
    NullAnalysis::new(p).link_vars(b, b1, b2)
}
