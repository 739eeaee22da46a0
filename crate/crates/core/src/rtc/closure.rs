//! A finite over-approximation of the unfolded pairs.
//!
//! Unfolding a body atom rewrites only that atom's variables, so connected
//! components of a body never merge and never gain head variables. A state
//! therefore follows one component holding at least two head variables.
//!
//! Inside a component only atoms with two or more head variables are kept
//! explicitly. Other body variables are summarised by their hidden component:
//! such a component becomes a label `K<i>` that records which head variables
//! its atoms touch and which head variables it may itself contain; a hidden
//! component joining nothing collapses to `_`. Atoms reaching a single head
//! variable survive only through the labels, since unfolding them can neither
//! join two head variables nor remove a guard. Labels with equal summaries
//! are merged, so the state space is finite.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::extension::sigma0;
use crate::nullsets::{NullAnalysis, TokenSet};
use crate::syntax::{mgu, Atom, Name, Program, Substitution, Term};

pub const DEFAULT_STATE_CAP: usize = 50_000;

const WILD: &str = "_";

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Label {
    /// Head variables occurring in atoms of the hidden component.
    touch: BTreeSet<Name>,
    /// Head variables the hidden component's variables may have become.
    attach: BTreeSet<Name>,
}

/// What the summarised atoms of a head variable say about its nulls.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Hint {
    /// Cyclic nulls allowed by every summarised occurrence.
    cyclic: TokenSet,
    /// Some summarised occurrence sits where a rule head may put a null, so
    /// unfolding it could drop the occurrence.
    fragile: bool,
}

impl Hint {
    fn meet(&mut self, other: &Hint) {
        self.cyclic = self.cyclic.intersection(&other.cyclic).cloned().collect();
        self.fragile |= other.fragile;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct State {
    head: Atom,
    guards: BTreeSet<Atom>,
    labels: BTreeMap<Name, Label>,
    hints: BTreeMap<Name, Hint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosureOutcome {
    /// No reachable state has two connected, cyclically affected head
    /// variables without a common body atom.
    NoCandidate,
    /// Some state may hold such a pair.
    Candidate,
    /// The state cap was reached first.
    Exhausted,
}

#[derive(Clone, Debug)]
pub struct ClosureReport {
    pub outcome: ClosureOutcome,
    pub states: usize,
}

fn var(name: &str) -> Term {
    Term::Var(Name::from(name))
}

fn is_head_name(v: &str) -> bool {
    v.starts_with('H')
}

fn rename_u(atom: &Atom) -> Atom {
    Atom {
        predicate: atom.predicate.clone(),
        args: atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => var(&format!("U{v}")),
                other => other.clone(),
            })
            .collect(),
    }
}

#[derive(Default)]
struct UnionFind {
    parent: BTreeMap<Name, Name>,
}

impl UnionFind {
    fn find(&mut self, v: &Name) -> Name {
        let mut r = v.clone();
        while let Some(p) = self.parent.get(&r) {
            if *p == r {
                break;
            }
            r = p.clone();
        }
        self.parent.entry(v.clone()).or_insert_with(|| r.clone());
        r
    }

    fn union(&mut self, a: &Name, b: &Name) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent.insert(hi, lo);
        }
    }
}

/// Raw material for states: atoms over arbitrary variable names, where every
/// variable outside the head stands for a hidden body variable. `links` join
/// hidden variables; `touch` and `attach` relate hidden variables to head
/// variables as in [`Label`].
struct Draft {
    head: Atom,
    atoms: Vec<Atom>,
    links: Vec<(Name, Name)>,
    touch: Vec<(Name, Name)>,
    attach: Vec<(Name, Name)>,
    hints: Vec<(Name, Hint)>,
}

impl Draft {
    fn new(head: Atom, atoms: Vec<Atom>) -> Draft {
        Draft {
            head,
            atoms,
            links: Vec::new(),
            touch: Vec::new(),
            attach: Vec::new(),
            hints: Vec::new(),
        }
    }
}

fn head_vars_of(head: &Atom) -> BTreeSet<Name> {
    head.vars().filter(|v| &***v != WILD).cloned().collect()
}

/// Splits a draft into components and summarises each one holding at least
/// two head variables.
fn normalize(cx: &Context, d: Draft) -> Vec<State> {
    let head_vars = head_vars_of(&d.head);
    let is_head = |v: &Name| head_vars.contains(v);
    let hidden = |a: &Atom| -> Vec<Name> { a.vars().filter(|v| !is_head(v)).cloned().collect() };

    let mut huf = UnionFind::default();
    for a in &d.atoms {
        let vs = hidden(a);
        for w in vs.windows(2) {
            huf.union(&w[0], &w[1]);
        }
        for v in &vs {
            huf.find(v);
        }
    }
    for (a, b) in &d.links {
        huf.union(a, b);
    }
    let mut touch: BTreeMap<Name, BTreeSet<Name>> = BTreeMap::new();
    let mut attach: BTreeMap<Name, BTreeSet<Name>> = BTreeMap::new();
    let mut in_guard: BTreeMap<Name, usize> = BTreeMap::new();
    let mut guards: Vec<Atom> = Vec::new();
    let mut hints: BTreeMap<Name, Hint> = BTreeMap::new();
    for (y, h) in &d.hints {
        if is_head(y) {
            meet_into(&mut hints, y, h);
        }
    }
    for a in &d.atoms {
        let heads: BTreeSet<&Name> = a.vars().filter(|v| is_head(v)).collect();
        if heads.len() == 1 {
            let y = heads.first().unwrap();
            for i in a.positions_of(y) {
                let h = cx.hint_at(&a.predicate, i);
                meet_into(&mut hints, y, &h);
            }
        }
        if heads.len() >= 2 {
            for v in a.args.iter().filter_map(Term::as_var).filter(|v| !is_head(v)) {
                *in_guard.entry(huf.find(v)).or_default() += 1;
            }
            guards.push(a.clone());
        } else if let (Some(y), Some(v)) = (heads.first(), hidden(a).first()) {
            touch.entry(huf.find(v)).or_default().insert((*y).clone());
        }
    }
    for (node, y) in &d.touch {
        if is_head(y) {
            touch.entry(huf.find(node)).or_default().insert(y.clone());
        }
    }
    for (node, y) in &d.attach {
        if is_head(y) {
            attach.entry(huf.find(node)).or_default().insert(y.clone());
        }
    }
    // A hidden component becomes a label when it joins at least two things.
    let candidates: BTreeSet<Name> = touch
        .keys()
        .chain(attach.keys())
        .chain(in_guard.keys())
        .cloned()
        .collect();
    let roots: BTreeSet<Name> = candidates
        .into_iter()
        .filter(|r| {
            let n = in_guard.get(r).copied().unwrap_or(0)
                + touch.get(r).map_or(0, BTreeSet::len)
                + attach.get(r).map_or(0, BTreeSet::len);
            n >= 2
        })
        .collect();

    let mut cuf = UnionFind::default();
    for g in &guards {
        let vs: Vec<Name> = g
            .vars()
            .map(|v| if is_head(v) { v.clone() } else { huf.find(v) })
            .filter(|v| is_head(v) || roots.contains(v))
            .collect();
        for w in vs.windows(2) {
            cuf.union(&w[0], &w[1]);
        }
    }
    for r in &roots {
        cuf.find(r);
        for y in touch.get(r).into_iter().chain(attach.get(r)).flatten() {
            cuf.union(r, y);
        }
    }
    let mut comps: BTreeMap<Name, BTreeSet<Name>> = BTreeMap::new();
    for y in &head_vars {
        if cuf.parent.contains_key(y) {
            let c = cuf.find(y);
            comps.entry(c).or_default().insert(y.clone());
        }
    }

    let mut out = Vec::new();
    for (comp, heads) in comps {
        if heads.len() < 2 {
            continue;
        }
        let mut hname: BTreeMap<Name, Name> = BTreeMap::new();
        for v in d.head.vars().filter(|v| heads.contains(*v)) {
            let n = hname.len() + 1;
            hname
                .entry(v.clone())
                .or_insert_with(|| Name::from(format!("H{n}").as_str()));
        }
        let my_roots: Vec<Name> = roots
            .iter()
            .filter(|r| cuf.find(r) == comp)
            .cloned()
            .collect();
        let my_guards: Vec<&Atom> = guards
            .iter()
            .filter(|g| g.vars().any(|v| heads.contains(v)))
            .collect();
        let render = |a: &Atom, huf: &mut UnionFind, lbl: &dyn Fn(&Name) -> Term| Atom {
            predicate: a.predicate.clone(),
            args: a
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) if hname.contains_key(v) => Term::Var(hname[v].clone()),
                    Term::Var(v) => lbl(&huf.find(v)),
                    other => other.clone(),
                })
                .collect(),
        };
        let rename = |s: Option<&BTreeSet<Name>>| -> BTreeSet<Name> {
            s.into_iter().flatten().map(|y| hname[y].clone()).collect()
        };
        let mut summary: BTreeMap<Name, (BTreeSet<Atom>, Label)> = BTreeMap::new();
        for r in &my_roots {
            let mut marked = BTreeSet::new();
            for g in &my_guards {
                if hidden(g).iter().any(|v| huf.find(v) == *r) {
                    marked.insert(render(g, &mut huf, &|x: &Name| {
                        if x == r {
                            var("*")
                        } else if roots.contains(x) {
                            var("?")
                        } else {
                            var(WILD)
                        }
                    }));
                }
            }
            let label = Label {
                touch: rename(touch.get(r)),
                attach: rename(attach.get(r)),
            };
            summary.insert(r.clone(), (marked, label));
        }
        let distinct: BTreeSet<&(BTreeSet<Atom>, Label)> = summary.values().collect();
        let names: BTreeMap<&(BTreeSet<Atom>, Label), Name> = distinct
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, Name::from(format!("K{}", i + 1).as_str())))
            .collect();
        let root_label: BTreeMap<Name, Name> = summary
            .iter()
            .map(|(r, s)| (r.clone(), names[s].clone()))
            .collect();
        let mut guards_out = BTreeSet::new();
        for g in &my_guards {
            guards_out.insert(render(g, &mut huf, &|x: &Name| match root_label.get(x) {
                Some(l) => Term::Var(l.clone()),
                None => var(WILD),
            }));
        }
        let labels: BTreeMap<Name, Label> = summary
            .iter()
            .map(|(r, (_, l))| (root_label[r].clone(), l.clone()))
            .collect();
        let head = Atom {
            predicate: d.head.predicate.clone(),
            args: d
                .head
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => match hname.get(v) {
                        Some(h) => Term::Var(h.clone()),
                        None => var(WILD),
                    },
                    other => other.clone(),
                })
                .collect(),
        };
        let hints = hints
            .iter()
            .filter_map(|(y, h)| Some((hname.get(y)?.clone(), h.clone())))
            .collect();
        out.push(State {
            head,
            guards: guards_out,
            labels,
            hints,
        });
    }
    out
}

fn meet_into(hints: &mut BTreeMap<Name, Hint>, y: &Name, h: &Hint) {
    match hints.get_mut(y) {
        Some(old) => old.meet(h),
        None => {
            hints.insert(y.clone(), h.clone());
        }
    }
}

struct Context<'a> {
    analysis: &'a NullAnalysis,
    /// Positions where some rule head has an existential variable.
    null_positions: BTreeSet<(Name, usize)>,
}

impl<'a> Context<'a> {
    fn new(p: &Program, analysis: &'a NullAnalysis) -> Context<'a> {
        let mut null_positions = BTreeSet::new();
        for rule in &p.rules {
            for h in &rule.head {
                for (i, t) in h.args.iter().enumerate() {
                    if matches!(t, Term::Var(v) if rule.is_existential(v)) {
                        null_positions.insert((h.predicate.clone(), i));
                    }
                }
            }
        }
        Context {
            analysis,
            null_positions,
        }
    }

    fn hint_at(&self, predicate: &Name, i: usize) -> Hint {
        Hint {
            cyclic: self
                .analysis
                .table
                .head_union(predicate, i)
                .intersection(&self.analysis.cyclic)
                .cloned()
                .collect(),
            fragile: self.null_positions.contains(&(predicate.clone(), i)),
        }
    }
}

/// A template position that still has to be filled.
struct Slot {
    index: usize,
    /// Hidden component of the position.
    node: Name,
    /// Head variables the position may hold.
    heads: Vec<Name>,
}

/// All fillings of `slots` in `atom`: each position takes an allowed head
/// variable or a fresh variable, and positions of one component may share
/// fresh variables. Also returns the component of each fresh variable.
fn fillings(atom: &Atom, slots: &[Slot]) -> Vec<(Atom, Vec<(Name, Name)>)> {
    fn rec(
        atom: &Atom,
        slots: &[Slot],
        cur: &mut Vec<Term>,
        fresh: &mut Vec<(Name, Name)>,
        out: &mut Vec<(Atom, Vec<(Name, Name)>)>,
    ) {
        let k = cur.len();
        if k == slots.len() {
            let mut args = atom.args.clone();
            for (s, t) in slots.iter().zip(cur.iter()) {
                args[s.index] = t.clone();
            }
            out.push((Atom::new(atom.predicate.clone(), args), fresh.clone()));
            return;
        }
        let slot = &slots[k];
        let shared: Vec<Name> = fresh
            .iter()
            .filter(|(_, node)| *node == slot.node)
            .map(|(f, _)| f.clone())
            .collect();
        for t in slot.heads.iter().chain(&shared) {
            cur.push(Term::Var(t.clone()));
            rec(atom, slots, cur, fresh, out);
            cur.pop();
        }
        let f = Name::from(format!("F{}", fresh.len()).as_str());
        fresh.push((f.clone(), slot.node.clone()));
        cur.push(Term::Var(f));
        rec(atom, slots, cur, fresh, out);
        cur.pop();
        fresh.pop();
    }
    let mut out = Vec::new();
    rec(atom, slots, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

fn possibly_equal(k: &Atom, eta2: &Substitution, target: &Atom) -> bool {
    k.predicate == target.predicate
        && k.arity() == target.arity()
        && k.args.iter().zip(&target.args).all(|(s, t)| {
            matches!(s, Term::Var(v) if !is_head_name(v)) || eta2.apply_term(s) == *t
        })
}

struct Explorer<'a> {
    cx: Context<'a>,
    base: Vec<(Vec<Atom>, Atom)>,
}

impl Explorer<'_> {
    /// Guards with each `_` replaced by a variable of its own.
    fn draft_guards(st: &State) -> Vec<Atom> {
        let mut n = 0;
        st.guards
            .iter()
            .map(|a| Atom {
                predicate: a.predicate.clone(),
                args: a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) if &**v == WILD => {
                            n += 1;
                            var(&format!("I{n}"))
                        }
                        other => other.clone(),
                    })
                    .collect(),
            })
            .collect()
    }

    fn successors(&self, st: &State) -> Vec<State> {
        let guards = Self::draft_guards(st);
        let mut out = Vec::new();
        for (y, h) in &st.hints {
            if h.fragile {
                let mut next = st.clone();
                next.hints.remove(y);
                out.push(next);
            }
        }
        for (i, g) in guards.iter().enumerate() {
            let slots: Vec<Slot> = g
                .args
                .iter()
                .enumerate()
                .filter_map(|(j, t)| match t {
                    Term::Var(v) if !is_head_name(v) => Some(Slot {
                        index: j,
                        node: v.clone(),
                        heads: st
                            .labels
                            .get(v)
                            .map(|l| l.attach.iter().cloned().collect())
                            .unwrap_or_default(),
                    }),
                    _ => None,
                })
                .collect();
            for (filled, fresh) in fillings(g, &slots) {
                for (b1, h1) in &self.base {
                    let Some((eta1, eta2)) = mgu(h1, &filled) else {
                        continue;
                    };
                    let step = Step {
                        origin: i,
                        filled: &filled,
                        fresh: &fresh,
                        body: b1,
                        eta1: &eta1,
                        eta2: &eta2,
                    };
                    self.expand(st, &guards, step, &mut out);
                }
            }
        }
        out
    }

    fn expand(&self, st: &State, guards: &[Atom], step: Step<'_>, out: &mut Vec<State>) {
        let Step {
            origin,
            filled,
            fresh,
            body,
            eta1,
            eta2,
        } = step;
        let target = eta2.apply_atom(filled);
        let head = eta2.apply_atom(&st.head);
        let head_vars = head_vars_of(&head);
        let image = |y: &Name| eta2.apply_term(&Term::Var(y.clone())).as_var().cloned();
        let mut links = Vec::new();
        let mut attach = Vec::new();
        let mut touch = Vec::new();
        for (f, node) in fresh {
            if let Some(v) = image(f) {
                if head_vars.contains(&v) {
                    attach.push((node.clone(), v));
                } else {
                    links.push((node.clone(), v));
                }
            }
        }
        for (label, l) in &st.labels {
            for y in &l.attach {
                attach.extend(image(y).map(|v| (label.clone(), v)));
            }
            for y in &l.touch {
                touch.extend(image(y).map(|v| (label.clone(), v)));
            }
        }
        let hints: Vec<(Name, Hint)> = st
            .hints
            .iter()
            .filter_map(|(y, h)| Some((image(y)?, h.clone())))
            .collect();
        for g in guards {
            let vs: Vec<Name> = g.vars().filter(|v| !is_head_name(v)).cloned().collect();
            for w in vs.windows(2) {
                links.push((w[0].clone(), w[1].clone()));
            }
        }
        let from_body = eta1.apply_atoms(body);
        let others: Vec<usize> = (0..guards.len()).filter(|&i| i != origin).collect();
        let removable: Vec<usize> = others
            .iter()
            .copied()
            .filter(|&i| possibly_equal(&guards[i], eta2, &target))
            .collect();
        for keep_origin in [true, false] {
            for mask in 0..(1usize << removable.len()) {
                let mut atoms = from_body.clone();
                if keep_origin {
                    atoms.push(target.clone());
                }
                for &i in &others {
                    let r = removable.iter().position(|&j| j == i);
                    if r.is_some_and(|r| mask & (1 << r) != 0) {
                        continue;
                    }
                    atoms.push(eta2.apply_atom(&guards[i]));
                }
                out.extend(normalize(
                    &self.cx,
                    Draft {
                        head: head.clone(),
                        atoms,
                        links: links.clone(),
                        touch: touch.clone(),
                        attach: attach.clone(),
                        hints: hints.clone(),
                    },
                ));
            }
        }
    }

    fn has_candidate(&self, st: &State) -> bool {
        let guards: Vec<Atom> = st.guards.iter().cloned().collect();
        let mut uf = UnionFind::default();
        for g in &guards {
            let vs: Vec<&Name> = g.vars().filter(|v| &***v != WILD).collect();
            for w in vs.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        for (label, l) in &st.labels {
            uf.find(label);
            for y in l.touch.iter().chain(&l.attach) {
                uf.union(label, y);
            }
        }
        let analysis = self.cx.analysis;
        let affected = |v: &Name| {
            let mut cyc: Option<TokenSet> = st.hints.get(v).map(|h| h.cyclic.clone());
            if guards.iter().any(|a| a.contains_var(v)) {
                let s = analysis.table.set_intersection(&guards, v);
                let s: TokenSet = s.intersection(&analysis.cyclic).cloned().collect();
                cyc = Some(match cyc {
                    Some(c) => c.intersection(&s).cloned().collect(),
                    None => s,
                });
            }
            cyc.is_none_or(|c| !c.is_empty())
        };
        let vars: Vec<Name> = head_vars_of(&st.head)
            .into_iter()
            .filter(|v| uf.parent.contains_key(v) && affected(v))
            .collect();
        for (i, x) in vars.iter().enumerate() {
            for z in &vars[i + 1..] {
                if guards.iter().any(|a| a.contains_var(x) && a.contains_var(z)) {
                    continue;
                }
                if uf.find(x) == uf.find(z) {
                    return true;
                }
            }
        }
        false
    }
}

/// One unification of a filled guard with a base rule head.
struct Step<'a> {
    origin: usize,
    filled: &'a Atom,
    fresh: &'a [(Name, Name)],
    body: &'a [Atom],
    eta1: &'a Substitution,
    eta2: &'a Substitution,
}

/// Explores the abstract states reachable from the rule pairs.
pub fn guard_closure(p: &Program, analysis: &NullAnalysis, cap: usize) -> ClosureReport {
    let s0 = sigma0(p);
    let base: Vec<(Vec<Atom>, Atom)> = s0
        .pairs
        .iter()
        .map(|pair| (pair.body.iter().map(rename_u).collect(), rename_u(&pair.head)))
        .collect();
    let explorer = Explorer {
        cx: Context::new(p, analysis),
        base,
    };
    let mut seen: BTreeSet<State> = BTreeSet::new();
    let mut queue = VecDeque::new();
    for pair in &s0.pairs {
        for st in normalize(&explorer.cx, Draft::new(pair.head.clone(), pair.body.clone())) {
            if seen.insert(st.clone()) {
                queue.push_back(st);
            }
        }
    }
    while let Some(st) = queue.pop_front() {
        if explorer.has_candidate(&st) {
            return ClosureReport {
                outcome: ClosureOutcome::Candidate,
                states: seen.len(),
            };
        }
        for next in explorer.successors(&st) {
            if seen.len() >= cap {
                return ClosureReport {
                    outcome: ClosureOutcome::Exhausted,
                    states: seen.len(),
                };
            }
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    ClosureReport {
        outcome: ClosureOutcome::NoCandidate,
        states: seen.len(),
    }
}
