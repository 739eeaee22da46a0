//! Recursive triangular components and the triangular-guardedness verdict.

mod closure;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

pub use closure::{guard_closure, ClosureOutcome, ClosureReport};

use crate::extension::{sigma0, ExtensionPair, ExtensionSet, Limits, DEFAULT_MAX_PAIRS};
use crate::markup::{m_var_of, markup_fixpoint, MarkupState};
use crate::nullsets::{link_with, NullAnalysis};
use crate::syntax::{match_atom, Atom, Name, Program, Substitution, Term};

/// Simple paths examined per triangle before giving up on condition 5.
const PATH_BUDGET: usize = 20_000;
/// Assignments of unconstrained variables tried per second pair.
const ASSIGNMENT_BUDGET: usize = 4_096;
/// Extra unfolding levels spent looking for a witness with a' = c.
const DIRECT_GRACE: usize = 2;

/// Where the atom `a'` of a witness comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum APrimeSource {
    /// `a'` is the head `c` itself.
    HeadEqualsAPrime,
    /// `a'` is the head of another pair, instantiated by `eta` so that one of
    /// its body atoms becomes `c`.
    SecondPair {
        pair: usize,
        body: Vec<Atom>,
        head: Atom,
        matched: Atom,
        eta: Substitution,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinkStep {
    pub atom: Atom,
    /// A link variable shared with the next atom; absent on the last atom.
    pub link: Option<Name>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RtcWitness {
    pub pair: ExtensionPair,
    pub a: Atom,
    pub b: Atom,
    pub c: Atom,
    pub x: Name,
    pub z: Name,
    pub a_prime: Atom,
    pub theta: Substitution,
    pub via: APrimeSource,
    pub link_path: Vec<LinkStep>,
    pub failing_edge: usize,
    pub failing_link_var: Name,
    pub markup_evidence: MarkupState,
    pub m_var: BTreeSet<Name>,
    pub guard: Option<Atom>,
}

/// The first atom of `body` holding both variables.
pub fn guard_exists(body: &[Atom], x: &str, z: &str) -> Option<Atom> {
    body.iter()
        .find(|d| d.contains_var(x) && d.contains_var(z))
        .cloned()
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Triangle {
    a: usize,
    b: usize,
    x: Name,
    z: Name,
}

#[derive(Clone, Debug)]
struct APrime {
    atom: Atom,
    theta: Substitution,
    via: APrimeSource,
}

/// Shared state for witness search over one program.
pub struct RtcSearch<'p> {
    pub program: &'p Program,
    pub analysis: NullAnalysis,
    hats: BTreeMap<usize, BTreeSet<Name>>,
    /// Set when a path or assignment budget cut a search short.
    pub truncated: bool,
}

impl<'p> RtcSearch<'p> {
    pub fn new(program: &'p Program) -> RtcSearch<'p> {
        RtcSearch {
            program,
            analysis: NullAnalysis::new(program),
            hats: BTreeMap::new(),
            truncated: false,
        }
    }

    fn hat(&mut self, pair: &ExtensionPair) -> BTreeSet<Name> {
        if let Some(h) = self.hats.get(&pair.id) {
            return h.clone();
        }
        let h = self.analysis.var_hat(&pair.body);
        self.hats.insert(pair.id, h.clone());
        h
    }

    fn triangles(&mut self, pair: &ExtensionPair, unguarded_only: bool) -> Vec<Triangle> {
        let hat = self.hat(pair);
        let c = &pair.head;
        let mut out = Vec::new();
        if hat.is_empty() {
            return out;
        }
        let in_c: Vec<&Name> = hat.iter().filter(|v| c.contains_var(v)).collect();
        for (ai, a) in pair.body.iter().enumerate() {
            for (bi, b) in pair.body.iter().enumerate() {
                if ai == bi {
                    continue;
                }
                for x in in_c.iter().filter(|v| a.contains_var(v)) {
                    for z in in_c.iter().filter(|v| b.contains_var(v)) {
                        if x == z {
                            continue;
                        }
                        if unguarded_only && guard_exists(&pair.body, x, z).is_some() {
                            continue;
                        }
                        out.push(Triangle {
                            a: ai,
                            b: bi,
                            x: (*x).clone(),
                            z: (*z).clone(),
                        });
                    }
                }
            }
        }
        out
    }

    /// `a' = c`, when `c` is a variable-to-variable instance of `a`.
    fn a_prime_from_head(pair: &ExtensionPair, a: &Atom) -> Option<APrime> {
        let theta = var_instance(a, &pair.head)?;
        Some(APrime {
            atom: pair.head.clone(),
            theta,
            via: APrimeSource::HeadEqualsAPrime,
        })
    }

    /// Candidates for `a'` obtained from `second`: some body atom `b'` of it is
    /// matched onto `c`, and its head is instantiated to an instance of `a`.
    fn a_primes_from_pair(
        &mut self,
        pair: &ExtensionPair,
        a: &Atom,
        second: &ExtensionPair,
    ) -> Vec<APrime> {
        let c = &pair.head;
        if second.head.predicate != a.predicate
            || !second.body.iter().any(|b| b.predicate == c.predicate)
        {
            return Vec::new();
        }
        let rename = |t: &Atom| rename_atom(t, "R");
        let body: Vec<Atom> = second.body.iter().map(rename).collect();
        let head = rename(&second.head);
        let local_vars: Vec<Name> =
            crate::syntax::vars_of(pair.body.iter().chain(std::iter::once(c)))
                .into_iter()
                .collect();
        let mut out: Vec<APrime> = Vec::new();
        for bp in &body {
            let mut eta0 = Substitution::new();
            if !match_atom(bp, c, &mut eta0) {
                continue;
            }
            let Some(classes) = solve_head(&head, a, &eta0) else {
                continue;
            };
            let free: Vec<usize> = (0..classes.len())
                .filter(|&k| classes[k].value.is_none())
                .collect();
            let mut choice = vec![0usize; free.len()];
            let options = local_vars.len() + 1;
            let mut tried = 0;
            loop {
                tried += 1;
                if tried > ASSIGNMENT_BUDGET {
                    self.truncated = true;
                    break;
                }
                let mut eta = eta0.clone();
                let mut theta = Substitution::new();
                for (k, class) in classes.iter().enumerate() {
                    let value = match &class.value {
                        Some(v) => v.clone(),
                        None => {
                            let slot = free.iter().position(|&f| f == k).expect("free class");
                            if choice[slot] == 0 {
                                Term::Var(class.fresh.clone())
                            } else {
                                Term::Var(local_vars[choice[slot] - 1].clone())
                            }
                        }
                    };
                    for f in &class.free {
                        eta.insert(f.clone(), value.clone());
                    }
                    for v in &class.a_vars {
                        theta.insert(v.clone(), value.clone());
                    }
                }
                let a_prime = eta.apply_atom(&head);
                if theta.apply_atom(a) == a_prime
                    && !out.iter().any(|o| o.atom == a_prime)
                {
                    out.push(APrime {
                        atom: a_prime,
                        theta,
                        via: APrimeSource::SecondPair {
                            pair: second.id,
                            body: body.clone(),
                            head: head.clone(),
                            matched: bp.clone(),
                            eta,
                        },
                    });
                }
                if !advance(&mut choice, options) {
                    break;
                }
            }
        }
        out
    }

    /// Conditions 4 and 5 for a fixed `a'`; returns the first witness found.
    fn complete(
        &mut self,
        pair: &ExtensionPair,
        tri: &Triangle,
        ap: &APrime,
    ) -> Option<RtcWitness> {
        if !ap.atom.contains_var(&tri.x) {
            return None;
        }
        let a = &pair.body[tri.a];
        let c = &pair.head;
        let state = markup_fixpoint(a, c, &ap.atom).ok()?;
        let mvar = m_var_of(a, &state);
        let hat = self.hat(pair);
        let body = &pair.body;
        let n = body.len();
        let links: Vec<Vec<BTreeSet<Name>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            BTreeSet::new()
                        } else {
                            link_with(&hat, &body[i], &body[j])
                        }
                    })
                    .collect()
            })
            .collect();
        let good = |y: &Name| -> bool {
            if *y == tri.x || *y == tri.z {
                return false;
            }
            let positions = ap.atom.positions_of(y);
            positions
                .iter()
                .all(|&i| matches!(&a.args[i], Term::Var(v) if mvar.contains(v)))
        };
        let mut paths_seen = 0;
        for len in 2..=n {
            let mut path = vec![tri.a];
            let mut found = None;
            let exhausted = simple_paths(&links, tri.b, len, &mut path, &mut paths_seen, &mut |p| {
                for e in 0..p.len() - 1 {
                    if let Some(y) = links[p[e]][p[e + 1]].iter().find(|y| good(y)) {
                        found = Some((p.to_vec(), e, y.clone()));
                        return true;
                    }
                }
                false
            });
            if let Some((p, e, y)) = found {
                let link_path = p
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| LinkStep {
                        atom: body[i].clone(),
                        link: if k + 1 == p.len() {
                            None
                        } else if k == e {
                            Some(y.clone())
                        } else {
                            links[i][p[k + 1]].iter().next().cloned()
                        },
                    })
                    .collect();
                return Some(RtcWitness {
                    pair: pair.clone(),
                    a: a.clone(),
                    b: body[tri.b].clone(),
                    c: c.clone(),
                    x: tri.x.clone(),
                    z: tri.z.clone(),
                    a_prime: ap.atom.clone(),
                    theta: ap.theta.clone(),
                    via: ap.via.clone(),
                    link_path,
                    failing_edge: e,
                    failing_link_var: y,
                    markup_evidence: state,
                    m_var: mvar,
                    guard: guard_exists(body, &tri.x, &tri.z),
                });
            }
            if !exhausted {
                self.truncated = true;
                return None;
            }
        }
        None
    }

    /// Every witness over `pair`, taking second pairs from `ext`.
    pub fn witnesses_for(
        &mut self,
        pair: &ExtensionPair,
        ext: &ExtensionSet,
        unguarded_only: bool,
    ) -> Vec<RtcWitness> {
        let mut out = Vec::new();
        for tri in self.triangles(pair, unguarded_only) {
            let a = pair.body[tri.a].clone();
            let mut options: Vec<APrime> = Self::a_prime_from_head(pair, &a).into_iter().collect();
            for second in &ext.pairs {
                for ap in self.a_primes_from_pair(pair, &a, second) {
                    if !options.iter().any(|o| o.atom == ap.atom) {
                        options.push(ap);
                    }
                }
            }
            for ap in &options {
                if let Some(w) = self.complete(pair, &tri, ap) {
                    out.push(w);
                }
            }
        }
        out
    }
}

fn advance(choice: &mut [usize], options: usize) -> bool {
    for c in choice.iter_mut() {
        *c += 1;
        if *c < options {
            return true;
        }
        *c = 0;
    }
    false
}

/// Depth-first enumeration of simple paths of exactly `len` atoms ending at
/// `target`. Returns false when the budget ran out.
fn simple_paths(
    links: &[Vec<BTreeSet<Name>>],
    target: usize,
    len: usize,
    path: &mut Vec<usize>,
    seen: &mut usize,
    visit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    let last = *path.last().expect("nonempty path");
    if path.len() == len {
        if last == target {
            *seen += 1;
            if visit(path) {
                return true;
            }
        }
        return *seen < PATH_BUDGET;
    }
    if last == target {
        return true;
    }
    for next in 0..links.len() {
        if links[last][next].is_empty() || path.contains(&next) {
            continue;
        }
        if path.len() + 1 < len && next == target {
            continue;
        }
        path.push(next);
        let ok = simple_paths(links, target, len, path, seen, visit);
        path.pop();
        if !ok {
            return false;
        }
    }
    true
}

fn rename_atom(atom: &Atom, prefix: &str) -> Atom {
    Atom {
        predicate: atom.predicate.clone(),
        args: atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => Term::Var(Name::from(format!("{prefix}{v}").as_str())),
                other => other.clone(),
            })
            .collect(),
    }
}

/// `θ` with `aθ = target` mapping variables to variables, if one exists.
fn var_instance(a: &Atom, target: &Atom) -> Option<Substitution> {
    let mut theta = Substitution::new();
    if !match_atom(a, target, &mut theta) {
        return None;
    }
    if theta.iter().all(|(_, t)| t.is_var()) {
        Some(theta.normalized())
    } else {
        None
    }
}

#[derive(Debug)]
struct HeadClass {
    value: Option<Term>,
    free: Vec<Name>,
    a_vars: Vec<Name>,
    fresh: Name,
}

/// Solves `h'η = aθ` for the variables of `h'` left unbound by `eta0` and for
/// `θ` on `VAR(a)`, requiring `θ` to map variables to variables. Each returned
/// class is either pinned to a term or free.
fn solve_head(head: &Atom, a: &Atom, eta0: &Substitution) -> Option<Vec<HeadClass>> {
    #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
    enum K {
        Free(Name),
        AVar(Name),
        Rigid(Term),
    }
    if head.arity() != a.arity() {
        return None;
    }
    let mut parent: BTreeMap<K, K> = BTreeMap::new();
    fn find(parent: &mut BTreeMap<K, K>, k: &K) -> K {
        let mut r = k.clone();
        while let Some(p) = parent.get(&r) {
            if *p == r {
                break;
            }
            r = p.clone();
        }
        r
    }
    let left = |t: &Term| match t {
        Term::Var(v) => match eta0.get(v) {
            Some(val) => K::Rigid(val.clone()),
            None => K::Free(v.clone()),
        },
        other => K::Rigid(other.clone()),
    };
    let right = |t: &Term| match t {
        Term::Var(v) => K::AVar(v.clone()),
        other => K::Rigid(other.clone()),
    };
    let mut keys = BTreeSet::new();
    for (h, x) in head.args.iter().zip(&a.args) {
        let (l, r) = (left(h), right(x));
        keys.insert(l.clone());
        keys.insert(r.clone());
        let (rl, rr) = (find(&mut parent, &l), find(&mut parent, &r));
        if rl == rr {
            continue;
        }
        match (&rl, &rr) {
            (K::Rigid(_), K::Rigid(_)) => return None,
            (K::Rigid(_), _) => {
                parent.insert(rr, rl);
            }
            _ => {
                parent.insert(rl, rr);
            }
        }
    }
    let mut classes: BTreeMap<K, HeadClass> = BTreeMap::new();
    for k in &keys {
        let root = find(&mut parent, k);
        let class = classes.entry(root.clone()).or_insert_with(|| HeadClass {
            value: match &root {
                K::Rigid(t) => Some(t.clone()),
                _ => None,
            },
            free: Vec::new(),
            a_vars: Vec::new(),
            fresh: Name::from(""),
        });
        match k {
            K::Free(v) => class.free.push(v.clone()),
            K::AVar(v) => class.a_vars.push(v.clone()),
            K::Rigid(_) => {}
        }
    }
    let mut out = Vec::new();
    for (_, mut class) in classes {
        if !class.a_vars.is_empty() && matches!(class.value, Some(Term::Const(_) | Term::Null(_)))
        {
            return None;
        }
        class.fresh = class
            .free
            .first()
            .cloned()
            .unwrap_or_else(|| Name::from(format!("R_{}", class.a_vars[0]).as_str()));
        out.push(class);
    }
    Some(out)
}

/// Enumerates witnesses over every pair of `ext`, in pair order.
pub fn find_rtcs<'a>(p: &'a Program, ext: &'a ExtensionSet) -> impl Iterator<Item = RtcWitness> + 'a {
    let mut search = RtcSearch::new(p);
    ext.pairs
        .iter()
        .flat_map(move |pair| search.witnesses_for(pair, ext, false))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum TgOutcome {
    Tg,
    NotTg { witness: Box<RtcWitness> },
    Inconclusive { reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TgMethod {
    /// The program creates no cyclic null, so no variable is cyclically affected.
    NoCyclicNulls,
    /// The finite guard closure found no unguarded pair of cyclic head variables.
    GuardClosure,
    /// Explicit unfolding either found a witness or reached a fixpoint.
    Unfolding,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TgVerdict {
    pub outcome: TgOutcome,
    pub method: TgMethod,
    pub pairs_explored: usize,
    pub levels: usize,
    pub closure_states: usize,
}

impl TgVerdict {
    pub fn is_tg(&self) -> bool {
        matches!(self.outcome, TgOutcome::Tg)
    }

    pub fn is_not_tg(&self) -> bool {
        matches!(self.outcome, TgOutcome::NotTg { .. })
    }

    pub fn witness(&self) -> Option<&RtcWitness> {
        match &self.outcome {
            TgOutcome::NotTg { witness } => Some(witness),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TgOptions {
    pub max_pairs: usize,
    pub closure_states: usize,
}

impl Default for TgOptions {
    fn default() -> TgOptions {
        TgOptions {
            max_pairs: DEFAULT_MAX_PAIRS,
            closure_states: closure::DEFAULT_STATE_CAP,
        }
    }
}

pub fn is_triangularly_guarded(p: &Program, max_pairs: usize) -> TgVerdict {
    classify_tg(
        p,
        TgOptions {
            max_pairs,
            ..TgOptions::default()
        },
    )
}

/// Orders witnesses of one level by their pair, smallest first.
fn pair_key(w: &RtcWitness) -> (usize, &Atom, &[Atom]) {
    (w.pair.body.len(), &w.pair.head, &w.pair.body)
}

struct Pending {
    pair: usize,
    tri: Triangle,
}

/// Decides triangular guardedness.
///
/// Programs without cyclic nulls are accepted outright. Otherwise the finite
/// guard closure is consulted; when it shows that no pair can place two
/// cyclically affected head variables without a common body atom, the program
/// is accepted. If it cannot, pairs are unfolded level by level and every
/// unguarded triangle is checked against all pairs seen so far.
pub fn classify_tg(p: &Program, opts: TgOptions) -> TgVerdict {
    let mut search = RtcSearch::new(p);
    if search.analysis.cyclic.is_empty() {
        return TgVerdict {
            outcome: TgOutcome::Tg,
            method: TgMethod::NoCyclicNulls,
            pairs_explored: 0,
            levels: 0,
            closure_states: 0,
        };
    }
    let closure = guard_closure(p, &search.analysis, opts.closure_states);
    if closure.outcome == ClosureOutcome::NoCandidate {
        return TgVerdict {
            outcome: TgOutcome::Tg,
            method: TgMethod::GuardClosure,
            pairs_explored: 0,
            levels: 0,
            closure_states: closure.states,
        };
    }
    let limits = Limits::for_program(p, opts.max_pairs);
    let mut ext = sigma0(p);
    let mut pending: Vec<Pending> = Vec::new();
    let mut new_ids: Vec<usize> = (0..ext.len()).collect();
    let verdict = |outcome, ext: &ExtensionSet| TgVerdict {
        outcome,
        method: TgMethod::Unfolding,
        pairs_explored: ext.len(),
        levels: ext.iteration,
        closure_states: closure.states,
    };
    // A witness whose a' comes from a second pair is held back for a few
    // levels in case one with a' = c turns up.
    let mut held: Option<(RtcWitness, usize)> = None;
    loop {
        if held.is_none() {
            // Older triangles meet the newly added pairs.
            'older: for pend in &pending {
                let pair = &ext.pairs[pend.pair];
                let a = pair.body[pend.tri.a].clone();
                for &sid in &new_ids {
                    for ap in search.a_primes_from_pair(pair, &a, &ext.pairs[sid]) {
                        if let Some(w) = search.complete(pair, &pend.tri, &ap) {
                            held = Some((w, ext.iteration + DIRECT_GRACE));
                            break 'older;
                        }
                    }
                }
            }
        }
        // New triangles meet every pair seen so far.
        let mut direct: Option<RtcWitness> = None;
        for &id in &new_ids {
            let pair = ext.pairs[id].clone();
            for tri in search.triangles(&pair, true) {
                let a = pair.body[tri.a].clone();
                let mut options: Vec<APrime> =
                    RtcSearch::a_prime_from_head(&pair, &a).into_iter().collect();
                if held.is_none() {
                    for second in &ext.pairs {
                        options.extend(search.a_primes_from_pair(&pair, &a, second));
                    }
                }
                for ap in &options {
                    if let Some(w) = search.complete(&pair, &tri, ap) {
                        if matches!(w.via, APrimeSource::HeadEqualsAPrime) {
                            if direct.as_ref().is_none_or(|d| pair_key(&w) < pair_key(d)) {
                                direct = Some(w);
                            }
                            break;
                        }
                        held.get_or_insert((w, ext.iteration + DIRECT_GRACE));
                    }
                }
                pending.push(Pending { pair: id, tri });
            }
        }
        if let Some(w) = direct {
            return verdict(TgOutcome::NotTg { witness: Box::new(w) }, &ext);
        }
        if held.as_ref().is_some_and(|(_, until)| ext.iteration >= *until) || ext.full {
            break;
        }
        new_ids = ext.step(limits);
        if new_ids.is_empty() {
            break;
        }
    }
    if let Some((w, _)) = held {
        return verdict(TgOutcome::NotTg { witness: Box::new(w) }, &ext);
    }
    if ext.saturated && !search.truncated {
        verdict(TgOutcome::Tg, &ext)
    } else {
        let reason = if search.truncated {
            "a path or assignment budget was exhausted".to_string()
        } else if ext.full {
            format!("pair limit {} reached", opts.max_pairs)
        } else {
            format!("bodies larger than {} atoms were pruned", limits.max_body)
        };
        verdict(TgOutcome::Inconclusive { reason }, &ext)
    }
}

/// Re-checks every condition recorded in a witness without consulting the search.
pub fn validate_witness(p: &Program, w: &RtcWitness) -> Result<(), String> {
    let analysis = NullAnalysis::new(p);
    let body = &w.pair.body;
    let hat = analysis.var_hat(body);
    if !body.contains(&w.a) || !body.contains(&w.b) || w.a == w.b {
        return Err("a and b must be distinct body atoms".into());
    }
    if w.c != w.pair.head {
        return Err("c must be the head".into());
    }
    if w.theta.apply_atom(&w.a) != w.a_prime || w.theta.iter().any(|(_, t)| !t.is_var()) {
        return Err("a' is not a variable instance of a".into());
    }
    match &w.via {
        APrimeSource::HeadEqualsAPrime => {
            if w.a_prime != w.c {
                return Err("a' differs from c".into());
            }
        }
        APrimeSource::SecondPair {
            body: b2,
            head: h2,
            eta,
            ..
        } => {
            if !eta.apply_atoms(b2).contains(&w.c) || eta.apply_atom(h2) != w.a_prime {
                return Err("second pair does not produce c and a'".into());
            }
            let local = crate::syntax::vars_of(body.iter().chain(std::iter::once(&w.c)));
            if crate::syntax::vars_of(b2.iter().chain(std::iter::once(h2)))
                .iter()
                .any(|v| local.contains(v))
            {
                return Err("second pair is not renamed apart".into());
            }
        }
    }
    if w.x == w.z
        || !hat.contains(&w.x)
        || !hat.contains(&w.z)
        || !w.a.contains_var(&w.x)
        || !w.b.contains_var(&w.z)
        || !w.c.contains_var(&w.x)
        || !w.c.contains_var(&w.z)
        || !w.a_prime.contains_var(&w.x)
    {
        return Err("pivot variables violate condition 4".into());
    }
    let path = &w.link_path;
    if path.first().map(|s| &s.atom) != Some(&w.a) || path.last().map(|s| &s.atom) != Some(&w.b) {
        return Err("link path must run from a to b".into());
    }
    let distinct: BTreeSet<&Atom> = path.iter().map(|s| &s.atom).collect();
    if distinct.len() != path.len() {
        return Err("link path repeats an atom".into());
    }
    for k in 0..path.len() - 1 {
        let links = link_with(&hat, &path[k].atom, &path[k + 1].atom);
        match &path[k].link {
            Some(y) if links.contains(y) => {}
            _ => return Err(format!("edge {k} has no recorded link variable")),
        }
    }
    let e = w.failing_edge;
    if e + 1 >= path.len() {
        return Err("failing edge out of range".into());
    }
    let links = link_with(&hat, &path[e].atom, &path[e + 1].atom);
    let y = &w.failing_link_var;
    if !links.contains(y) || *y == w.x || *y == w.z {
        return Err("failing link variable is not an eligible link".into());
    }
    let state = markup_fixpoint(&w.a, &w.c, &w.a_prime).map_err(|e| e.to_string())?;
    let mvar = m_var_of(&w.a, &state);
    let ok = w
        .a_prime
        .positions_of(y)
        .iter()
        .all(|&i| matches!(&w.a.args[i], Term::Var(v) if mvar.contains(v)));
    if !ok {
        return Err("failing link variable is not marked".into());
    }
    if guard_exists(body, &w.x, &w.z) != w.guard {
        return Err("recorded guard is wrong".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::saturate;
    use crate::syntax::{parse_atoms, parse_program};

    pub(crate) const SIGMA1: &str = "s11: t(X, Y) -> exists Z: t(Y, Z), u(Y, Z).\n\
                          s12: t(X, Y), u(Y, Z) -> t(Y, Z), u(X, Y).";
    pub(crate) const SIGMA2: &str = "s11: t(X, Y) -> exists Z: t(Y, Z), u(Y, Z).\n\
                          s12: t(X, Y), u(Y, Z) -> t(X, Z), u(X, Y).";
    const SIGMA3: &str = "s31: t(X, Y) -> exists Z: t(Y, Z).\n\
        s32: t(X, Y) -> s(X), s(Y).\n\
        s33: t(X1, V), s(V), t(W, Z1) -> u(X1, V, W, Z1).\n\
        s34: u(X2, Y, Y, Z2) -> v(X2, Z2).\n\
        s35: v(X3, Z3) -> t(X3, Z3).";

    #[test]
    fn guard_examples() {
        let b = parse_atoms("t(X, Y), u(Y, Z)").unwrap();
        assert_eq!(guard_exists(&b, "X", "Z"), None);
        let g = parse_atoms("g(X, Z)").unwrap();
        assert_eq!(guard_exists(&g, "X", "Z"), Some(g[0].clone()));
        let p21 = parse_atoms("t(X1, V), s(V), t(V, Z1)").unwrap();
        assert_eq!(guard_exists(&p21, "X1", "Z1"), None);
    }

    #[test]
    fn sigma2_is_not_tg_with_the_expected_triangle() {
        let p = parse_program(SIGMA2).unwrap();
        let v = is_triangularly_guarded(&p, DEFAULT_MAX_PAIRS);
        let w = v.witness().expect("witness");
        validate_witness(&p, w).unwrap();
        assert!(w.guard.is_none());
        let (b, h) = (vec![w.a.clone(), w.b.clone()], w.c.clone());
        let expected_b = parse_atoms("t(X, Y), u(Y, Z)").unwrap();
        let expected_h = parse_atoms("t(X, Z)").unwrap().remove(0);
        assert!(crate::extension::pairs_isomorphic(&b, &h, &expected_b, &expected_h));
    }

    #[test]
    fn sigma3_is_not_tg() {
        let p = parse_program(SIGMA3).unwrap();
        let v = is_triangularly_guarded(&p, DEFAULT_MAX_PAIRS);
        let w = v.witness().expect("witness");
        validate_witness(&p, w).unwrap();
        assert!(w.guard.is_none());
    }

    #[test]
    fn sigma1_is_tg() {
        let p = parse_program(SIGMA1).unwrap();
        let v = is_triangularly_guarded(&p, DEFAULT_MAX_PAIRS);
        assert!(v.is_tg(), "{v:?}");
    }

    #[test]
    fn no_existentials_is_tg() {
        let p = parse_program("t(X, Y), t(Y, Z) -> t(X, Z).").unwrap();
        let v = is_triangularly_guarded(&p, 10);
        assert!(v.is_tg());
        assert_eq!(v.method, TgMethod::NoCyclicNulls);
    }

    #[test]
    fn sigma2_rtcs_all_validate() {
        let p = parse_program(SIGMA2).unwrap();
        let ext = saturate(&p, 200);
        let ws: Vec<_> = find_rtcs(&p, &ext).take(50).collect();
        assert!(!ws.is_empty());
        for w in &ws {
            validate_witness(&p, w).unwrap();
        }
    }
}
