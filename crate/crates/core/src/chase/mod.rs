//! A level-by-level oblivious chase with duplicate suppression, BCQ checking
//! on the bounded instance, and the interchangeable-null probe.

mod probe;

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::ChaseError;
use crate::syntax::{Atom, Database, Homomorphisms, Name, Program, Query, Rule, Substitution, Term};

pub use probe::{
    bounded_nulls_probe, interchangeable, probe_bounds, ProbeBounds, ProbeReport, ProbeViolation,
};

/// Default cap on the number of atoms an instance may reach.
pub const DEFAULT_MAX_ATOMS: usize = 200_000;

/// One rule application, in the order it happened.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Firing {
    pub rule: Name,
    /// Images of the body variables.
    pub trigger: Substitution,
    /// Nulls given to the existential variables.
    pub nulls: Substitution,
    pub level: usize,
    /// Indices of the atoms this firing added.
    pub added: Vec<usize>,
}

/// Where the chase stopped early.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Truncation {
    /// The last level that was fully computed.
    pub complete_level: usize,
    pub atoms: usize,
    pub max_atoms: usize,
}

/// A chase instance where every atom remembers its level and the firing that
/// produced it.
#[derive(Clone, Debug, Default)]
pub struct LabeledInstance {
    atoms: Vec<Atom>,
    index: HashMap<Atom, usize>,
    levels: Vec<usize>,
    origin: Vec<Option<usize>>,
    by_predicate: BTreeMap<Name, Vec<usize>>,
    firings: Vec<Firing>,
    null_levels: BTreeMap<u64, usize>,
    pub next_null: u64,
    pub truncated: Option<Truncation>,
}

/// Result of a single [`chase_step`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepReport {
    pub added: Vec<usize>,
    /// Every head atom was already present.
    pub no_op: bool,
}

impl LabeledInstance {
    /// An instance holding the database facts at level 0.
    pub fn from_database(d: &Database) -> LabeledInstance {
        let mut inst = LabeledInstance {
            next_null: 1,
            ..LabeledInstance::default()
        };
        for f in &d.facts {
            inst.push(f.clone(), 0, None);
        }
        inst
    }

    fn push(&mut self, atom: Atom, level: usize, origin: Option<usize>) -> Option<usize> {
        if self.index.contains_key(&atom) {
            return None;
        }
        let i = self.atoms.len();
        self.index.insert(atom.clone(), i);
        self.by_predicate
            .entry(atom.predicate.clone())
            .or_default()
            .push(i);
        self.atoms.push(atom);
        self.levels.push(level);
        self.origin.push(origin);
        Some(i)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.index.contains_key(a)
    }

    pub fn level_of(&self, a: &Atom) -> Option<usize> {
        self.index.get(a).map(|&i| self.levels[i])
    }

    pub fn level(&self, i: usize) -> usize {
        self.levels[i]
    }

    /// The firing that produced atom `i`; `None` for database facts.
    pub fn provenance(&self, i: usize) -> Option<&Firing> {
        self.origin[i].map(|f| &self.firings[f])
    }

    pub fn firings(&self) -> &[Firing] {
        &self.firings
    }

    /// Highest level of any atom.
    pub fn depth(&self) -> usize {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    /// Level at which each null was created.
    pub fn null_levels(&self) -> &BTreeMap<u64, usize> {
        &self.null_levels
    }

    /// Indices of the atoms over `predicate`, in creation order.
    pub fn with_predicate(&self, predicate: &str) -> &[usize] {
        self.by_predicate
            .get(predicate)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// The atoms of level at most `k`, with their levels.
    pub fn up_to(&self, k: usize) -> impl Iterator<Item = (&Atom, usize)> {
        self.atoms
            .iter()
            .zip(&self.levels)
            .filter(move |(_, &l)| l <= k)
            .map(|(a, &l)| (a, l))
    }

    /// A serialisable view listing atoms with levels and provenance.
    pub fn report(&self) -> InstanceReport {
        InstanceReport {
            atoms: (0..self.atoms.len())
                .map(|i| AtomEntry {
                    atom: self.atoms[i].to_string(),
                    level: self.levels[i],
                    rule: self.provenance(i).map(|f| f.rule.to_string()),
                    trigger: self.provenance(i).map(|f| f.trigger.clone()),
                })
                .collect(),
            depth: self.depth(),
            nulls: self.null_levels.len(),
            truncated: self.truncated.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AtomEntry {
    pub atom: String,
    pub level: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trigger: Option<Substitution>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InstanceReport {
    pub atoms: Vec<AtomEntry>,
    pub depth: usize,
    pub nulls: usize,
    pub truncated: Option<Truncation>,
}

/// Fires `rule` under `trigger`, which must map the body into the instance.
/// Existential variables receive fresh nulls in creation order.
pub fn chase_step(
    inst: &mut LabeledInstance,
    rule: &Rule,
    trigger: &Substitution,
) -> Result<StepReport, ChaseError> {
    let mut level = 0;
    for b in &rule.body {
        for v in b.vars() {
            if !trigger.contains(v) {
                return Err(ChaseError::UnboundTriggerVariable {
                    label: rule.label.to_string(),
                    var: v.to_string(),
                });
            }
        }
        let image = trigger.apply_atom(b);
        match inst.level_of(&image) {
            Some(l) => level = level.max(l + 1),
            None => {
                return Err(ChaseError::TriggerMismatch {
                    label: rule.label.to_string(),
                })
            }
        }
    }
    let trigger = trigger.restrict(|v| rule.body.iter().any(|b| b.contains_var(v)));
    let mut nulls = Substitution::new();
    for v in &rule.existentials {
        let n = inst.next_null;
        inst.next_null += 1;
        inst.null_levels.insert(n, level);
        nulls.insert(v.clone(), Term::Null(n));
    }
    let full = trigger.then(&nulls);
    let id = inst.firings.len();
    let mut added = Vec::new();
    for h in &rule.head {
        if let Some(i) = inst.push(full.apply_atom(h), level, Some(id)) {
            added.push(i);
        }
    }
    let no_op = added.is_empty();
    inst.firings.push(Firing {
        rule: rule.label.clone(),
        trigger,
        nulls,
        level,
        added: added.clone(),
    });
    Ok(StepReport { added, no_op })
}

/// A trigger waiting to fire, ordered by rule and by the creation indices of
/// its body image.
struct Pending {
    rule: usize,
    image: Vec<usize>,
    trigger: Substitution,
}

/// The triggers whose body image uses level `j - 1` and nothing higher.
fn triggers_at(inst: &LabeledInstance, p: &Program, j: usize) -> Vec<Pending> {
    let prev = j - 1;
    let mut out = Vec::new();
    for (ri, rule) in p.rules.iter().enumerate() {
        let n = rule.body.len();
        let cands: Vec<&[usize]> = rule
            .body
            .iter()
            .map(|b| inst.with_predicate(&b.predicate))
            .collect();
        // Position `first` is the leftmost body atom at level j - 1.
        for first in 0..n {
            let lists: Vec<Vec<usize>> = (0..n)
                .map(|i| {
                    cands[i]
                        .iter()
                        .copied()
                        .filter(|&a| {
                            let l = inst.levels[a];
                            inst.atoms[a].arity() == rule.body[i].arity()
                                && match i.cmp(&first) {
                                    std::cmp::Ordering::Less => l < prev,
                                    std::cmp::Ordering::Equal => l == prev,
                                    std::cmp::Ordering::Greater => l <= prev,
                                }
                        })
                        .collect()
                })
                .collect();
            if lists.iter().any(Vec::is_empty) {
                continue;
            }
            let homs =
                Homomorphisms::with_candidates(&rule.body, &inst.atoms, lists, &Substitution::new());
            for h in homs {
                let image = rule
                    .body
                    .iter()
                    .map(|b| inst.index[&h.apply_atom(b)])
                    .collect();
                out.push(Pending {
                    rule: ri,
                    image,
                    trigger: h,
                });
            }
        }
    }
    out.sort_by(|a, b| (a.rule, &a.image).cmp(&(b.rule, &b.image)));
    out
}

/// Chases `d` with `p` up to level `k`, firing every trigger of level `j`
/// before any trigger of level `j + 1`. Stops with a truncation record once
/// the instance would exceed `max_atoms`.
pub fn chase_to_level(d: &Database, p: &Program, k: usize, max_atoms: usize) -> LabeledInstance {
    let mut inst = LabeledInstance::from_database(d);
    for j in 1..=k {
        let pending = triggers_at(&inst, p, j);
        if pending.is_empty() {
            break;
        }
        let projected: usize = pending.iter().map(|t| p.rules[t.rule].head.len()).sum();
        if inst.len() + projected > max_atoms {
            inst.truncated = Some(Truncation {
                complete_level: j - 1,
                atoms: inst.len(),
                max_atoms,
            });
            break;
        }
        for t in pending {
            chase_step(&mut inst, &p.rules[t.rule], &t.trigger)
                .expect("triggers are found inside the instance");
        }
    }
    inst
}

/// Re-fires every recorded firing, in order, on the database facts.
pub fn replay(d: &Database, p: &Program, inst: &LabeledInstance) -> Result<LabeledInstance, ChaseError> {
    let mut out = LabeledInstance::from_database(d);
    for f in inst.firings() {
        let rule = p.rule(&f.rule).ok_or_else(|| ChaseError::TriggerMismatch {
            label: f.rule.to_string(),
        })?;
        chase_step(&mut out, rule, &f.trigger)?;
    }
    out.truncated = inst.truncated.clone();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome")]
pub enum BcqVerdict {
    /// The query maps into the instance; `level` is the highest level used.
    Entailed { witness: Substitution, level: usize },
    /// No match within the levels that were fully computed.
    UnknownUpTo { depth: usize },
}

/// Looks for the query in the chase up to level `k`. Never reports that the
/// query is not entailed.
pub fn bcq_holds(d: &Database, p: &Program, q: &Query, k: usize, max_atoms: usize) -> BcqVerdict {
    let inst = chase_to_level(d, p, k, max_atoms);
    bcq_in(&inst, q, k)
}

/// As [`bcq_holds`], over an instance that is already built.
pub fn bcq_in(inst: &LabeledInstance, q: &Query, k: usize) -> BcqVerdict {
    // The lowest-level witness is reported, so the answer does not depend on
    // the search order.
    let mut best: Option<(usize, Substitution)> = None;
    for h in crate::syntax::find_homomorphisms(&q.body, inst.atoms()) {
        let level = q
            .body
            .iter()
            .filter_map(|a| inst.level_of(&h.apply_atom(a)))
            .max()
            .unwrap_or(0);
        if best.as_ref().is_none_or(|(l, w)| (level, &h) < (*l, w)) {
            best = Some((level, h));
        }
        if best.as_ref().is_some_and(|(l, _)| *l == 0) {
            break;
        }
    }
    match best {
        Some((level, witness)) => BcqVerdict::Entailed { witness, level },
        None => BcqVerdict::UnknownUpTo {
            depth: inst.truncated.as_ref().map_or(k, |t| t.complete_level.min(k)),
        },
    }
}
