//! Backward marking of variable positions over a triple `(a, c, a')`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::MarkupError;
use crate::syntax::{Atom, Name};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MarkupState {
    /// Marked argument indices of `a` (0-based).
    pub marked_in_a: BTreeSet<usize>,
    /// Marked argument indices of `c` (0-based).
    pub marked_in_c: BTreeSet<usize>,
    /// Rounds that added at least one mark.
    pub round: usize,
}

fn var_positions(atom: &Atom) -> Vec<(&Name, Vec<usize>)> {
    atom.vars().map(|v| (v, atom.positions_of(v))).collect()
}

/// Runs the markup to its fixpoint.
///
/// Base marks: positions of `a` whose variable is absent from `c`, and
/// positions of `c` whose variable is absent from `a'`. Then, repeatedly, a
/// variable of `c` whose positions in `c` are all marked gets all its
/// occurrences in `a` marked, and a variable of `a'` whose positions (read in
/// `a`) are all marked gets all its occurrences in `c` marked.
pub fn markup_fixpoint(a: &Atom, c: &Atom, a_prime: &Atom) -> Result<MarkupState, MarkupError> {
    if a.predicate != a_prime.predicate || a.arity() != a_prime.arity() {
        return Err(MarkupError::PredicateMismatch {
            a: a.to_string(),
            a_prime: a_prime.to_string(),
        });
    }
    let c_vars = c.var_set();
    let ap_vars = a_prime.var_set();
    let mut state = MarkupState::default();
    for (v, pos) in var_positions(a) {
        if !c_vars.contains(v) {
            state.marked_in_a.extend(pos);
        }
    }
    for (v, pos) in var_positions(c) {
        if !ap_vars.contains(v) {
            state.marked_in_c.extend(pos);
        }
    }
    let c_occ = var_positions(c);
    let ap_occ = var_positions(a_prime);
    loop {
        let mut changed = false;
        for (v, pos) in &c_occ {
            if pos.iter().all(|i| state.marked_in_c.contains(i)) {
                for i in a.positions_of(v) {
                    changed |= state.marked_in_a.insert(i);
                }
            }
        }
        for (v, pos) in &ap_occ {
            if pos.iter().all(|i| state.marked_in_a.contains(i)) {
                for i in c.positions_of(v) {
                    changed |= state.marked_in_c.insert(i);
                }
            }
        }
        if !changed {
            return Ok(state);
        }
        state.round += 1;
    }
}

/// Variables of `a` all of whose occurrences are marked at the fixpoint.
pub fn m_var(a: &Atom, c: &Atom, a_prime: &Atom) -> Result<BTreeSet<Name>, MarkupError> {
    let state = markup_fixpoint(a, c, a_prime)?;
    Ok(m_var_of(a, &state))
}

pub fn m_var_of(a: &Atom, state: &MarkupState) -> BTreeSet<Name> {
    var_positions(a)
        .into_iter()
        .filter(|(_, pos)| pos.iter().all(|i| state.marked_in_a.contains(i)))
        .map(|(v, _)| v.clone())
        .collect()
}
