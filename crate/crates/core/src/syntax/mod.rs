//! Terms, atoms, rules and the textual rule format.

pub mod atom;
pub mod homomorphism;
pub mod parse;
pub mod program;
pub mod subst;
pub mod term;
pub mod unify;

pub use atom::{vars_of, Atom};
pub use homomorphism::{find_homomorphisms, find_homomorphisms_from, Homomorphisms};
pub use parse::{parse_atoms, parse_facts, parse_program, parse_query};
pub use program::{Database, Program, Query, Rule};
pub use subst::{apply, Substitution};
pub use term::{name, Name, Term};
pub use unify::{match_atom, mgu};
