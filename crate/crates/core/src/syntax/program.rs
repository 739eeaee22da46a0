use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::atom::{vars_of, write_atoms, Atom};
use super::term::{Name, Term};
use crate::error::ProgramError;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Rule {
    pub label: Name,
    pub body: Vec<Atom>,
    pub head: Vec<Atom>,
    pub existentials: BTreeSet<Name>,
}

impl Rule {
    /// Builds a rule and checks the body/head/existential invariants.
    pub fn new(
        label: impl Into<Name>,
        body: Vec<Atom>,
        head: Vec<Atom>,
        existentials: BTreeSet<Name>,
    ) -> Result<Rule, ProgramError> {
        let rule = Rule {
            label: label.into(),
            body,
            head,
            existentials,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        let label = self.label.to_string();
        if self.body.is_empty() || self.head.is_empty() {
            return Err(ProgramError::EmptyRule { label });
        }
        if self
            .body
            .iter()
            .chain(&self.head)
            .any(|a| a.args.iter().any(Term::is_null))
        {
            return Err(ProgramError::NullInRule { label });
        }
        let body_vars = self.body_vars();
        let head_vars = vars_of(&self.head);
        for z in &self.existentials {
            if body_vars.contains(z) {
                return Err(ProgramError::ExistentialInBody {
                    label,
                    var: z.to_string(),
                });
            }
            if !head_vars.contains(z) {
                return Err(ProgramError::ExistentialNotInHead {
                    label,
                    var: z.to_string(),
                });
            }
        }
        for y in &head_vars {
            if !self.existentials.contains(y) && !body_vars.contains(y) {
                return Err(ProgramError::UnboundHeadVariable {
                    label,
                    var: y.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn body_vars(&self) -> BTreeSet<Name> {
        vars_of(&self.body)
    }

    /// Body variables that also occur in the head.
    pub fn frontier(&self) -> BTreeSet<Name> {
        let head = vars_of(&self.head);
        self.body_vars()
            .into_iter()
            .filter(|v| head.contains(v))
            .collect()
    }

    pub fn is_existential(&self, v: &str) -> bool {
        self.existentials.contains(v)
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        self.body
            .iter()
            .chain(&self.head)
            .flat_map(|a| a.constants().cloned())
            .collect()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.label)?;
        write_atoms(f, &self.body)?;
        f.write_str(" -> ")?;
        if !self.existentials.is_empty() {
            f.write_str("exists ")?;
            for (i, z) in self.existentials.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{z}")?;
            }
            f.write_str(": ")?;
        }
        write_atoms(f, &self.head)?;
        f.write_str(".")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub schema: BTreeMap<Name, usize>,
}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Result<Program, ProgramError> {
        let mut schema = BTreeMap::new();
        let mut labels = BTreeSet::new();
        for rule in &rules {
            rule.validate()?;
            if !labels.insert(rule.label.clone()) {
                return Err(ProgramError::DuplicateLabel {
                    label: rule.label.to_string(),
                });
            }
            for atom in rule.body.iter().chain(&rule.head) {
                register(&mut schema, atom)?;
            }
        }
        Ok(Program { rules, schema })
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rule(&self, label: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| &*r.label == label)
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        self.rules.iter().flat_map(Rule::constants).collect()
    }

    pub fn max_arity(&self) -> usize {
        self.schema.values().copied().max().unwrap_or(0)
    }

    pub fn max_body(&self) -> usize {
        self.rules.iter().map(|r| r.body.len()).max().unwrap_or(0)
    }

    pub fn has_existentials(&self) -> bool {
        self.rules.iter().any(|r| !r.existentials.is_empty())
    }

    /// Checks that `atoms` agree with the program schema on every shared predicate.
    pub fn check_atoms<'a>(
        &self,
        atoms: impl IntoIterator<Item = &'a Atom>,
    ) -> Result<(), ProgramError> {
        let mut schema = self.schema.clone();
        for atom in atoms {
            register(&mut schema, atom)?;
        }
        Ok(())
    }
}

fn register(schema: &mut BTreeMap<Name, usize>, atom: &Atom) -> Result<(), ProgramError> {
    match schema.get(&atom.predicate) {
        Some(&n) if n != atom.arity() => Err(ProgramError::ArityMismatch {
            predicate: atom.predicate.to_string(),
            expected: n,
            found: atom.arity(),
        }),
        Some(_) => Ok(()),
        None => {
            schema.insert(atom.predicate.clone(), atom.arity());
            Ok(())
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Database {
    pub facts: Vec<Atom>,
}

impl Database {
    pub fn new(facts: Vec<Atom>) -> Result<Database, ProgramError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for fact in facts {
            if fact.args.iter().any(|t| !matches!(t, Term::Const(_))) {
                return Err(ProgramError::NonGroundFact {
                    fact: fact.to_string(),
                });
            }
            if seen.insert(fact.clone()) {
                out.push(fact);
            }
        }
        Ok(Database { facts: out })
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        self.facts
            .iter()
            .flat_map(|a| a.constants().cloned())
            .collect()
    }
}

impl fmt::Display for Database {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in &self.facts {
            writeln!(f, "{fact}.")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Query {
    pub body: Vec<Atom>,
}

impl Query {
    pub fn new(body: Vec<Atom>) -> Result<Query, ProgramError> {
        if body.is_empty() {
            return Err(ProgramError::EmptyQuery);
        }
        if body.iter().any(|a| a.args.iter().any(Term::is_null)) {
            return Err(ProgramError::NullInQuery);
        }
        Ok(Query { body })
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("?- ")?;
        write_atoms(f, &self.body)?;
        f.write_str(".")
    }
}
