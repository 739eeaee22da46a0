use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("rule {label}: body and head must be nonempty")]
    EmptyRule { label: String },
    #[error("rule {label}: rules may not mention labeled nulls")]
    NullInRule { label: String },
    #[error("rule {label}: existential variable {var} also occurs in the body")]
    ExistentialInBody { label: String, var: String },
    #[error("rule {label}: existential variable {var} does not occur in the head")]
    ExistentialNotInHead { label: String, var: String },
    #[error("rule {label}: head variable {var} is neither existential nor bound by the body")]
    UnboundHeadVariable { label: String, var: String },
    #[error("duplicate rule label {label}")]
    DuplicateLabel { label: String },
    #[error("predicate {predicate} used with arity {found}, expected {expected}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("fact {fact} is not ground over constants")]
    NonGroundFact { fact: String },
    #[error("query body is empty")]
    EmptyQuery,
    #[error("queries may not mention labeled nulls")]
    NullInQuery,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unterminated quoted constant")]
    UnterminatedQuote,
    #[error("expected {expected}, found {found}")]
    Expected { expected: String, found: String },
    #[error("{0}")]
    Invalid(ProgramError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChaseError {
    #[error("trigger for rule {label} does not map the body into the instance")]
    TriggerMismatch { label: String },
    #[error("trigger for rule {label} leaves body variable {var} unbound")]
    UnboundTriggerVariable { label: String, var: String },
    #[error("probe needs n_small < n_big, got {n_small} and {n_big}")]
    InvalidProbeBounds { n_small: usize, n_big: usize },
    #[error("instance reached {atoms} atoms before level {level}; the cap is {max_atoms}")]
    InstanceTooLarge {
        level: usize,
        atoms: usize,
        max_atoms: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarkupError {
    #[error("markup needs atoms over the same predicate, found {a} and {a_prime}")]
    PredicateMismatch { a: String, a_prime: String },
}
