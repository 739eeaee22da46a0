//! Static analysis for existential rules: null tracking, rule unfolding,
//! triangular-guardedness checking, a labelled chase and syntactic baselines.

pub mod baselines;
pub mod chase;
pub mod error;
pub mod extension;
pub mod markup;
pub mod nullsets;
pub mod rtc;
pub mod syntax;

pub use error::{ChaseError, MarkupError, ParseError, ParseErrorKind, ProgramError};
pub use syntax::*;
