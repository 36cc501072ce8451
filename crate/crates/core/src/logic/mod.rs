//! First-order representation of states, actions and split tests, and
//! conjunctive matching against closed-world states.

mod bias;
mod matching;
mod state;
mod subst;
mod symbol;
mod term;
pub mod text;

pub use bias::{action_variables, ActionDecl, ArgMode, LanguageBias, ModeDecl};
pub use matching::{action_seed, match_conjunction, satisfies};
pub use state::State;
pub use subst::{apply, Substitution};
pub use symbol::Symbol;
pub use term::{Atom, Conjunction, GroundAtom, Literal, Predicate, Term};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BiasError {
    #[error("negated literal `{literal}` uses unbound variable {var}")]
    UnsafeNegation { literal: String, var: String },
    #[error("no mode declaration for predicate `{0}`")]
    MissingMode(String),
    #[error("more than one mode declaration for predicate `{0}`")]
    DuplicateMode(String),
    #[error("no action declaration for `{0}`")]
    UnknownAction(String),
    #[error("literal `{literal}` does not fit mode `{mode}`")]
    ArityMismatch { mode: String, literal: String },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}
