//! Relational regression trees: candidate test generation from mode
//! declarations, weighted-variance split scoring, greedy induction and
//! prediction.

mod candidates;
mod learn;
mod split;
mod tree;

pub use candidates::{generate_candidates, ScopedVar, SplitTest};
pub use learn::{learn_tree, RegExample, TreeParams};
pub use split::{score_partition, weighted_mean, weighted_variance, SplitScore};
pub use tree::{Node, RelationalTree};

pub(crate) use tree::parse_predicate;

use crate::logic::{action_seed, action_variables, Conjunction, BiasError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TreeError {
    #[error("no training examples")]
    NoExamples,
    #[error("expected action of type {expected}, got {found}")]
    ActionMismatch { expected: String, found: String },
    #[error("invalid example: {0}")]
    BadTarget(String),
    #[error("invalid tree parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Bias(#[from] BiasError),
    #[error("tree text line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Scores `test` as a root split over `examples`: the partition is by
/// whether the action-seeded test is satisfied.
pub fn score_split(examples: &[RegExample], test: &Conjunction) -> Result<SplitScore, TreeError> {
    let first = examples.first().ok_or(TreeError::NoExamples)?;
    let vars = action_variables(first.action.args.len());
    test.check_negation(&vars)?;
    let samples: Vec<(f64, f64)> = examples.iter().map(|e| (e.target, e.weight)).collect();
    let yes: Vec<bool> = examples
        .iter()
        .map(|e| test.holds_from(&e.state, &action_seed(&vars, &e.action)))
        .collect();
    Ok(score_partition(&samples, &yes))
}
