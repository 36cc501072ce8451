//! Model-free relational reinforcement learning with boosted relational
//! regression trees.
//!
//! States are closed-world sets of ground facts ([`logic`]). Q-functions are
//! sums of relational regression trees ([`rrt`], [`boosting`]) learned by
//! fitted Q-iteration ([`qlearn`]) on the blocks-world and logistics
//! simulators in [`domains`]. [`harness`] runs seeded experiments and
//! writes per-iteration metrics.

pub mod boosting;
pub mod domains;
pub mod harness;
pub mod logic;
pub mod qlearn;
pub mod rrt;

pub use boosting::{model_predict, tree_boost, BoostedModel};
pub use domains::{domain_by_name, Domain, Phase};
pub use logic::{GroundAtom, Predicate, State, Symbol};
pub use qlearn::{LearnParams, QFunction, QKind, Trainer, Transition};
pub use rrt::{learn_tree, RegExample, RelationalTree, TreeParams};

/// Top-level error for the library's fallible entry points.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Bias(#[from] logic::BiasError),
    #[error(transparent)]
    Parse(#[from] logic::ParseError),
    #[error(transparent)]
    Tree(#[from] rrt::TreeError),
    #[error(transparent)]
    Boost(#[from] boosting::BoostError),
    #[error(transparent)]
    Domain(#[from] domains::DomainError),
    #[error(transparent)]
    Learn(#[from] qlearn::LearnError),
    #[error(transparent)]
    Config(#[from] harness::ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
