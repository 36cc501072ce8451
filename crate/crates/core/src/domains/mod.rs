//! Relational MDP simulators: blocks-world Stack, Unstack and On, and
//! Logistics. States are emitted as fact sets; each domain decodes them into
//! a compact form internally.

mod blocks;
mod logistics;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::logic::{GroundAtom, LanguageBias, State, Symbol};
use crate::qlearn::{Trajectory, Transition};

pub use blocks::{Blocks, BlocksTask};
pub use logistics::Logistics;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("illegal action {action}: {reason}")]
    IllegalAction { action: String, reason: String },
    #[error("malformed state: {0}")]
    InvalidState(String),
    #[error("invalid instance size: {0}")]
    InvalidSize(String),
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("state space exceeds the budget of {0} states")]
    BudgetExceeded(usize),
    #[error("no legal actions in a non-goal state")]
    NoActions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Train,
    Test,
}

/// Object counts of one problem instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InstanceSize {
    Blocks(usize),
    Logistics { cities: usize, trucks: usize, boxes: usize },
}

impl fmt::Display for InstanceSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceSize::Blocks(n) => write!(f, "{n}"),
            InstanceSize::Logistics { cities, trucks, boxes } => write!(f, "{cities}/{trucks}/{boxes}"),
        }
    }
}

impl FromStr for InstanceSize {
    type Err = DomainError;

    /// `n` for blocks, `cities/trucks/boxes` for logistics.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DomainError::InvalidSize(s.to_string());
        let parts: Vec<usize> = s
            .trim()
            .split('/')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [n] => Ok(InstanceSize::Blocks(n)),
            [cities, trucks, boxes] => Ok(InstanceSize::Logistics { cities, trucks, boxes }),
            _ => Err(bad()),
        }
    }
}

/// Parses a comma-separated list such as `3,4,5` or `5/3/3`.
pub fn parse_sizes(s: &str) -> Result<Vec<InstanceSize>, DomainError> {
    s.split(',').map(str::parse).collect()
}

/// Result of applying an action.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub next: State,
    pub reward: f64,
    pub terminal: bool,
}

pub trait Domain: Send + Sync {
    fn name(&self) -> &str;

    /// Mode declarations and action signatures for tree learning.
    fn bias(&self) -> &LanguageBias;

    fn sizes(&self, phase: Phase) -> &[InstanceSize];

    /// A random non-goal start state of the given size.
    fn initial_state_for(&self, size: InstanceSize, rng: &mut dyn RngCore) -> Result<State, DomainError>;

    /// A start state for a size drawn uniformly from the phase's sizes.
    fn initial_state(&self, phase: Phase, rng: &mut dyn RngCore) -> Result<State, DomainError> {
        let sizes = self.sizes(phase);
        if sizes.is_empty() {
            return Err(DomainError::InvalidSize(format!("no {phase:?} sizes configured")));
        }
        let size = sizes[rng.gen_range(0..sizes.len())];
        self.initial_state_for(size, rng)
    }

    /// Legal ground actions in a fixed order; empty in goal states.
    fn legal_actions(&self, state: &State) -> Vec<GroundAtom>;

    fn step(&self, state: &State, action: &GroundAtom) -> Result<Step, DomainError>;

    fn reward(&self, state: &State, action: &GroundAtom, next: &State) -> f64;

    fn is_goal(&self, state: &State) -> bool;

    /// Fewest actions from `state` to a goal, or `None` if the search
    /// exceeds `budget` states or no goal is reachable.
    fn optimal_steps(&self, state: &State, budget: usize) -> Option<usize>;

    /// Every state of the given size, goals included.
    fn enumerate_states(&self, size: InstanceSize, budget: usize) -> Result<Vec<State>, DomainError>;

    fn check_invariants(&self, state: &State) -> Result<(), DomainError>;

    /// Probability that a chosen action has no effect.
    fn failure_prob(&self) -> f64 {
        0.0
    }
}

/// Construction parameters shared by all domains.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainConfig {
    pub train: Option<Vec<InstanceSize>>,
    pub test: Option<Vec<InstanceSize>>,
    pub on_base_penalty: f64,
    pub on_offtower_penalty: f64,
    pub action_failure: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig {
            train: None,
            test: None,
            on_base_penalty: 0.05,
            on_offtower_penalty: 0.2,
            action_failure: 0.0,
        }
    }
}

pub const DOMAIN_NAMES: [&str; 4] = ["stack", "unstack", "on", "logistics"];

/// Builds a domain by name with default sizes unless overridden.
pub fn domain_by_name(name: &str, cfg: &DomainConfig) -> Result<Box<dyn Domain>, DomainError> {
    let blocks = |task, train: &[usize], test: &[usize]| -> Result<Box<dyn Domain>, DomainError> {
        let train = cfg.train.clone().unwrap_or_else(|| train.iter().map(|&n| InstanceSize::Blocks(n)).collect());
        let test = cfg.test.clone().unwrap_or_else(|| test.iter().map(|&n| InstanceSize::Blocks(n)).collect());
        Ok(Box::new(Blocks::new(task, train, test, cfg)?))
    };
    match name {
        "stack" => blocks(BlocksTask::Stack, &[3, 4, 5], &[6, 7]),
        "unstack" => blocks(BlocksTask::Unstack, &[4, 5, 6], &[7]),
        "on" => blocks(BlocksTask::On, &[4], &[5, 6, 7]),
        "logistics" => {
            let train = cfg.train.clone().unwrap_or(vec![InstanceSize::Logistics {
                cities: 5,
                trucks: 3,
                boxes: 3,
            }]);
            let test = cfg.test.clone().unwrap_or(vec![InstanceSize::Logistics {
                cities: 7,
                trucks: 3,
                boxes: 5,
            }]);
            Ok(Box::new(Logistics::new(train, test, cfg.action_failure)?))
        }
        other => Err(DomainError::UnknownDomain(other.to_string())),
    }
}

/// Index encoded in an object name such as `b3` or `city12`, zero based.
pub(crate) fn object_index(sym: Symbol, prefix: &str) -> Option<usize> {
    sym.as_str()
        .strip_prefix(prefix)?
        .parse::<usize>()
        .ok()
        .and_then(|i| i.checked_sub(1))
}

pub(crate) fn object_name(prefix: &str, index: usize) -> String {
    format!("{prefix}{}", index + 1)
}

/// Follows, from `start`, the legal action whose successor is closest to a
/// goal, first in legal order on ties. Stops at a goal or after `max_steps`.
pub fn expert_trajectory(
    domain: &dyn Domain,
    start: &State,
    max_steps: usize,
    budget: usize,
) -> Result<Trajectory, DomainError> {
    let mut transitions = Vec::new();
    let mut state = start.clone();
    while transitions.len() < max_steps && !domain.is_goal(&state) {
        let mut best: Option<(usize, GroundAtom, Step)> = None;
        for a in domain.legal_actions(&state) {
            let step = domain.step(&state, &a)?;
            let dist = if step.terminal {
                0
            } else {
                domain.optimal_steps(&step.next, budget).unwrap_or(usize::MAX)
            };
            if best.as_ref().is_none_or(|(d, _, _)| dist < *d) {
                best = Some((dist, a, step));
            }
        }
        let (_, action, step) = best.ok_or(DomainError::NoActions)?;
        transitions.push(Transition {
            state: state.clone(),
            action,
            reward: step.reward,
            next_state: step.next.clone(),
            terminal: step.terminal,
        });
        state = step.next;
    }
    Ok(Trajectory { transitions })
}
