//! Fitted Q-iteration drivers: boosted (GBQL), residual-boosted (RBFQ) and
//! single-tree (RRT), with ε-greedy rollouts and experience replay.

mod expert;
mod replay;
mod trainer;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boosting::{read_bundle, write_bundle, BoostError, BoostedModel};
use crate::domains::{Domain, DomainError, Phase};
use crate::logic::{GroundAtom, ParseError, State};
use crate::rrt::TreeParams;

pub use expert::{read_trajectories, write_trajectories};
pub use replay::ReplayBuffer;
pub use trainer::{gbql, rbfq, rrt_baseline, Checkpoint, IterationOutcome, IterationSummary, Trainer};

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Boost(#[from] BoostError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid learning parameters: {0}")]
    Params(String),
    #[error("no actions to choose from")]
    NoActions,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("trajectory file line {line}: {message}")]
    Trajectory { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: State,
    pub action: GroundAtom,
    pub reward: f64,
    pub next_state: State,
    pub terminal: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }

    pub fn reached_goal(&self) -> bool {
        self.transitions.last().is_some_and(|t| t.terminal)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QKind {
    Gbql,
    Rbfq,
    Rrt,
}

impl QKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QKind::Gbql => "gbql",
            QKind::Rbfq => "rbfq",
            QKind::Rrt => "rrt",
        }
    }

    pub fn parse(s: &str) -> Option<QKind> {
        match s {
            "gbql" => Some(QKind::Gbql),
            "rbfq" => Some(QKind::Rbfq),
            "rrt" => Some(QKind::Rrt),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnParams {
    pub iterations: usize,
    pub stages: usize,
    pub trajectories: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub replay_fraction: f64,
    pub replay_capacity: usize,
    /// Retrain on every stored transition each iteration instead of a
    /// `replay_fraction` sample.
    pub replay_all: bool,
    pub max_episode_steps: usize,
    pub tree: TreeParams,
    /// Depth of the single tree RBFQ adds per iteration.
    pub rbfq_max_depth: usize,
    /// Iterations whose training sets include expert trajectories.
    pub expert_iterations: usize,
    pub seed: u64,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            iterations: 20,
            stages: 5,
            trajectories: 5,
            alpha: 0.95,
            gamma: 0.99,
            epsilon: 0.3,
            epsilon_decay: 0.9,
            epsilon_min: 0.05,
            replay_fraction: 0.1,
            replay_capacity: 10_000,
            replay_all: false,
            max_episode_steps: 50,
            tree: TreeParams::default(),
            rbfq_max_depth: 3,
            expert_iterations: 0,
            seed: 0,
        }
    }
}

impl LearnParams {
    pub fn validate(&self) -> Result<(), LearnError> {
        let fail = |m: &str| Err(LearnError::Params(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail("alpha must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return fail("gamma must lie in [0, 1)");
        }
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("epsilon_decay", self.epsilon_decay),
            ("epsilon_min", self.epsilon_min),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(LearnError::Params(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.replay_fraction >= 0.0 && self.replay_fraction.is_finite()) {
            return fail("replay_fraction must be a finite non-negative number");
        }
        if self.stages < 1 {
            return fail("boosting_stages must be at least 1");
        }
        if self.trajectories < 1 {
            return fail("trajectories must be at least 1");
        }
        if self.rbfq_max_depth < 1 {
            return fail("rbfq_max_depth must be at least 1");
        }
        self.tree.validate().map_err(|e| LearnError::Params(e.to_string()))
    }

    /// Exploration rate of iteration `i`, counted from 1.
    pub fn epsilon_at(&self, i: usize) -> f64 {
        let steps = i.saturating_sub(1).min(i32::MAX as usize) as i32;
        (self.epsilon * self.epsilon_decay.powi(steps)).max(self.epsilon_min)
    }
}

/// Independent generator for one purpose within one iteration.
pub fn stream_rng(seed: u64, iteration: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration as u64 * 16 + purpose);
    rng
}

pub(crate) const ROLLOUT_STREAM: u64 = 0;
pub(crate) const REPLAY_STREAM: u64 = 1;
pub const EVAL_STREAM: u64 = 2;

/// A Q-function estimate: the learner kind plus its tree ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct QFunction {
    pub kind: QKind,
    pub model: BoostedModel,
}

impl QFunction {
    pub fn new(kind: QKind) -> QFunction {
        QFunction {
            kind,
            model: BoostedModel::default(),
        }
    }

    pub fn value(&self, state: &State, action: &GroundAtom) -> f64 {
        self.model.predict(state, action)
    }

    /// Largest value over `actions`, 0 when there are none.
    pub fn max_value(&self, state: &State, actions: &[GroundAtom]) -> f64 {
        actions
            .iter()
            .map(|a| self.value(state, a))
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
            .unwrap_or(0.0)
    }

    pub fn to_bundle(&self) -> String {
        write_bundle(&self.model, self.kind.as_str())
    }

    pub fn from_bundle(text: &str) -> Result<QFunction, LearnError> {
        let (kind, model) = read_bundle(text)?;
        let kind = QKind::parse(&kind).ok_or_else(|| LearnError::Params(format!("unknown model kind `{kind}`")))?;
        Ok(QFunction { kind, model })
    }
}

fn next_max(q: &QFunction, domain: &dyn Domain, t: &Transition) -> f64 {
    if t.terminal {
        return 0.0;
    }
    q.max_value(&t.next_state, &domain.legal_actions(&t.next_state))
}

/// `(1−α)Q(s,a) + α[R + γ max_a′ Q(s′,a′)]`.
pub fn bellman_target(q: &QFunction, domain: &dyn Domain, t: &Transition, alpha: f64, gamma: f64) -> f64 {
    let current = q.value(&t.state, &t.action);
    (1.0 - alpha) * current + alpha * (t.reward + gamma * next_max(q, domain, t))
}

/// `R + γ max_a′ Q(s′,a′) − Q(s,a)`.
pub fn bellman_residual(q: &QFunction, domain: &dyn Domain, t: &Transition, gamma: f64) -> f64 {
    t.reward + gamma * next_max(q, domain, t) - q.value(&t.state, &t.action)
}

/// Mean of `|bellman_residual|` over `transitions`; `None` when empty.
pub fn mean_abs_bellman_error(q: &QFunction, domain: &dyn Domain, transitions: &[Transition], gamma: f64) -> Option<f64> {
    if transitions.is_empty() {
        return None;
    }
    let total: f64 = transitions.iter().map(|t| bellman_residual(q, domain, t, gamma).abs()).sum();
    Some(total / transitions.len() as f64)
}

/// Highest-valued action; ties go to the smallest action in predicate then
/// argument order.
pub fn greedy_action(q: &QFunction, state: &State, actions: &[GroundAtom]) -> Result<GroundAtom, LearnError> {
    let mut best: Option<(f64, &GroundAtom)> = None;
    for a in actions {
        let v = q.value(state, a);
        let better = match best {
            None => true,
            Some((bv, ba)) => v > bv || (v == bv && a < ba),
        };
        if better {
            best = Some((v, a));
        }
    }
    best.map(|(_, a)| a.clone()).ok_or(LearnError::NoActions)
}

pub fn epsilon_greedy_action(
    q: &QFunction,
    state: &State,
    actions: &[GroundAtom],
    epsilon: f64,
    rng: &mut dyn RngCore,
) -> Result<GroundAtom, LearnError> {
    if actions.is_empty() {
        return Err(LearnError::NoActions);
    }
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return Ok(actions.choose(rng).expect("non-empty").clone());
    }
    greedy_action(q, state, actions)
}

/// Applies `action`, or with the domain's failure probability leaves the
/// state unchanged.
pub fn simulate(
    domain: &dyn Domain,
    state: &State,
    action: &GroundAtom,
    rng: &mut dyn RngCore,
) -> Result<Transition, LearnError> {
    let fail = domain.failure_prob();
    if fail > 0.0 && rng.gen::<f64>() < fail {
        return Ok(Transition {
            state: state.clone(),
            action: action.clone(),
            reward: domain.reward(state, action, state),
            next_state: state.clone(),
            terminal: false,
        });
    }
    let step = domain.step(state, action)?;
    Ok(Transition {
        state: state.clone(),
        action: action.clone(),
        reward: step.reward,
        next_state: step.next,
        terminal: step.terminal,
    })
}

/// Runs one ε-greedy episode from `start`.
pub fn rollout(
    q: &QFunction,
    domain: &dyn Domain,
    start: State,
    epsilon: f64,
    max_steps: usize,
    rng: &mut dyn RngCore,
) -> Result<Trajectory, LearnError> {
    let mut transitions = Vec::new();
    let mut state = start;
    while transitions.len() < max_steps {
        let actions = domain.legal_actions(&state);
        if actions.is_empty() {
            if domain.is_goal(&state) {
                break;
            }
            return Err(DomainError::NoActions.into());
        }
        let action = epsilon_greedy_action(q, &state, &actions, epsilon, rng)?;
        let t = simulate(domain, &state, &action, rng)?;
        let done = t.terminal;
        state = t.next_state.clone();
        transitions.push(t);
        if done {
            break;
        }
    }
    Ok(Trajectory { transitions })
}

/// `p` episodes from fresh training-phase start states.
pub fn sample_trajectories(
    q: &QFunction,
    domain: &dyn Domain,
    p: usize,
    epsilon: f64,
    rng: &mut dyn RngCore,
    max_steps: usize,
) -> Result<Vec<Trajectory>, LearnError> {
    (0..p)
        .map(|_| {
            let start = domain.initial_state(Phase::Train, rng)?;
            rollout(q, domain, start, epsilon, max_steps, rng)
        })
        .collect()
}
