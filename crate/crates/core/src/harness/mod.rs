//! Experiment orchestration: configs, metrics, CSV output and the exact
//! tabular oracle.

mod config;
mod experiment;
mod oracle;

use rand::RngCore;

use crate::domains::{Domain, Phase};
use crate::qlearn::{rollout, LearnError, QFunction};

pub use crate::qlearn::mean_abs_bellman_error;
pub use config::{ConfigError, RunConfig, CONFIG_KEYS};
pub use experiment::{
    aggregate, format_mean_std, run_experiment, run_seed, write_aggregate_csv, ExperimentReport, IterationMetrics,
    AGGREGATE_HEADER, CSV_HEADER,
};
pub use oracle::{greedy_steps_to_goal, ground_mdp, tabular_value_iteration, Edge, GroundMdp, QTable};

/// States explored by the optimal-steps search before giving up.
pub const SEARCH_BUDGET: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicyScore {
    /// Mean undiscounted episode return.
    pub avg_reward: f64,
    /// Fraction of episodes reaching a goal within optimal + slack steps.
    pub pct_goals: f64,
}

/// Outcome of one greedy test episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Episode {
    pub total_reward: f64,
    pub steps: usize,
    pub reached_goal: bool,
    pub optimal: Option<usize>,
}

impl Episode {
    /// Reached the goal within `optimal + slack` steps, or within
    /// `fallback` when the optimum is unknown.
    pub fn success(&self, slack: usize, fallback: usize) -> bool {
        let cap = self.optimal.map_or(fallback, |o| o + slack);
        self.reached_goal && self.steps <= cap
    }
}

/// Greedy rollout from `start`.
pub fn greedy_episode(
    q: &QFunction,
    domain: &dyn Domain,
    start: crate::logic::State,
    max_steps: usize,
    rng: &mut dyn RngCore,
) -> Result<Episode, LearnError> {
    let optimal = domain.optimal_steps(&start, SEARCH_BUDGET);
    let traj = rollout(q, domain, start, 0.0, max_steps, rng)?;
    Ok(Episode {
        total_reward: traj.total_reward(),
        steps: traj.len(),
        reached_goal: traj.reached_goal(),
        optimal,
    })
}

/// Runs `n` greedy episodes from test-phase start states.
pub fn evaluate_policy(
    q: &QFunction,
    domain: &dyn Domain,
    n: usize,
    rng: &mut dyn RngCore,
    max_steps: usize,
    goal_slack: usize,
) -> Result<PolicyScore, LearnError> {
    let mut episodes = Vec::with_capacity(n);
    for _ in 0..n {
        let start = domain.initial_state(Phase::Test, rng)?;
        episodes.push(greedy_episode(q, domain, start, max_steps, rng)?);
    }
    Ok(score_episodes(&episodes, goal_slack, max_steps))
}

pub fn score_episodes(episodes: &[Episode], goal_slack: usize, max_steps: usize) -> PolicyScore {
    if episodes.is_empty() {
        return PolicyScore {
            avg_reward: 0.0,
            pct_goals: 0.0,
        };
    }
    let n = episodes.len() as f64;
    PolicyScore {
        avg_reward: episodes.iter().map(|e| e.total_reward).sum::<f64>() / n,
        pct_goals: episodes.iter().filter(|e| e.success(goal_slack, max_steps)).count() as f64 / n,
    }
}
