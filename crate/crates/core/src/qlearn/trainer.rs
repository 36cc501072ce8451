use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boosting::tree_boost;
use crate::domains::Domain;
use crate::logic::text::{parse_ground_atom, parse_state};
use crate::logic::State;
use crate::rrt::{RegExample, TreeParams};

use super::{
    bellman_residual, bellman_target, mean_abs_bellman_error, sample_trajectories, stream_rng, LearnError,
    LearnParams, QFunction, QKind, ReplayBuffer, Trajectory, Transition, REPLAY_STREAM, ROLLOUT_STREAM,
};

/// What one Q-iteration did.
#[derive(Clone, Debug)]
pub struct IterationOutcome {
    pub iteration: usize,
    pub epsilon: f64,
    pub fresh: usize,
    pub replayed: usize,
    pub expert: usize,
    /// The dataset the new estimate was fit on.
    pub training_set: Vec<Transition>,
}

/// Per-iteration record returned by the convenience drivers.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationSummary {
    pub iteration: usize,
    pub epsilon: f64,
    pub training_size: usize,
    pub mean_abs_bellman_error: Option<f64>,
}

/// Resumable Q-iteration state for one seed. Randomness is drawn from
/// streams keyed by (seed, iteration), so nothing else needs saving.
pub struct Trainer<'d> {
    domain: &'d dyn Domain,
    params: LearnParams,
    q: QFunction,
    buffer: ReplayBuffer,
    completed: usize,
    expert: Vec<Transition>,
}

impl<'d> Trainer<'d> {
    pub fn new(domain: &'d dyn Domain, kind: QKind, params: LearnParams) -> Result<Trainer<'d>, LearnError> {
        params.validate()?;
        Ok(Trainer {
            domain,
            buffer: ReplayBuffer::new(params.replay_capacity),
            params,
            q: QFunction::new(kind),
            completed: 0,
            expert: Vec::new(),
        })
    }

    /// Expert transitions join the training sets of the first
    /// `params.expert_iterations` iterations. RBFQ ignores them.
    pub fn with_expert(mut self, trajectories: &[Trajectory]) -> Trainer<'d> {
        self.expert = trajectories.iter().flat_map(|t| t.transitions.iter().cloned()).collect();
        self
    }

    pub fn q(&self) -> &QFunction {
        &self.q
    }

    pub fn params(&self) -> &LearnParams {
        &self.params
    }

    pub fn completed(&self) -> usize {
        self.completed
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn is_done(&self) -> bool {
        self.completed >= self.params.iterations
    }

    /// Runs the next Q-iteration.
    pub fn step(&mut self) -> Result<IterationOutcome, LearnError> {
        let i = self.completed + 1;
        let p = &self.params;
        let epsilon = p.epsilon_at(i);
        let mut rng = stream_rng(p.seed, i, ROLLOUT_STREAM);
        let trajectories =
            sample_trajectories(&self.q, self.domain, p.trajectories, epsilon, &mut rng, p.max_episode_steps)?;
        let fresh: Vec<Transition> = trajectories.into_iter().flat_map(|t| t.transitions).collect();
        let want = if p.replay_all {
            self.buffer.len()
        } else {
            (p.replay_fraction * fresh.len() as f64).floor() as usize
        };
        let replayed = self.buffer.sample(want, &mut stream_rng(p.seed, i, REPLAY_STREAM));
        let use_expert = self.q.kind != QKind::Rbfq && i <= p.expert_iterations;
        let expert: &[Transition] = if use_expert { &self.expert } else { &[] };

        let mut training_set = Vec::with_capacity(fresh.len() + replayed.len() + expert.len());
        training_set.extend(fresh.iter().cloned());
        training_set.extend(replayed.iter().cloned());
        training_set.extend(expert.iter().cloned());
        let outcome_counts = (fresh.len(), replayed.len(), expert.len());
        self.buffer.extend(fresh);

        if !training_set.is_empty() {
            self.fit(&training_set)?;
        }
        self.completed = i;
        Ok(IterationOutcome {
            iteration: i,
            epsilon,
            fresh: outcome_counts.0,
            replayed: outcome_counts.1,
            expert: outcome_counts.2,
            training_set,
        })
    }

    fn fit(&mut self, data: &[Transition]) -> Result<(), LearnError> {
        let p = &self.params;
        let mut states: HashMap<String, Arc<State>> = HashMap::new();
        let mut shared = |s: &State| -> Arc<State> {
            states.entry(s.to_string()).or_insert_with(|| Arc::new(s.clone())).clone()
        };
        let bias = self.domain.bias();
        match self.q.kind {
            QKind::Gbql | QKind::Rrt => {
                let examples: Vec<RegExample> = data
                    .iter()
                    .map(|t| {
                        let target = bellman_target(&self.q, self.domain, t, p.alpha, p.gamma);
                        RegExample::new(shared(&t.state), t.action.clone(), target)
                    })
                    .collect();
                let stages = if self.q.kind == QKind::Rrt { 1 } else { p.stages };
                self.q.model = tree_boost(&examples, stages, bias, &p.tree)?;
            }
            QKind::Rbfq => {
                let examples: Vec<RegExample> = data
                    .iter()
                    .map(|t| {
                        let residual = bellman_residual(&self.q, self.domain, t, p.gamma);
                        RegExample::new(shared(&t.state), t.action.clone(), residual)
                    })
                    .collect();
                let weak = TreeParams {
                    max_depth: p.rbfq_max_depth,
                    ..p.tree
                };
                let step = tree_boost(&examples, 1, bias, &weak)?;
                self.q.model.stages = 1;
                self.q.model.params = weak;
                self.q.model.append(step);
            }
        }
        Ok(())
    }

    /// Runs the remaining iterations, calling `hook` after each.
    pub fn run<E>(
        &mut self,
        mut hook: impl FnMut(&Trainer<'d>, &IterationOutcome) -> Result<(), E>,
    ) -> Result<(), E>
    where
        E: From<LearnError>,
    {
        while !self.is_done() {
            let outcome = self.step()?;
            hook(self, &outcome)?;
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut table: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut id = |s: &State| {
            let text = s.to_string();
            *index.entry(text.clone()).or_insert_with(|| {
                table.push(text);
                table.len() - 1
            })
        };
        let buffer = self
            .buffer
            .iter()
            .map(|t| SavedTransition {
                state: id(&t.state),
                action: t.action.to_string(),
                reward_bits: t.reward.to_bits(),
                next: id(&t.next_state),
                terminal: t.terminal,
            })
            .collect();
        Checkpoint {
            seed: self.params.seed,
            completed: self.completed,
            model: self.q.to_bundle(),
            states: table,
            buffer,
        }
    }

    /// Restores a trainer saved by [`Trainer::checkpoint`]. `params` must be
    /// the ones the checkpointed run was started with.
    pub fn resume(domain: &'d dyn Domain, params: LearnParams, cp: &Checkpoint) -> Result<Trainer<'d>, LearnError> {
        if cp.seed != params.seed {
            return Err(LearnError::Checkpoint(format!(
                "checkpoint seed {} differs from configured seed {}",
                cp.seed, params.seed
            )));
        }
        let q = QFunction::from_bundle(&cp.model)?;
        let states: Vec<State> = cp.states.iter().map(|s| parse_state(s)).collect::<Result<_, _>>()?;
        let get = |i: usize| {
            states
                .get(i)
                .cloned()
                .ok_or_else(|| LearnError::Checkpoint(format!("state index {i} out of range")))
        };
        let mut trainer = Trainer::new(domain, q.kind, params)?;
        for t in &cp.buffer {
            trainer.buffer.push(Transition {
                state: get(t.state)?,
                action: parse_ground_atom(&t.action)?,
                reward: f64::from_bits(t.reward_bits),
                next_state: get(t.next)?,
                terminal: t.terminal,
            });
        }
        trainer.q = q;
        trainer.completed = cp.completed;
        Ok(trainer)
    }

    pub fn into_q(self) -> QFunction {
        self.q
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SavedTransition {
    state: usize,
    action: String,
    reward_bits: u64,
    next: usize,
    terminal: bool,
}

/// Serializable trainer state after a completed iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub seed: u64,
    pub completed: usize,
    pub model: String,
    states: Vec<String>,
    buffer: Vec<SavedTransition>,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Checkpoint, LearnError> {
        serde_json::from_str(text).map_err(|e| LearnError::Checkpoint(e.to_string()))
    }
}

fn drive(domain: &dyn Domain, kind: QKind, params: &LearnParams) -> Result<(QFunction, Vec<IterationSummary>), LearnError> {
    let mut trainer = Trainer::new(domain, kind, params.clone())?;
    let mut summaries = Vec::new();
    trainer.run(|t, out| {
        summaries.push(IterationSummary {
            iteration: out.iteration,
            epsilon: out.epsilon,
            training_size: out.training_set.len(),
            mean_abs_bellman_error: mean_abs_bellman_error(t.q(), domain, &out.training_set, params.gamma),
        });
        Ok::<_, LearnError>(())
    })?;
    Ok((trainer.into_q(), summaries))
}

/// Boosted fitted Q-iteration; each iteration replaces the model.
pub fn gbql(domain: &dyn Domain, params: &LearnParams) -> Result<(QFunction, Vec<IterationSummary>), LearnError> {
    drive(domain, QKind::Gbql, params)
}

/// Each iteration adds one tree fit to Bellman residuals.
pub fn rbfq(domain: &dyn Domain, params: &LearnParams) -> Result<(QFunction, Vec<IterationSummary>), LearnError> {
    drive(domain, QKind::Rbfq, params)
}

/// GBQL with a single tree per iteration.
pub fn rrt_baseline(domain: &dyn Domain, params: &LearnParams) -> Result<(QFunction, Vec<IterationSummary>), LearnError> {
    drive(domain, QKind::Rrt, params)
}
