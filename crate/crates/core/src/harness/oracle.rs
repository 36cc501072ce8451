use std::collections::HashMap;

use crate::domains::{Domain, DomainError, InstanceSize};
use crate::logic::{GroundAtom, State};

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub action: GroundAtom,
    pub next: usize,
    pub reward: f64,
    pub terminal: bool,
}

/// A fully enumerated deterministic MDP. Goal states have no edges.
#[derive(Clone, Debug, Default)]
pub struct GroundMdp {
    pub states: Vec<State>,
    pub edges: Vec<Vec<Edge>>,
    index: HashMap<Vec<GroundAtom>, usize>,
}

impl GroundMdp {
    pub fn index_of(&self, state: &State) -> Option<usize> {
        self.index.get(&state.canonical()).copied()
    }

    /// Builds the MDP by hand from states and per-state edges.
    pub fn from_parts(states: Vec<State>, edges: Vec<Vec<Edge>>) -> GroundMdp {
        let index = states.iter().enumerate().map(|(i, s)| (s.canonical(), i)).collect();
        GroundMdp { states, edges, index }
    }
}

/// Enumerates every state of `size` and its legal transitions.
pub fn ground_mdp(domain: &dyn Domain, size: InstanceSize, budget: usize) -> Result<GroundMdp, DomainError> {
    let states = domain.enumerate_states(size, budget)?;
    let mut mdp = GroundMdp::from_parts(states, Vec::new());
    let mut edges = Vec::with_capacity(mdp.states.len());
    for s in &mdp.states {
        let mut out = Vec::new();
        for action in domain.legal_actions(s) {
            let step = domain.step(s, &action)?;
            let next = mdp
                .index_of(&step.next)
                .ok_or_else(|| DomainError::InvalidState(format!("successor of {action} was not enumerated")))?;
            out.push(Edge {
                action,
                next,
                reward: step.reward,
                terminal: step.terminal,
            });
        }
        edges.push(out);
    }
    mdp.edges = edges;
    Ok(mdp)
}

/// Exact action values, aligned with `GroundMdp::edges`.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    pub q: Vec<Vec<f64>>,
    pub sweeps: usize,
}

impl QTable {
    pub fn value(&self, s: usize) -> f64 {
        self.q[s].iter().copied().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v)))).unwrap_or(0.0)
    }

    /// Index of the best edge; ties go to the smallest action.
    pub fn greedy(&self, mdp: &GroundMdp, s: usize) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &v) in self.q[s].iter().enumerate() {
            best = match best {
                None => Some(i),
                Some(b) => {
                    let bv = self.q[s][b];
                    if v > bv || (v == bv && mdp.edges[s][i].action < mdp.edges[s][b].action) {
                        Some(i)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best
    }

    /// `max |T*Q − Q|` over all state-action pairs.
    pub fn bellman_residual(&self, mdp: &GroundMdp, gamma: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for (s, edges) in mdp.edges.iter().enumerate() {
            for (i, e) in edges.iter().enumerate() {
                let backed = backup(self, e, gamma);
                worst = worst.max((backed - self.q[s][i]).abs());
            }
        }
        worst
    }
}

fn backup(q: &QTable, e: &Edge, gamma: f64) -> f64 {
    let future = if e.terminal { 0.0 } else { q.value(e.next) };
    e.reward + gamma * future
}

/// Synchronous value iteration until the largest change is below `tol` or
/// `max_sweeps` is reached.
pub fn tabular_value_iteration(mdp: &GroundMdp, gamma: f64, tol: f64, max_sweeps: usize) -> QTable {
    let mut table = QTable {
        q: mdp.edges.iter().map(|e| vec![0.0; e.len()]).collect(),
        sweeps: 0,
    };
    while table.sweeps < max_sweeps {
        let next: Vec<Vec<f64>> = mdp
            .edges
            .iter()
            .map(|edges| edges.iter().map(|e| backup(&table, e, gamma)).collect())
            .collect();
        let delta = next
            .iter()
            .flatten()
            .zip(table.q.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        table.q = next;
        table.sweeps += 1;
        if delta < tol {
            break;
        }
    }
    table
}

/// Steps the greedy policy of `table` needs from `s` to reach a goal, or
/// `None` within `limit` steps.
pub fn greedy_steps_to_goal(mdp: &GroundMdp, table: &QTable, mut s: usize, limit: usize) -> Option<usize> {
    for steps in 0..=limit {
        let i = match table.greedy(mdp, s) {
            None => return Some(steps),
            Some(i) => i,
        };
        let e = &mdp.edges[s][i];
        if e.terminal {
            return Some(steps + 1);
        }
        s = e.next;
    }
    None
}
