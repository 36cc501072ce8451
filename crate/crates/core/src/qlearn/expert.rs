//! Plain-text trajectory files:
//!
//! ```text
//! begin
//! on(b1,floor)
//! ...
//! actions
//! move(b2,floor)
//! end
//! ```
//!
//! Only the start state and the actions are stored; transitions are
//! recomputed by replaying the actions through the domain.

use std::fmt::Write as _;

use crate::domains::Domain;
use crate::logic::text::parse_ground_atom;
use crate::logic::State;

use super::{LearnError, Trajectory, Transition};

pub fn write_trajectories(trajectories: &[Trajectory]) -> String {
    let mut out = String::new();
    for traj in trajectories {
        out.push_str("begin\n");
        if let Some(first) = traj.transitions.first() {
            for f in first.state.facts() {
                let _ = writeln!(out, "{f}");
            }
        }
        out.push_str("actions\n");
        for t in &traj.transitions {
            let _ = writeln!(out, "{}", t.action);
        }
        out.push_str("end\n");
    }
    out
}

fn err(line: usize, message: impl Into<String>) -> LearnError {
    LearnError::Trajectory {
        line,
        message: message.into(),
    }
}

enum Section {
    Outside,
    Facts,
    Actions,
}

pub fn read_trajectories(text: &str, domain: &dyn Domain) -> Result<Vec<Trajectory>, LearnError> {
    let mut out = Vec::new();
    let mut section = Section::Outside;
    let mut state = State::new();
    let mut transitions: Vec<Transition> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match (&section, line) {
            (Section::Outside, "begin") => {
                section = Section::Facts;
                state = State::new();
                transitions.clear();
            }
            (Section::Outside, _) => return Err(err(n, "expected `begin`")),
            (Section::Facts, "actions") => section = Section::Actions,
            (Section::Facts, _) => {
                let fact = parse_ground_atom(line).map_err(|e| err(n, e.message))?;
                state.insert(fact);
            }
            (Section::Actions, "end") => {
                section = Section::Outside;
                out.push(Trajectory {
                    transitions: std::mem::take(&mut transitions),
                });
            }
            (Section::Actions, _) => {
                let action = parse_ground_atom(line).map_err(|e| err(n, e.message))?;
                let current = transitions.last().map_or(&state, |t| &t.next_state).clone();
                let step = domain.step(&current, &action).map_err(|e| err(n, e.to_string()))?;
                transitions.push(Transition {
                    state: current,
                    action,
                    reward: step.reward,
                    next_state: step.next,
                    terminal: step.terminal,
                });
            }
        }
    }
    if !matches!(section, Section::Outside) {
        return Err(err(text.lines().count(), "unterminated trajectory"));
    }
    Ok(out)
}
