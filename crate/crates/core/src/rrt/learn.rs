use std::sync::Arc;

use crate::logic::{action_seed, GroundAtom, LanguageBias, State, Substitution};

use super::candidates::{generate_candidates, ScopedVar};
use super::split::{score_partition, weighted_mean, SplitScore};
use super::tree::{any_holds, Node, RelationalTree};
use super::TreeError;

/// One weighted regression example for a state-action pair.
#[derive(Clone, Debug)]
pub struct RegExample {
    pub state: Arc<State>,
    pub action: GroundAtom,
    pub target: f64,
    pub weight: f64,
}

impl RegExample {
    pub fn new(state: Arc<State>, action: GroundAtom, target: f64) -> RegExample {
        RegExample {
            state,
            action,
            target,
            weight: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub max_literals: usize,
    pub min_variance_reduction: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 4,
            min_leaf: 3,
            max_literals: 2,
            min_variance_reduction: 1e-6,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.max_depth == 0 || self.min_leaf == 0 || self.max_literals == 0 {
            return Err(TreeError::InvalidParams(
                "max_depth, min_leaf and max_literals must be at least 1".into(),
            ));
        }
        if !(self.min_variance_reduction >= 0.0) {
            return Err(TreeError::InvalidParams("min_variance_reduction must be >= 0".into()));
        }
        Ok(())
    }
}

/// An example at a node with every binding of the positive path so far.
struct Row {
    example: usize,
    bindings: Vec<Substitution>,
}

struct Learner<'a> {
    examples: &'a [RegExample],
    bias: &'a LanguageBias,
    params: &'a TreeParams,
}

/// Greedy top-down induction. Each node takes the candidate test with the
/// largest weighted variance reduction, first in enumeration order on ties.
pub fn learn_tree(
    examples: &[RegExample],
    bias: &LanguageBias,
    params: &TreeParams,
) -> Result<RelationalTree, TreeError> {
    params.validate()?;
    let first = examples.first().ok_or(TreeError::NoExamples)?;
    let action = first.action.predicate();
    if let Some(other) = examples.iter().find(|e| e.action.predicate() != action) {
        return Err(TreeError::ActionMismatch {
            expected: action.to_string(),
            found: other.action.to_string(),
        });
    }
    if let Some(bad) = examples.iter().find(|e| !e.target.is_finite() || !(e.weight >= 0.0)) {
        return Err(TreeError::BadTarget(format!(
            "target {} weight {} for {}",
            bad.target, bad.weight, bad.action
        )));
    }
    let decl = bias.action(action)?;
    let vars = crate::logic::action_variables(action.arity);
    let context: Vec<ScopedVar> = vars
        .iter()
        .zip(&decl.arg_types)
        .map(|(&var, &type_tag)| ScopedVar { var, type_tag })
        .collect();
    let rows = examples
        .iter()
        .enumerate()
        .map(|(i, e)| Row {
            example: i,
            bindings: vec![action_seed(&vars, &e.action)],
        })
        .collect();
    let learner = Learner {
        examples,
        bias,
        params,
    };
    let root = learner.grow(rows, &context, 0);
    Ok(RelationalTree { action, vars, root })
}

impl Learner<'_> {
    fn samples(&self, rows: &[Row]) -> Vec<(f64, f64)> {
        rows.iter()
            .map(|r| {
                let e = &self.examples[r.example];
                (e.target, e.weight)
            })
            .collect()
    }

    fn grow(&self, rows: Vec<Row>, context: &[ScopedVar], depth: usize) -> Node {
        let samples = self.samples(&rows);
        let leaf = Node::Leaf {
            value: weighted_mean(samples.iter().copied()),
            count: rows.len(),
        };
        if depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf {
            return leaf;
        }
        let candidates = generate_candidates(context, self.bias, self.params.max_literals);
        let mut best: Option<(usize, SplitScore, Vec<bool>)> = None;
        let mut flags = vec![false; rows.len()];
        for (ci, cand) in candidates.iter().enumerate() {
            for (f, r) in flags.iter_mut().zip(&rows) {
                *f = any_holds(&cand.conj, &self.examples[r.example].state, &r.bindings);
            }
            let score = score_partition(&samples, &flags);
            if !score.is_valid(self.params.min_leaf) {
                continue;
            }
            if best.as_ref().is_none_or(|(_, b, _)| score.reduction > b.reduction) {
                best = Some((ci, score, flags.clone()));
            }
        }
        let Some((ci, score, flags)) = best else {
            return leaf;
        };
        if !(score.reduction > self.params.min_variance_reduction) {
            return leaf;
        }
        let chosen = &candidates[ci];
        let mut yes_rows = Vec::new();
        let mut no_rows = Vec::new();
        for (row, goes_yes) in rows.into_iter().zip(flags) {
            if goes_yes {
                let state = &self.examples[row.example].state;
                let mut ext = Vec::new();
                for b in &row.bindings {
                    chosen.conj.extend_into(state, b, &mut ext);
                }
                yes_rows.push(Row {
                    example: row.example,
                    bindings: ext,
                });
            } else {
                no_rows.push(row);
            }
        }
        let mut yes_context = context.to_vec();
        yes_context.extend(chosen.introduces.iter().copied());
        let yes = self.grow(yes_rows, &yes_context, depth + 1);
        let no = self.grow(no_rows, context, depth + 1);
        Node::Split {
            test: chosen.conj.clone(),
            yes: Box::new(yes),
            no: Box::new(no),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::text::{parse_mode, parse_state};
    use crate::logic::ActionDecl;

    fn blocks_bias() -> LanguageBias {
        let modes = ["clear(+obj)", "on(+obj,-obj)", "isFloor(+obj)"]
            .iter()
            .map(|m| parse_mode(m).unwrap())
            .collect();
        LanguageBias::new(modes, vec![ActionDecl::new("move", &["obj", "obj"])]).unwrap()
    }

    fn ex(state: &Arc<State>, a: &str, b: &str, target: f64) -> RegExample {
        RegExample::new(state.clone(), GroundAtom::new("move", &[a, b]), target)
    }

    #[test]
    fn constant_targets_give_single_leaf() {
        let s = Arc::new(parse_state("on(a,floor)\nclear(a)\nisFloor(floor)\nclear(floor)").unwrap());
        let exs: Vec<_> = (0..8).map(|_| ex(&s, "a", "floor", 0.25)).collect();
        let t = learn_tree(&exs, &blocks_bias(), &TreeParams::default()).unwrap();
        assert_eq!(t.root, Node::Leaf { value: 0.25, count: 8 });
    }

    #[test]
    fn too_few_examples_for_a_split() {
        let s = Arc::new(parse_state("on(a,floor)\nclear(a)").unwrap());
        let exs = vec![ex(&s, "a", "floor", 1.0), ex(&s, "a", "b", 3.0)];
        let t = learn_tree(&exs, &blocks_bias(), &TreeParams::default()).unwrap();
        assert_eq!(t.root, Node::Leaf { value: 2.0, count: 2 });
    }

    #[test]
    fn mixed_action_types_are_rejected() {
        let s = Arc::new(State::new());
        let exs = vec![
            ex(&s, "a", "b", 1.0),
            RegExample::new(s.clone(), GroundAtom::new("load", &["a", "b"]), 1.0),
        ];
        assert!(matches!(
            learn_tree(&exs, &blocks_bias(), &TreeParams::default()),
            Err(TreeError::ActionMismatch { .. })
        ));
        assert!(matches!(
            learn_tree(&[], &blocks_bias(), &TreeParams::default()),
            Err(TreeError::NoExamples)
        ));
    }
}
