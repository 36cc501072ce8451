//! Functional gradient boosting of relational regression trees: a first
//! tree fit to the raw targets, then trees fit to the remaining residuals,
//! summed at prediction time. One ensemble per lifted action type.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::logic::{GroundAtom, LanguageBias, Predicate, State};
use crate::rrt::{learn_tree, parse_predicate, RegExample, RelationalTree, TreeError, TreeParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoostError {
    #[error("boosting needs at least one stage, got {0}")]
    InvalidStages(usize),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("bundle line {line}: {message}")]
    Bundle { line: usize, message: String },
}

/// Ordered tree lists per action type; prediction is their sum.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoostedModel {
    trees: BTreeMap<Predicate, Vec<RelationalTree>>,
    pub stages: usize,
    pub params: TreeParams,
}

impl BoostedModel {
    pub fn new(stages: usize, params: TreeParams) -> BoostedModel {
        BoostedModel {
            trees: BTreeMap::new(),
            stages,
            params,
        }
    }

    pub fn trees_for(&self, action: Predicate) -> &[RelationalTree] {
        self.trees.get(&action).map_or(&[], Vec::as_slice)
    }

    pub fn action_types(&self) -> impl Iterator<Item = Predicate> + '_ {
        self.trees.keys().copied()
    }

    pub fn tree_count(&self) -> usize {
        self.trees.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.tree_count() == 0
    }

    pub fn push(&mut self, tree: RelationalTree) {
        self.trees.entry(tree.action).or_default().push(tree);
    }

    /// Appends every tree of `other`, action type by action type.
    pub fn append(&mut self, other: BoostedModel) {
        for (action, trees) in other.trees {
            self.trees.entry(action).or_default().extend(trees);
        }
    }

    /// Sum of the action type's tree predictions, 0 for unseen types.
    pub fn predict(&self, state: &State, action: &GroundAtom) -> f64 {
        let mut acc = 0.0;
        for t in self.trees_for(action.predicate()) {
            acc += t.eval(state, action);
        }
        acc
    }
}

pub fn model_predict(model: &BoostedModel, state: &State, action: &GroundAtom) -> f64 {
    model.predict(state, action)
}

#[derive(Clone, Debug)]
pub struct GradientExample {
    pub state: Arc<State>,
    pub action: GroundAtom,
    pub residual: f64,
}

/// Pointwise functional gradients: target minus current prediction.
pub fn gen_gradients(examples: &[RegExample], model: &BoostedModel) -> Vec<GradientExample> {
    examples
        .iter()
        .map(|e| GradientExample {
            state: e.state.clone(),
            action: e.action.clone(),
            residual: e.target - model.predict(&e.state, &e.action),
        })
        .collect()
}

/// Fits `stages` trees per action type present in `examples`.
pub fn tree_boost(
    examples: &[RegExample],
    stages: usize,
    bias: &LanguageBias,
    params: &TreeParams,
) -> Result<BoostedModel, BoostError> {
    if stages < 1 {
        return Err(BoostError::InvalidStages(stages));
    }
    let mut by_action: BTreeMap<Predicate, Vec<RegExample>> = BTreeMap::new();
    for e in examples {
        by_action.entry(e.action.predicate()).or_default().push(e.clone());
    }
    let mut model = BoostedModel::new(stages, *params);
    for (action, part) in by_action {
        let mut running = vec![0.0; part.len()];
        let mut residuals = part.clone();
        let mut trees = Vec::with_capacity(stages);
        for _ in 0..stages {
            for ((r, e), f) in residuals.iter_mut().zip(&part).zip(&running) {
                r.target = e.target - f;
            }
            let tree = learn_tree(&residuals, bias, params)?;
            for (f, e) in running.iter_mut().zip(&part) {
                *f += tree.eval(&e.state, &e.action);
            }
            trees.push(tree);
        }
        model.trees.insert(action, trees);
    }
    Ok(model)
}

const BUNDLE_MAGIC: &str = "# relational q-function bundle";

fn params_line(p: &TreeParams) -> String {
    format!(
        "params max_depth={} min_leaf={} max_literals={} min_variance_reduction={:?}",
        p.max_depth, p.min_leaf, p.max_literals, p.min_variance_reduction
    )
}

/// Serializes the model with a `kind` tag naming the learner that built it.
pub fn write_bundle(model: &BoostedModel, kind: &str) -> String {
    let mut out = format!("{BUNDLE_MAGIC}\nformat 1\nkind {kind}\nstages {}\n", model.stages);
    out.push_str(&params_line(&model.params));
    out.push('\n');
    for (action, trees) in &model.trees {
        let _ = writeln!(out, "action {action} trees {}", trees.len());
        for t in trees {
            out.push_str(&t.to_text());
        }
    }
    out
}

fn bundle_err(line: usize, message: impl Into<String>) -> BoostError {
    BoostError::Bundle {
        line,
        message: message.into(),
    }
}

fn keyed<'a>(line: Option<(usize, &'a str)>, key: &str) -> Result<(usize, &'a str), BoostError> {
    let (i, l) = line.ok_or_else(|| bundle_err(0, format!("missing `{key}` line")))?;
    l.strip_prefix(key)
        .and_then(|r| r.strip_prefix(' '))
        .map(|r| (i + 1, r.trim()))
        .ok_or_else(|| bundle_err(i + 1, format!("expected `{key}`")))
}

fn parse_params(lineno: usize, s: &str) -> Result<TreeParams, BoostError> {
    let mut p = TreeParams::default();
    for field in s.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| bundle_err(lineno, format!("malformed parameter `{field}`")))?;
        let bad = || bundle_err(lineno, format!("bad value for `{k}`"));
        match k {
            "max_depth" => p.max_depth = v.parse().map_err(|_| bad())?,
            "min_leaf" => p.min_leaf = v.parse().map_err(|_| bad())?,
            "max_literals" => p.max_literals = v.parse().map_err(|_| bad())?,
            "min_variance_reduction" => p.min_variance_reduction = v.parse().map_err(|_| bad())?,
            _ => return Err(bundle_err(lineno, format!("unknown parameter `{k}`"))),
        }
    }
    Ok(p)
}

/// Inverse of [`write_bundle`]; returns the kind tag and the model.
pub fn read_bundle(text: &str) -> Result<(String, BoostedModel), BoostError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut it = lines.iter().copied().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match it.next() {
        Some((_, l)) if l.trim() == BUNDLE_MAGIC => {}
        _ => return Err(bundle_err(1, "not a model bundle")),
    }
    let (n, format) = keyed(it.next(), "format")?;
    if format != "1" {
        return Err(bundle_err(n, format!("unsupported format {format}")));
    }
    let (_, kind) = keyed(it.next(), "kind")?;
    let (n, stages) = keyed(it.next(), "stages")?;
    let stages = stages.parse().map_err(|_| bundle_err(n, "bad stage count"))?;
    let (n, params) = keyed(it.next(), "params")?;
    let params = parse_params(n, params)?;
    let mut model = BoostedModel::new(stages, params);
    let rest: Vec<(usize, &str)> = it.collect();
    let mut pos = 0;
    while pos < rest.len() {
        let (n, decl) = keyed(Some(rest[pos]), "action")?;
        let (pred, count) = decl
            .split_once(" trees ")
            .ok_or_else(|| bundle_err(n, "expected `action <pred>/<arity> trees <k>`"))?;
        let action = parse_predicate(pred).ok_or_else(|| bundle_err(n, "bad action predicate"))?;
        let count: usize = count.parse().map_err(|_| bundle_err(n, "bad tree count"))?;
        pos += 1;
        let mut trees = Vec::with_capacity(count);
        for _ in 0..count {
            let start = pos;
            if !rest.get(pos).is_some_and(|(_, l)| l.starts_with("tree ")) {
                return Err(bundle_err(n, "missing tree block"));
            }
            pos += 1;
            while pos < rest.len() && !rest[pos].1.starts_with("tree ") && !rest[pos].1.starts_with("action ") {
                pos += 1;
            }
            let block: String = rest[start..pos].iter().map(|(_, l)| format!("{l}\n")).collect();
            let tree = RelationalTree::from_text(&block).map_err(|e| match e {
                TreeError::Parse { line, message } => bundle_err(rest[start].0 + line, message),
                other => other.into(),
            })?;
            if tree.action != action {
                return Err(bundle_err(rest[start].0 + 1, "tree action differs from its section"));
            }
            trees.push(tree);
        }
        model.trees.insert(action, trees);
    }
    Ok((kind.to_string(), model))
}
