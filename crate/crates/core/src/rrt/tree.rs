use std::fmt::{self, Write as _};

use crate::logic::text::parse_conjunction;
use crate::logic::{action_seed, Conjunction, GroundAtom, Predicate, State, Substitution, Symbol};

use super::TreeError;

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
        count: usize,
    },
    Split {
        test: Conjunction,
        yes: Box<Node>,
        no: Box<Node>,
    },
}

impl Node {
    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { yes, no, .. } => 1 + yes.depth().max(no.depth()),
        }
    }
}

/// A relational regression tree for one lifted action type. The action's
/// arguments are bound to `vars` before descending.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationalTree {
    pub action: Predicate,
    pub vars: Vec<Symbol>,
    pub root: Node,
}

impl RelationalTree {
    pub fn leaf(action: Predicate, value: f64, count: usize) -> RelationalTree {
        RelationalTree {
            action,
            vars: crate::logic::action_variables(action.arity),
            root: Node::Leaf { value, count },
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Leaf `(value, count)` pairs in preorder, yes branches first.
    pub fn leaves(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(n) = stack.pop() {
            match n {
                Node::Leaf { value, count } => out.push((*value, *count)),
                Node::Split { yes, no, .. } => {
                    stack.push(no);
                    stack.push(yes);
                }
            }
        }
        out
    }

    pub fn predict(&self, state: &State, action: &GroundAtom) -> Result<f64, TreeError> {
        self.check_action(action)?;
        Ok(self.eval(state, action))
    }

    /// Preorder index of the leaf that `(state, action)` reaches.
    pub fn leaf_index(&self, state: &State, action: &GroundAtom) -> Result<usize, TreeError> {
        self.check_action(action)?;
        Ok(self.route(state, action).0)
    }

    fn check_action(&self, action: &GroundAtom) -> Result<(), TreeError> {
        if action.predicate() == self.action {
            Ok(())
        } else {
            Err(TreeError::ActionMismatch {
                expected: self.action.to_string(),
                found: action.to_string(),
            })
        }
    }

    pub(crate) fn eval(&self, state: &State, action: &GroundAtom) -> f64 {
        self.route(state, action).1
    }

    fn route(&self, state: &State, action: &GroundAtom) -> (usize, f64) {
        let mut bindings = vec![action_seed(&self.vars, action)];
        let mut node = &self.root;
        let mut index = 0;
        loop {
            match node {
                Node::Leaf { value, .. } => return (index, *value),
                Node::Split { test, yes, no } => {
                    let mut ext = Vec::new();
                    for b in &bindings {
                        test.extend_into(state, b, &mut ext);
                    }
                    if ext.is_empty() {
                        index += count_leaves(yes);
                        node = no;
                    } else {
                        bindings = ext;
                        node = yes;
                    }
                }
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("tree {}", self.action);
        for v in &self.vars {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
        write_node(&self.root, 0, &mut out);
        out
    }

    pub fn from_text(text: &str) -> Result<RelationalTree, TreeError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .peekable();
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty tree"))?;
        let mut words = header.split_whitespace();
        if words.next() != Some("tree") {
            return Err(parse_err(1, "expected `tree <action>/<arity>` header"));
        }
        let action = parse_predicate(words.next().unwrap_or(""))
            .ok_or_else(|| parse_err(1, "malformed action predicate"))?;
        let vars: Vec<Symbol> = words.map(Symbol::intern).collect();
        if vars.len() != action.arity {
            return Err(parse_err(1, "action variable count differs from arity"));
        }
        let root = read_node(&mut lines, 0, &vars)?;
        if let Some((i, _)) = lines.next() {
            return Err(parse_err(i + 1, "trailing lines after tree"));
        }
        Ok(RelationalTree { action, vars, root })
    }
}

impl fmt::Display for RelationalTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn count_leaves(node: &Node) -> usize {
    match node {
        Node::Leaf { .. } => 1,
        Node::Split { yes, no, .. } => count_leaves(yes) + count_leaves(no),
    }
}

fn write_node(node: &Node, depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    match node {
        Node::Leaf { value, count } => {
            let _ = writeln!(out, "leaf: {value:?} n={count}");
        }
        Node::Split { test, yes, no } => {
            let _ = writeln!(out, "split: {test}");
            write_node(yes, depth + 1, out);
            write_node(no, depth + 1, out);
        }
    }
}

pub(crate) fn parse_predicate(s: &str) -> Option<Predicate> {
    let (name, arity) = s.rsplit_once('/')?;
    Some(Predicate::new(name, arity.parse().ok()?))
}

fn parse_err(line: usize, message: &str) -> TreeError {
    TreeError::Parse {
        line,
        message: message.to_string(),
    }
}

fn read_node<'a>(
    lines: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'a str)>>,
    depth: usize,
    scope: &[Symbol],
) -> Result<Node, TreeError> {
    let (i, line) = lines.next().ok_or_else(|| parse_err(0, "truncated tree"))?;
    let lineno = i + 1;
    let indent = line.len() - line.trim_start_matches(' ').len();
    if indent != 2 * depth {
        return Err(parse_err(lineno, "unexpected indentation"));
    }
    let body = line.trim();
    if let Some(rest) = body.strip_prefix("leaf:") {
        let mut parts = rest.split_whitespace();
        let value = parts
            .next()
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| parse_err(lineno, "malformed leaf value"))?;
        let count = parts
            .next()
            .and_then(|c| c.strip_prefix("n="))
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| parse_err(lineno, "malformed leaf count"))?;
        if parts.next().is_some() {
            return Err(parse_err(lineno, "trailing input after leaf"));
        }
        Ok(Node::Leaf { value, count })
    } else if let Some(rest) = body.strip_prefix("split:") {
        let test = parse_conjunction(rest).map_err(|e| parse_err(lineno, &e.message))?;
        test.check_negation(scope)?;
        let mut inner = scope.to_vec();
        for v in test.vars() {
            if !inner.contains(&v) {
                inner.push(v);
            }
        }
        let yes = read_node(lines, depth + 1, &inner)?;
        let no = read_node(lines, depth + 1, scope)?;
        Ok(Node::Split {
            test,
            yes: Box::new(yes),
            no: Box::new(no),
        })
    } else {
        Err(parse_err(lineno, "expected `split:` or `leaf:`"))
    }
}

/// Checks whether some extension of any binding satisfies `test`.
pub(crate) fn any_holds(test: &Conjunction, state: &State, bindings: &[Substitution]) -> bool {
    bindings.iter().any(|b| test.holds_from(state, b))
}
