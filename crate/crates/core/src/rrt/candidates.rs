use std::collections::HashSet;
use std::fmt;

use crate::logic::{ArgMode, Atom, Conjunction, LanguageBias, Literal, ModeDecl, Symbol, Term};

/// A typed variable in scope at a tree node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ScopedVar {
    pub var: Symbol,
    pub type_tag: Symbol,
}

impl ScopedVar {
    pub fn new(var: &str, type_tag: &str) -> ScopedVar {
        ScopedVar {
            var: Symbol::intern(var),
            type_tag: Symbol::intern(type_tag),
        }
    }
}

/// A candidate node test together with the variables it introduces.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SplitTest {
    pub conj: Conjunction,
    pub introduces: Vec<ScopedVar>,
}

impl fmt::Display for SplitTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.conj, f)
    }
}

fn fresh_name(index: usize) -> Symbol {
    Symbol::intern(&format!("X{index}"))
}

/// All argument fillings of `mode` in `scope`. Input arguments reuse scope
/// variables of the same type, outputs take fresh variables numbered from
/// `next_fresh`, constants come from the bias. No variable repeats within
/// one literal.
fn fillings(
    mode: &ModeDecl,
    scope: &[ScopedVar],
    next_fresh: usize,
    bias: &LanguageBias,
) -> Vec<(Atom, Vec<ScopedVar>)> {
    let mut out = Vec::new();
    let mut args = Vec::with_capacity(mode.args.len());
    let mut fresh = Vec::new();
    fill(mode, 0, scope, next_fresh, bias, &mut args, &mut fresh, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn fill(
    mode: &ModeDecl,
    pos: usize,
    scope: &[ScopedVar],
    next_fresh: usize,
    bias: &LanguageBias,
    args: &mut Vec<Term>,
    fresh: &mut Vec<ScopedVar>,
    out: &mut Vec<(Atom, Vec<ScopedVar>)>,
) {
    let Some(arg) = mode.args.get(pos) else {
        out.push((
            Atom {
                pred: mode.pred,
                args: args.iter().copied().collect(),
            },
            fresh.clone(),
        ));
        return;
    };
    match *arg {
        ArgMode::Input(ty) => {
            for sv in scope.iter().filter(|sv| sv.type_tag == ty) {
                let t = Term::Var(sv.var);
                if args.contains(&t) {
                    continue;
                }
                args.push(t);
                fill(mode, pos + 1, scope, next_fresh, bias, args, fresh, out);
                args.pop();
            }
        }
        ArgMode::Output(ty) => {
            let var = fresh_name(next_fresh + fresh.len());
            args.push(Term::Var(var));
            fresh.push(ScopedVar { var, type_tag: ty });
            fill(mode, pos + 1, scope, next_fresh, bias, args, fresh, out);
            fresh.pop();
            args.pop();
        }
        ArgMode::Const(ty) => {
            for &c in bias.constants_of(ty) {
                args.push(Term::Const(c));
                fill(mode, pos + 1, scope, next_fresh, bias, args, fresh, out);
                args.pop();
            }
        }
    }
}

/// Enumerates mode-legal conjunctions of 1..=`max_len` literals over
/// `context`, in a deterministic order without duplicates.
///
/// Single literals come in both polarities when they introduce no variable.
/// In longer conjunctions every literal after the first consumes a variable
/// introduced earlier in the same conjunction, and only positive literals
/// that introduce variables are extended further.
pub fn generate_candidates(context: &[ScopedVar], bias: &LanguageBias, max_len: usize) -> Vec<SplitTest> {
    let mut out = Vec::new();
    if max_len == 0 {
        return out;
    }
    let mut seen = HashSet::new();
    let mut push = |out: &mut Vec<SplitTest>, lits: Vec<Literal>, introduces: Vec<ScopedVar>| {
        let conj = Conjunction::new(lits);
        if seen.insert(conj.clone()) {
            out.push(SplitTest { conj, introduces });
        }
    };
    for mode in bias.modes() {
        for (atom, new_vars) in fillings(mode, context, context.len(), bias) {
            push(&mut out, vec![Literal::pos(atom.clone())], new_vars.clone());
            if new_vars.is_empty() {
                push(&mut out, vec![Literal::neg(atom)], Vec::new());
            } else if max_len > 1 {
                let mut scope = context.to_vec();
                scope.extend(new_vars.iter().copied());
                extend(
                    vec![Literal::pos(atom)],
                    scope,
                    new_vars,
                    context.len(),
                    bias,
                    max_len,
                    &mut out,
                    &mut push,
                );
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn extend(
    prefix: Vec<Literal>,
    scope: Vec<ScopedVar>,
    introduced: Vec<ScopedVar>,
    context_len: usize,
    bias: &LanguageBias,
    max_len: usize,
    out: &mut Vec<SplitTest>,
    push: &mut impl FnMut(&mut Vec<SplitTest>, Vec<Literal>, Vec<ScopedVar>),
) {
    for mode in bias.modes() {
        for (atom, new_vars) in fillings(mode, &scope, context_len + introduced.len(), bias) {
            let links = atom
                .vars()
                .any(|v| introduced.iter().any(|sv| sv.var == v));
            if !links {
                continue;
            }
            let mut all_new = introduced.clone();
            all_new.extend(new_vars.iter().copied());
            let mut lits = prefix.clone();
            lits.push(Literal::pos(atom.clone()));
            push(out, lits.clone(), all_new.clone());
            if new_vars.is_empty() {
                let mut neg = prefix.clone();
                neg.push(Literal::neg(atom));
                push(out, neg, introduced.clone());
            } else if lits.len() < max_len {
                let mut next_scope = scope.clone();
                next_scope.extend(new_vars.iter().copied());
                extend(lits, next_scope, all_new, context_len, bias, max_len, out, push);
            }
        }
    }
}
