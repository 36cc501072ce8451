use std::ops::ControlFlow;

use smallvec::SmallVec;

use super::{BiasError, Conjunction, GroundAtom, Literal, State, Substitution, Symbol, Term};

impl Conjunction {
    /// Checks that every variable of a negated literal is bound by `seed`
    /// or by some positive literal.
    pub fn check_negation(&self, seed_vars: &[Symbol]) -> Result<(), BiasError> {
        let positive: Vec<Symbol> = self
            .literals
            .iter()
            .filter(|l| !l.negated)
            .flat_map(|l| l.atom.vars())
            .collect();
        for lit in self.literals.iter().filter(|l| l.negated) {
            for v in lit.atom.vars() {
                if !seed_vars.contains(&v) && !positive.contains(&v) {
                    return Err(BiasError::UnsafeNegation {
                        literal: lit.to_string(),
                        var: v.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// True if some extension of `seed` satisfies the conjunction. The
    /// caller guarantees negation safety.
    pub(crate) fn holds_from(&self, state: &State, seed: &Substitution) -> bool {
        let mut found = false;
        let _ = self.for_each_solution(state, seed, &mut |_| {
            found = true;
            ControlFlow::Break(())
        });
        found
    }

    /// Appends every extension of `seed` satisfying the conjunction to
    /// `out`. The caller guarantees negation safety.
    pub(crate) fn extend_into(&self, state: &State, seed: &Substitution, out: &mut Vec<Substitution>) {
        let _ = self.for_each_solution(state, seed, &mut |s| {
            out.push(s.clone());
            ControlFlow::Continue(())
        });
    }

    fn for_each_solution(
        &self,
        state: &State,
        seed: &Substitution,
        visit: &mut dyn FnMut(&Substitution) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let mut pos: SmallVec<[&Literal; 4]> = SmallVec::new();
        let mut neg: SmallVec<[&Literal; 4]> = SmallVec::new();
        for l in &self.literals {
            if l.negated {
                neg.push(l);
            } else {
                pos.push(l);
            }
        }
        let mut sub = seed.clone();
        solve(&pos, &neg, state, &mut sub, visit)
    }
}

fn solve(
    pos: &[&Literal],
    neg: &[&Literal],
    state: &State,
    sub: &mut Substitution,
    visit: &mut dyn FnMut(&Substitution) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let Some((lit, rest)) = pos.split_first() else {
        for n in neg {
            let ground = sub
                .ground(&n.atom)
                .expect("negated literal with unbound variable");
            if state.contains(&ground) {
                return ControlFlow::Continue(());
            }
        }
        return visit(sub);
    };
    let atom = &lit.atom;
    for fact in state.facts_with(atom.pred) {
        if fact.args.len() != atom.args.len() {
            continue;
        }
        let mut fresh: SmallVec<[Symbol; 3]> = SmallVec::new();
        if unify(&atom.args, fact, sub, &mut fresh) {
            let flow = solve(rest, neg, state, sub, visit);
            for v in &fresh {
                sub.unbind(*v);
            }
            flow?;
        } else {
            for v in &fresh {
                sub.unbind(*v);
            }
        }
    }
    ControlFlow::Continue(())
}

fn unify(
    args: &[Term],
    fact: &GroundAtom,
    sub: &mut Substitution,
    fresh: &mut SmallVec<[Symbol; 3]>,
) -> bool {
    for (t, &c) in args.iter().zip(&fact.args) {
        match *t {
            Term::Const(k) => {
                if k != c {
                    return false;
                }
            }
            Term::Var(v) => match sub.get(v) {
                Some(b) => {
                    if b != c {
                        return false;
                    }
                }
                None => {
                    sub.bind(v, c);
                    fresh.push(v);
                }
            },
        }
    }
    true
}

/// Every extension of `seed` under which all positive literals are facts of
/// `state` and no negated literal is. Solutions are enumerated by literal
/// order, then fact insertion order.
pub fn match_conjunction(
    conj: &Conjunction,
    state: &State,
    seed: &Substitution,
) -> Result<Vec<Substitution>, BiasError> {
    let seed_vars: Vec<Symbol> = seed.iter().map(|(v, _)| v).collect();
    conj.check_negation(&seed_vars)?;
    let mut out = Vec::new();
    conj.extend_into(state, seed, &mut out);
    Ok(out)
}

/// Binds the action's arguments to `action_vars`, positionally.
pub fn action_seed(action_vars: &[Symbol], action: &GroundAtom) -> Substitution {
    Substitution::from_pairs(action_vars.iter().copied().zip(action.args.iter().copied()))
}

/// Existential test of a node conjunction for a state-action pair: the first
/// satisfying substitution (seeded with the action's arguments), if any.
pub fn satisfies(
    test: &Conjunction,
    state: &State,
    action: &GroundAtom,
    action_vars: &[Symbol],
) -> Result<Option<Substitution>, BiasError> {
    test.check_negation(action_vars)?;
    let seed = action_seed(action_vars, action);
    let mut first = None;
    let _ = test.for_each_solution(state, &seed, &mut |s| {
        first = Some(s.clone());
        ControlFlow::Break(())
    });
    Ok(first)
}
