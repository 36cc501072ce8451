use std::collections::HashSet;
use std::fmt;

use super::{GroundAtom, Symbol};

/// A closed-world set of ground facts.
///
/// Facts keep their insertion order; matching enumerates facts of a
/// predicate in that order. Equality is set equality.
#[derive(Clone, Default)]
pub struct State {
    facts: Vec<GroundAtom>,
    by_pred: Vec<(Symbol, Vec<u32>)>,
    members: HashSet<GroundAtom>,
}

impl State {
    pub fn new() -> State {
        State::default()
    }

    pub fn from_facts(facts: impl IntoIterator<Item = GroundAtom>) -> State {
        let mut s = State::new();
        for f in facts {
            s.insert(f);
        }
        s
    }

    /// Inserts a fact; returns false if it was already present.
    pub fn insert(&mut self, fact: GroundAtom) -> bool {
        if self.members.contains(&fact) {
            return false;
        }
        let idx = u32::try_from(self.facts.len()).expect("state too large");
        match self.by_pred.iter_mut().find(|(p, _)| *p == fact.pred) {
            Some((_, idxs)) => idxs.push(idx),
            None => self.by_pred.push((fact.pred, vec![idx])),
        }
        self.members.insert(fact.clone());
        self.facts.push(fact);
        true
    }

    pub fn contains(&self, fact: &GroundAtom) -> bool {
        self.members.contains(fact)
    }

    pub fn facts(&self) -> &[GroundAtom] {
        &self.facts
    }

    /// Facts of one predicate name, in insertion order.
    pub fn facts_with(&self, pred: Symbol) -> impl Iterator<Item = &GroundAtom> + '_ {
        self.by_pred
            .iter()
            .find(|(p, _)| *p == pred)
            .map(|(_, idxs)| idxs.as_slice())
            .unwrap_or(&[])
            .iter()
            .map(move |&i| &self.facts[i as usize])
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Constants occurring in any fact, in first-occurrence order.
    pub fn constants(&self) -> Vec<Symbol> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for f in &self.facts {
            for &a in &f.args {
                if seen.insert(a) {
                    out.push(a);
                }
            }
        }
        out
    }

    /// Facts sorted lexicographically; identical for equal states.
    pub fn canonical(&self) -> Vec<GroundAtom> {
        let mut v = self.facts.clone();
        v.sort();
        v
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.facts.len() == other.facts.len() && self.facts.iter().all(|f| other.contains(f))
    }
}

impl Eq for State {}

/// One fact per line.
impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in &self.facts {
            writeln!(f, "{fact}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.facts.iter()).finish()
    }
}
