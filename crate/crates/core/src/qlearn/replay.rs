use std::collections::VecDeque;

use rand::seq::index;
use rand::RngCore;

use super::Transition;

/// Bounded FIFO of past transitions; the oldest are evicted first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        ReplayBuffer {
            capacity,
            items: VecDeque::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.capacity == 0 {
            return;
        }
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn extend(&mut self, ts: impl IntoIterator<Item = Transition>) {
        for t in ts {
            self.push(t);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `k` distinct transitions drawn uniformly, in draw order; the whole
    /// buffer when it holds fewer than `k`.
    pub fn sample(&self, k: usize, rng: &mut dyn RngCore) -> Vec<Transition> {
        if k >= self.items.len() {
            return self.items.iter().cloned().collect();
        }
        index::sample(rng, self.items.len(), k)
            .into_iter()
            .map(|i| self.items[i].clone())
            .collect()
    }
}
