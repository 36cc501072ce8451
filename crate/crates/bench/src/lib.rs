//! Benchmark fixtures.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gbql_core::domains::{domain_by_name, Domain, DomainConfig, InstanceSize, Phase};
use gbql_core::logic::State;
use gbql_core::rrt::RegExample;

pub fn domain(name: &str, size: InstanceSize) -> Box<dyn Domain> {
    let cfg = DomainConfig {
        train: Some(vec![size]),
        test: Some(vec![size]),
        ..DomainConfig::default()
    };
    domain_by_name(name, &cfg).expect("known domain")
}

/// States visited by random walks from seeded start states.
pub fn visited_states(d: &dyn Domain, walks: usize, len: usize, seed: u64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..walks {
        let mut s = d.initial_state(Phase::Train, &mut rng).expect("valid sizes");
        for _ in 0..len {
            out.push(s.clone());
            let Some(a) = d.legal_actions(&s).choose(&mut rng).cloned() else {
                break;
            };
            s = d.step(&s, &a).expect("legal action").next;
        }
    }
    out
}

/// Regression examples over random walks, targeted at immediate reward.
/// `action` keeps a single action type; `None` keeps them all.
pub fn reward_examples(d: &dyn Domain, n: usize, seed: u64, action: Option<&str>) -> Vec<RegExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbe7c);
    let states = visited_states(d, n / 4 + 1, 8, seed);
    states
        .into_iter()
        .filter_map(|s| {
            let legal: Vec<_> = d
                .legal_actions(&s)
                .into_iter()
                .filter(|a| action.is_none_or(|name| a.pred.as_str() == name))
                .collect();
            let a = legal.choose(&mut rng)?.clone();
            let reward = d.step(&s, &a).ok()?.reward;
            Some(RegExample::new(Arc::new(s), a, reward))
        })
        .take(n)
        .collect()
}
