use proptest::prelude::*;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gbql_core::boosting::BoostedModel;
use gbql_core::domains::{domain_by_name, Domain, DomainConfig, DomainError, InstanceSize, Phase, Step};
use gbql_core::logic::text::parse_mode;
use gbql_core::logic::{ActionDecl, GroundAtom, LanguageBias, Predicate, State};
use gbql_core::qlearn::{
    bellman_residual, bellman_target, epsilon_greedy_action, gbql, greedy_action, mean_abs_bellman_error, rbfq,
    rrt_baseline, sample_trajectories, stream_rng, Checkpoint, LearnParams, QFunction, QKind, Trainer, Transition,
};
use gbql_core::rrt::{RelationalTree, TreeParams};

/// p1 --advance--> p2 --finish--> p3 (goal). Each position has one action,
/// of its own type, so one leaf per type represents Q exactly.
struct Chain {
    bias: LanguageBias,
    sizes: Vec<InstanceSize>,
}

impl Chain {
    fn new() -> Chain {
        let modes = vec![parse_mode("at(+pos)").unwrap()];
        let actions = vec![ActionDecl::new("advance", &["pos"]), ActionDecl::new("finish", &["pos"])];
        Chain {
            bias: LanguageBias::new(modes, actions).unwrap(),
            sizes: vec![InstanceSize::Blocks(2)],
        }
    }

    fn at(p: &str) -> State {
        State::from_facts([GroundAtom::new("at", &[p])])
    }

    fn position(state: &State) -> Option<String> {
        state.facts().first().map(|f| f.args[0].to_string())
    }
}

impl Domain for Chain {
    fn name(&self) -> &str {
        "chain"
    }

    fn bias(&self) -> &LanguageBias {
        &self.bias
    }

    fn sizes(&self, _phase: Phase) -> &[InstanceSize] {
        &self.sizes
    }

    fn initial_state_for(&self, _size: InstanceSize, _rng: &mut dyn RngCore) -> Result<State, DomainError> {
        Ok(Chain::at("p1"))
    }

    fn legal_actions(&self, state: &State) -> Vec<GroundAtom> {
        match Chain::position(state).as_deref() {
            Some("p1") => vec![GroundAtom::new("advance", &["p1"])],
            Some("p2") => vec![GroundAtom::new("finish", &["p2"])],
            _ => Vec::new(),
        }
    }

    fn step(&self, state: &State, action: &GroundAtom) -> Result<Step, DomainError> {
        if !self.legal_actions(state).contains(action) {
            return Err(DomainError::IllegalAction {
                action: action.to_string(),
                reason: "not available".into(),
            });
        }
        let next = if action.pred.as_str() == "advance" { Chain::at("p2") } else { Chain::at("p3") };
        Ok(Step {
            reward: self.reward(state, action, &next),
            terminal: self.is_goal(&next),
            next,
        })
    }

    fn reward(&self, _state: &State, _action: &GroundAtom, next: &State) -> f64 {
        if self.is_goal(next) {
            1.0
        } else {
            -0.2
        }
    }

    fn is_goal(&self, state: &State) -> bool {
        Chain::position(state).as_deref() == Some("p3")
    }

    fn optimal_steps(&self, state: &State, _budget: usize) -> Option<usize> {
        match Chain::position(state).as_deref() {
            Some("p1") => Some(2),
            Some("p2") => Some(1),
            _ => Some(0),
        }
    }

    fn enumerate_states(&self, _size: InstanceSize, _budget: usize) -> Result<Vec<State>, DomainError> {
        Ok(["p1", "p2", "p3"].map(Chain::at).to_vec())
    }

    fn check_invariants(&self, _state: &State) -> Result<(), DomainError> {
        Ok(())
    }
}

fn chain_transitions(d: &Chain) -> [Transition; 2] {
    let advance = GroundAtom::new("advance", &["p1"]);
    let finish = GroundAtom::new("finish", &["p2"]);
    let first = d.step(&Chain::at("p1"), &advance).unwrap();
    let second = d.step(&Chain::at("p2"), &finish).unwrap();
    [
        Transition {
            state: Chain::at("p1"),
            action: advance,
            reward: first.reward,
            next_state: first.next,
            terminal: first.terminal,
        },
        Transition {
            state: Chain::at("p2"),
            action: finish,
            reward: second.reward,
            next_state: second.next,
            terminal: second.terminal,
        },
    ]
}

/// A Q-function that is a constant per action type.
fn constant_q(values: &[(&str, f64)]) -> QFunction {
    let mut model = BoostedModel::new(1, TreeParams::default());
    for &(name, v) in values {
        model.push(RelationalTree::leaf(Predicate::new(name, 1), v, 1));
    }
    QFunction {
        kind: QKind::Gbql,
        model,
    }
}

fn chain_params() -> LearnParams {
    LearnParams {
        iterations: 5,
        trajectories: 3,
        alpha: 1.0,
        gamma: 0.9,
        tree: TreeParams {
            min_leaf: 1,
            ..TreeParams::default()
        },
        ..LearnParams::default()
    }
}

fn small_stack() -> Box<dyn Domain> {
    let cfg = DomainConfig {
        train: Some(vec![InstanceSize::Blocks(3)]),
        test: Some(vec![InstanceSize::Blocks(3)]),
        ..DomainConfig::default()
    };
    domain_by_name("stack", &cfg).unwrap()
}

fn stack_params(seed: u64) -> LearnParams {
    LearnParams {
        iterations: 4,
        stages: 3,
        seed,
        ..LearnParams::default()
    }
}

#[test]
fn target_and_residual_arithmetic() {
    let d = Chain::new();
    let [t, _] = chain_transitions(&d);
    let q = constant_q(&[("advance", 1.0), ("finish", 2.0)]);
    let target = bellman_target(&q, &d, &t, 0.9, 0.99);
    assert!((target - 1.702).abs() < 1e-12, "{target}");

    let q = constant_q(&[("advance", 1.0), ("finish", 1.0)]);
    let residual = bellman_residual(&q, &d, &t, 0.9);
    assert!((residual - -0.3).abs() < 1e-12, "{residual}");
}

#[test]
fn terminal_transitions_ignore_the_next_state() {
    let d = Chain::new();
    let [_, t] = chain_transitions(&d);
    assert!(t.terminal);
    let q = constant_q(&[("advance", 5.0), ("finish", 3.0)]);
    assert_eq!(bellman_target(&q, &d, &t, 1.0, 0.99), 1.0);
    assert_eq!(bellman_residual(&q, &d, &t, 0.99), 1.0 - 3.0);
}

#[test]
fn rbfq_residuals_shrink_on_the_chain() {
    let d = Chain::new();
    let transitions = chain_transitions(&d);
    let p = chain_params();
    let mut trainer = Trainer::new(&d, QKind::Rbfq, p.clone()).unwrap();
    let mut errors = vec![mean_abs_bellman_error(trainer.q(), &d, &transitions, p.gamma).unwrap()];
    while !trainer.is_done() {
        trainer.step().unwrap();
        errors.push(mean_abs_bellman_error(trainer.q(), &d, &transitions, p.gamma).unwrap());
    }
    for w in errors.windows(2) {
        assert!(w[1] < w[0] || w[1] < 1e-12, "{errors:?}");
    }
    assert!(*errors.last().unwrap() < 1e-12, "{errors:?}");
    // One tree per action type per iteration.
    assert_eq!(trainer.q().model.tree_count(), 2 * p.iterations);
}

#[test]
fn gbql_reaches_the_fixed_point_on_the_chain() {
    let d = Chain::new();
    let transitions = chain_transitions(&d);
    let (q, summaries) = gbql(&d, &chain_params()).unwrap();
    assert_eq!(summaries.len(), 5);
    assert!(mean_abs_bellman_error(&q, &d, &transitions, 0.9).unwrap() < 1e-12);
    assert!((q.value(&transitions[0].state, &transitions[0].action) - (-0.2 + 0.9)).abs() < 1e-12);
    assert!((q.value(&transitions[1].state, &transitions[1].action) - 1.0).abs() < 1e-12);
}

#[test]
fn one_iteration_fits_immediate_rewards() {
    let d = Chain::new();
    let p = LearnParams {
        iterations: 1,
        ..chain_params()
    };
    for run in [gbql, rbfq, rrt_baseline] {
        let (q, _) = run(&d, &p).unwrap();
        for t in chain_transitions(&d) {
            assert_eq!(q.value(&t.state, &t.action), t.reward);
        }
    }
}

#[test]
fn epsilon_one_is_uniform() {
    let actions: Vec<GroundAtom> = (0..10).map(|i| GroundAtom::new("pick", &[&format!("o{i}")])).collect();
    let q = constant_q(&[("pick", 0.0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut counts = [0usize; 10];
    let draws = 10_000;
    for _ in 0..draws {
        let a = epsilon_greedy_action(&q, &State::new(), &actions, 1.0, &mut rng).unwrap();
        counts[actions.iter().position(|x| *x == a).unwrap()] += 1;
    }
    let expected = draws as f64 / 10.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99.9% quantile of chi-square with 9 degrees of freedom.
    assert!(chi2 < 27.877, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn epsilon_zero_takes_the_argmax() {
    let q = constant_q(&[("advance", -1.0), ("finish", 4.0)]);
    let actions = vec![GroundAtom::new("advance", &["p1"]), GroundAtom::new("finish", &["p1"])];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let a = epsilon_greedy_action(&q, &Chain::at("p1"), &actions, 0.0, &mut rng).unwrap();
        assert_eq!(a, actions[1]);
    }
    assert_eq!(greedy_action(&q, &Chain::at("p1"), &actions).unwrap(), actions[1]);
}

#[test]
fn five_trajectories_end_at_goal_or_cap_and_repeat_under_a_seed() {
    let d = small_stack();
    let q = QFunction::new(QKind::Gbql);
    let draw = |seed| sample_trajectories(&q, d.as_ref(), 5, 1.0, &mut ChaCha8Rng::seed_from_u64(seed), 30).unwrap();
    let trajs = draw(8);
    assert_eq!(trajs.len(), 5);
    for t in &trajs {
        assert!(t.reached_goal() || t.len() == 30);
        assert!(!t.is_empty());
        for w in t.transitions.windows(2) {
            assert_eq!(w[0].next_state.canonical(), w[1].state.canonical());
            assert!(!w[0].terminal);
        }
    }
    assert_eq!(trajs, draw(8));
}

#[test]
fn replay_adds_a_tenth_of_the_fresh_transitions() {
    let d = small_stack();
    let mut trainer = Trainer::new(d.as_ref(), QKind::Gbql, stack_params(3)).unwrap();
    while !trainer.is_done() {
        let stored = trainer.buffer().len();
        let out = trainer.step().unwrap();
        let want = out.fresh / 10;
        assert_eq!(out.replayed, want.min(stored));
        assert_eq!(out.training_set.len(), out.fresh + out.replayed);
    }
}

#[test]
fn zero_replay_uses_fresh_transitions_only() {
    let d = small_stack();
    let p = LearnParams {
        replay_fraction: 0.0,
        ..stack_params(3)
    };
    let mut trainer = Trainer::new(d.as_ref(), QKind::Gbql, p).unwrap();
    while !trainer.is_done() {
        let out = trainer.step().unwrap();
        assert_eq!(out.replayed, 0);
        assert_eq!(out.training_set.len(), out.fresh);
    }
}

#[test]
fn replay_all_retrains_on_the_whole_buffer() {
    let d = small_stack();
    let p = LearnParams {
        replay_all: true,
        ..stack_params(5)
    };
    let mut trainer = Trainer::new(d.as_ref(), QKind::Gbql, p).unwrap();
    while !trainer.is_done() {
        let stored: Vec<Transition> = trainer.buffer().iter().cloned().collect();
        let out = trainer.step().unwrap();
        assert_eq!(out.replayed, stored.len());
        assert_eq!(&out.training_set[out.fresh..], stored.as_slice());
    }
}

#[test]
fn rrt_matches_single_stage_gbql() {
    let d = small_stack();
    let p = LearnParams {
        stages: 1,
        ..stack_params(11)
    };
    let (a, sa) = rrt_baseline(d.as_ref(), &p).unwrap();
    let (b, sb) = gbql(d.as_ref(), &p).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(sa, sb);
    // The RRT baseline ignores `stages` entirely.
    let (c, _) = rrt_baseline(d.as_ref(), &stack_params(11)).unwrap();
    assert_eq!(a.model, c.model);
}

#[test]
fn resuming_a_checkpoint_matches_an_uninterrupted_run() {
    let d = small_stack();
    for kind in [QKind::Gbql, QKind::Rbfq, QKind::Rrt] {
        let p = LearnParams {
            iterations: 5,
            ..stack_params(21)
        };
        let mut straight = Trainer::new(d.as_ref(), kind, p.clone()).unwrap();
        straight.run(|_, _| Ok::<_, gbql_core::qlearn::LearnError>(())).unwrap();

        let mut first = Trainer::new(d.as_ref(), kind, p.clone()).unwrap();
        for _ in 0..2 {
            first.step().unwrap();
        }
        let saved = Checkpoint::from_json(&first.checkpoint().to_json()).unwrap();
        let mut resumed = Trainer::resume(d.as_ref(), p.clone(), &saved).unwrap();
        assert_eq!(resumed.completed(), 2);
        assert_eq!(resumed.buffer(), first.buffer());
        while !resumed.is_done() {
            resumed.step().unwrap();
        }
        assert_eq!(resumed.q(), straight.q(), "{kind:?}");

        let wrong = LearnParams { seed: 22, ..p };
        assert!(Trainer::resume(d.as_ref(), wrong, &saved).is_err());
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    let d = small_stack();
    let bad = [
        LearnParams { alpha: 0.0, ..LearnParams::default() },
        LearnParams { gamma: 1.0, ..LearnParams::default() },
        LearnParams { epsilon: 1.5, ..LearnParams::default() },
        LearnParams { stages: 0, ..LearnParams::default() },
        LearnParams { trajectories: 0, ..LearnParams::default() },
        LearnParams { replay_fraction: -0.1, ..LearnParams::default() },
    ];
    for p in bad {
        assert!(Trainer::new(d.as_ref(), QKind::Gbql, p).is_err());
    }
}

fn all_pairs(d: &dyn Domain) -> Vec<(State, GroundAtom)> {
    d.enumerate_states(InstanceSize::Blocks(3), 1000)
        .unwrap()
        .into_iter()
        .flat_map(|s| d.legal_actions(&s).into_iter().map(move |a| (s.clone(), a)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn unit_alpha_zero_gamma_targets_are_rewards(seed in any::<u64>()) {
        let d = small_stack();
        let (q, _) = gbql(d.as_ref(), &LearnParams { iterations: 2, ..stack_params(seed) }).unwrap();
        let mut rng = stream_rng(seed, 99, 0);
        for traj in sample_trajectories(&q, d.as_ref(), 3, 1.0, &mut rng, 10).unwrap() {
            for t in &traj.transitions {
                prop_assert_eq!(bellman_target(&q, d.as_ref(), t, 1.0, 0.0), t.reward);
            }
        }
    }

    #[test]
    fn runs_are_pure_functions_of_their_seed(seed in any::<u64>(), kind in prop_oneof![Just(QKind::Gbql), Just(QKind::Rbfq), Just(QKind::Rrt)]) {
        let d = small_stack();
        let p = stack_params(seed);
        let go = || {
            let mut t = Trainer::new(d.as_ref(), kind, p.clone()).unwrap();
            let mut sizes = Vec::new();
            while !t.is_done() {
                sizes.push(t.step().unwrap().training_set.len());
            }
            (t.q().to_bundle(), sizes)
        };
        prop_assert_eq!(go(), go());
    }

    #[test]
    fn gbql_keeps_only_the_latest_ensemble(seed in any::<u64>()) {
        let d = small_stack();
        let p = stack_params(seed);
        let mut t = Trainer::new(d.as_ref(), QKind::Gbql, p.clone()).unwrap();
        while !t.is_done() {
            t.step().unwrap();
            let q = t.q();
            for action in q.model.action_types() {
                prop_assert!(q.model.trees_for(action).len() <= p.stages);
            }
            let back = QFunction::from_bundle(&q.to_bundle()).unwrap();
            for (s, a) in all_pairs(d.as_ref()) {
                prop_assert_eq!(back.value(&s, &a), q.value(&s, &a));
            }
        }
    }

    #[test]
    fn rbfq_is_the_sum_of_its_trees(seed in any::<u64>()) {
        let d = small_stack();
        let mut t = Trainer::new(d.as_ref(), QKind::Rbfq, stack_params(seed)).unwrap();
        let pairs = all_pairs(d.as_ref());
        let mut previous: Vec<f64> = pairs.iter().map(|(s, a)| t.q().value(s, a)).collect();
        while !t.is_done() {
            t.step().unwrap();
            let q = t.q();
            for ((s, a), before) in pairs.iter().zip(&previous) {
                let trees = q.model.trees_for(a.predicate());
                let newest = trees.last().unwrap().predict(s, a).unwrap();
                let folded: f64 = trees.iter().map(|tr| tr.predict(s, a).unwrap()).sum();
                prop_assert_eq!(q.value(s, a), before + newest);
                prop_assert_eq!(q.value(s, a), folded);
            }
            previous = pairs.iter().map(|(s, a)| q.value(s, a)).collect();
        }
    }
}
