use std::path::{Path, PathBuf};
use std::sync::Mutex;

use proptest::prelude::*;
use rand::RngCore;

use gbql_core::domains::{domain_by_name, Domain, DomainConfig, DomainError, InstanceSize, Phase, Step};
use gbql_core::harness::{
    ground_mdp, greedy_steps_to_goal, run_experiment, run_seed, score_episodes, tabular_value_iteration, ConfigError,
    RunConfig, AGGREGATE_HEADER, CSV_HEADER,
};
use gbql_core::harness::{Episode, SEARCH_BUDGET};
use gbql_core::logic::{GroundAtom, LanguageBias, State};
use gbql_core::qlearn::QKind;

fn tiny_config(algorithm: QKind, output: &Path) -> RunConfig {
    let text = format!(
        "algorithm = {}\ndomain = stack\nruns = 3\nseed_base = 5\niterations = 3\nboosting_stages = 2\n\
         train_counts = 3\ntest_counts = 4\ntest_trajectories = 4\n",
        algorithm.as_str()
    );
    let mut cfg = RunConfig::parse(&text, Path::new(".")).unwrap();
    cfg.output = output.to_path_buf();
    cfg
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn aggregate_is_the_mean_of_the_seed_files() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&tiny_config(QKind::Gbql, dir.path())).unwrap();
    assert_eq!(report.seed_files.len(), 3);
    let seeds: Vec<Vec<Vec<String>>> = report.seed_files.iter().map(|p| read_rows(p)).collect();
    for f in &report.seed_files {
        assert_eq!(std::fs::read_to_string(f).unwrap().lines().next(), Some(CSV_HEADER));
    }
    let agg_text = std::fs::read_to_string(&report.aggregate_file).unwrap();
    assert_eq!(agg_text.lines().next(), Some(AGGREGATE_HEADER));
    let agg = read_rows(&report.aggregate_file);
    assert_eq!(agg.len(), 3);
    for (i, row) in agg.iter().enumerate() {
        assert_eq!(row[0], (i + 1).to_string());
        assert_eq!(row[1], "3");
        // Columns 2, 3 and 4 of the seed files against mean columns 2, 4, 6.
        for (seed_col, agg_col) in [(2, 2), (3, 4), (4, 6)] {
            let values: Vec<f64> = seeds.iter().map(|s| s[i][seed_col].parse().unwrap()).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let got: f64 = row[agg_col].parse().unwrap();
            // Seed files are rounded to 6 decimals before averaging here.
            assert!((got - mean).abs() <= 1.5e-6, "{got} vs {mean}");
        }
    }
}

#[test]
fn experiment_output_is_reproducible_for_every_algorithm() {
    for kind in [QKind::Gbql, QKind::Rbfq, QKind::Rrt] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ra = run_experiment(&tiny_config(kind, a.path())).unwrap();
        let rb = run_experiment(&tiny_config(kind, b.path())).unwrap();
        assert_eq!(ra.per_seed, rb.per_seed);
        for (x, y) in ra.seed_files.iter().chain([&ra.aggregate_file]).zip(rb.seed_files.iter().chain([&rb.aggregate_file])) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{kind:?} {}", x.display());
        }
    }
}

#[test]
fn config_errors_stop_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let mut bad = tiny_config(QKind::Gbql, &out);
    bad.learn.alpha = 0.0;
    assert!(run_experiment(&bad).is_err());
    let mut missing = tiny_config(QKind::Gbql, &out);
    missing.expert_trajectories = Some(dir.path().join("absent.txt"));
    assert!(run_experiment(&missing).is_err());
    assert!(!out.exists());
}

#[test]
fn config_text_errors_name_the_problem() {
    let base = Path::new(".");
    assert!(matches!(RunConfig::parse("iterations 3", base), Err(ConfigError::Syntax { line: 1 })));
    assert!(matches!(RunConfig::parse("# c\nbogus = 1", base), Err(ConfigError::UnknownKey { line: 2, .. })));
    assert!(matches!(RunConfig::parse("runs = 1\nruns = 2", base), Err(ConfigError::Duplicate { line: 2, .. })));
    assert!(matches!(RunConfig::parse("alpha = high", base), Err(ConfigError::Value { .. })));
    assert!(matches!(RunConfig::parse("algorithm = sarsa", base), Err(ConfigError::Value { .. })));
    assert!(matches!(RunConfig::parse("domain = sokoban", base), Err(ConfigError::Invalid(_))));
    assert!(matches!(RunConfig::parse("gamma = 1.0", base), Err(ConfigError::Invalid(_))));
    let cfg = RunConfig::parse("output = out/x\nexpert_trajectories = e.txt", Path::new("/cfg")).unwrap();
    assert_eq!(cfg.output, PathBuf::from("/cfg/out/x"));
    assert_eq!(cfg.expert_trajectories, Some(PathBuf::from("/cfg/e.txt")));
}

/// Stack on three blocks that records, at each training start, how many
/// lines the seed's CSV holds.
struct Watched {
    inner: Box<dyn Domain>,
    csv: PathBuf,
    seen: Mutex<Vec<usize>>,
}

impl Domain for Watched {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn bias(&self) -> &LanguageBias {
        self.inner.bias()
    }
    fn sizes(&self, phase: Phase) -> &[InstanceSize] {
        self.inner.sizes(phase)
    }
    fn initial_state_for(&self, size: InstanceSize, rng: &mut dyn RngCore) -> Result<State, DomainError> {
        self.inner.initial_state_for(size, rng)
    }
    fn initial_state(&self, phase: Phase, rng: &mut dyn RngCore) -> Result<State, DomainError> {
        if phase == Phase::Train {
            let lines = std::fs::read_to_string(&self.csv).map_or(0, |t| t.lines().count());
            self.seen.lock().unwrap().push(lines);
        }
        self.inner.initial_state(phase, rng)
    }
    fn legal_actions(&self, state: &State) -> Vec<GroundAtom> {
        self.inner.legal_actions(state)
    }
    fn step(&self, state: &State, action: &GroundAtom) -> Result<Step, DomainError> {
        self.inner.step(state, action)
    }
    fn reward(&self, state: &State, action: &GroundAtom, next: &State) -> f64 {
        self.inner.reward(state, action, next)
    }
    fn is_goal(&self, state: &State) -> bool {
        self.inner.is_goal(state)
    }
    fn optimal_steps(&self, state: &State, budget: usize) -> Option<usize> {
        self.inner.optimal_steps(state, budget)
    }
    fn enumerate_states(&self, size: InstanceSize, budget: usize) -> Result<Vec<State>, DomainError> {
        self.inner.enumerate_states(size, budget)
    }
    fn check_invariants(&self, state: &State) -> Result<(), DomainError> {
        self.inner.check_invariants(state)
    }
}

#[test]
fn each_row_is_on_disk_before_the_next_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(QKind::Gbql, dir.path());
    let params = cfg.params_for_run(0);
    let csv = dir.path().join(format!("{}_seed{}.csv", cfg.file_stem(), params.seed));
    let watched = Watched {
        inner: cfg.build_domain().unwrap(),
        csv: csv.clone(),
        seen: Mutex::new(Vec::new()),
    };
    let (rows, path) = run_seed(&cfg, 0, &watched, &[]).unwrap();
    assert_eq!(path, csv);
    assert_eq!(rows.len(), params.iterations);
    let seen = watched.seen.into_inner().unwrap();
    let p = params.trajectories;
    let expected: Vec<usize> = (0..params.iterations).flat_map(|i| std::iter::repeat(1 + i).take(p)).collect();
    assert_eq!(seen, expected);
}

#[test]
fn value_iteration_converges_and_its_policy_is_shortest() {
    let tol = 1e-9;
    let cases: Vec<(&str, InstanceSize)> = vec![
        ("stack", InstanceSize::Blocks(3)),
        ("unstack", InstanceSize::Blocks(3)),
        ("logistics", InstanceSize::Logistics { cities: 2, trucks: 1, boxes: 2 }),
        ("logistics", InstanceSize::Logistics { cities: 2, trucks: 2, boxes: 1 }),
    ];
    for (name, size) in cases {
        let cfg = DomainConfig {
            train: Some(vec![size]),
            test: Some(vec![size]),
            ..DomainConfig::default()
        };
        let d = domain_by_name(name, &cfg).unwrap();
        let mdp = ground_mdp(d.as_ref(), size, SEARCH_BUDGET).unwrap();
        let table = tabular_value_iteration(&mdp, 0.99, tol, 100_000);
        assert!(table.bellman_residual(&mdp, 0.99) < 10.0 * tol, "{name}");
        for (i, s) in mdp.states.iter().enumerate() {
            assert_eq!(
                greedy_steps_to_goal(&mdp, &table, i, 50),
                d.optimal_steps(s, SEARCH_BUDGET),
                "{name} {size} state {i}"
            );
        }
    }
}

fn episode(steps: usize, reached_goal: bool, optimal: Option<usize>) -> Episode {
    Episode {
        total_reward: -(steps as f64),
        steps,
        reached_goal,
        optimal,
    }
}

#[test]
fn optimal_episodes_score_one_and_failures_zero() {
    let optimal: Vec<Episode> = (1..8).map(|k| episode(k, true, Some(k))).collect();
    assert_eq!(score_episodes(&optimal, 0, 50).pct_goals, 1.0);
    let lost: Vec<Episode> = (1..8).map(|k| episode(50, false, Some(k))).collect();
    assert_eq!(score_episodes(&lost, 2, 50).pct_goals, 0.0);
    assert_eq!(score_episodes(&[], 2, 50).pct_goals, 0.0);
}

#[test]
fn slack_bounds_success() {
    assert!(episode(5, true, Some(3)).success(2, 50));
    assert!(!episode(6, true, Some(3)).success(2, 50));
    // Unknown optimum falls back to the step cap.
    assert!(episode(40, true, None).success(2, 50));
    assert!(!episode(51, true, None).success(2, 50));
}

fn episode_strategy() -> impl Strategy<Value = Episode> {
    (0..30usize, any::<bool>(), proptest::option::of(0..20usize), -20.0..20.0f64).prop_map(|(steps, reached_goal, optimal, total_reward)| Episode {
        total_reward,
        steps,
        reached_goal,
        optimal,
    })
}

proptest! {
    #[test]
    fn scores_ignore_episode_order(mut eps in proptest::collection::vec(episode_strategy(), 1..20), slack in 0..4usize, rot in any::<usize>()) {
        let a = score_episodes(&eps, slack, 25);
        let len = eps.len();
        eps.rotate_left(rot % len);
        eps.reverse();
        let b = score_episodes(&eps, slack, 25);
        prop_assert_eq!(a.pct_goals, b.pct_goals);
        prop_assert!((a.avg_reward - b.avg_reward).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&a.pct_goals));
    }
}
