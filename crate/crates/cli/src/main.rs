use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gbql_core::domains::{domain_by_name, expert_trajectory, parse_sizes, DomainConfig, Phase};
use gbql_core::harness::{
    evaluate_policy, format_mean_std, ground_mdp, run_experiment, tabular_value_iteration, RunConfig, SEARCH_BUDGET,
};
use gbql_core::qlearn::{write_trajectories, QFunction, QKind};

#[derive(Parser)]
#[command(name = "gbql", version, about = "Relational fitted Q-learning with boosted regression trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured algorithm (gbql, rbfq or rrt).
        #[arg(long)]
        algorithm: Option<String>,
        #[arg(long)]
        seed_base: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print exact Q-values and optimal step counts for a small instance,
    /// or expert trajectories with `--expert`.
    Oracle {
        #[arg(long)]
        domain: String,
        /// Instance size: `3` for blocks, `2/1/1` for logistics.
        #[arg(long)]
        counts: String,
        #[arg(long, default_value_t = 0.99)]
        gamma: f64,
        /// Emit this many expert trajectories from random start states.
        #[arg(long)]
        expert: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
    },
    /// Evaluate a saved model greedily on test instances.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        domain: String,
        #[arg(long)]
        episodes: usize,
        /// Test sizes, e.g. `6,7` or `7/3/5`; domain defaults otherwise.
        #[arg(long)]
        counts: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        max_steps: usize,
        #[arg(long, default_value_t = 2)]
        goal_slack: usize,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            algorithm,
            seed_base,
            out,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(a) = algorithm {
                cfg.algorithm = QKind::parse(&a).with_context(|| format!("unknown algorithm `{a}`"))?;
            }
            if let Some(s) = seed_base {
                cfg.seed_base = s;
            }
            if let Some(o) = out {
                cfg.output = o;
            }
            let report = run_experiment(&cfg)?;
            for f in &report.seed_files {
                println!("wrote {}", f.display());
            }
            println!("wrote {}", report.aggregate_file.display());
            let last: Vec<f64> = report
                .per_seed
                .iter()
                .filter_map(|rows| rows.last().map(|r| r.pct_goals))
                .collect();
            if !last.is_empty() {
                let n = last.len() as f64;
                let mean = last.iter().sum::<f64>() / n;
                let std = if last.len() > 1 {
                    (last.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                println!("final pct_goals {}", format_mean_std(mean, std));
            }
            Ok(())
        }
        Command::Oracle {
            domain,
            counts,
            gamma,
            expert,
            seed,
            budget,
        } => {
            let sizes = parse_sizes(&counts)?;
            let [size] = sizes[..] else {
                bail!("oracle needs exactly one instance size, got `{counts}`");
            };
            let cfg = DomainConfig {
                train: Some(vec![size]),
                test: Some(vec![size]),
                ..DomainConfig::default()
            };
            let d = domain_by_name(&domain, &cfg)?;
            if let Some(n) = expert {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut trajs = Vec::with_capacity(n);
                for _ in 0..n {
                    let start = d.initial_state(Phase::Train, &mut rng)?;
                    trajs.push(expert_trajectory(d.as_ref(), &start, 100, SEARCH_BUDGET)?);
                }
                print!("{}", write_trajectories(&trajs));
                return Ok(());
            }
            let mdp = ground_mdp(d.as_ref(), size, budget)?;
            let table = tabular_value_iteration(&mdp, gamma, 1e-9, 1_000_000);
            let mut out = String::new();
            let _ = writeln!(out, "# {} {} states, gamma {gamma}, {} sweeps", domain, mdp.states.len(), table.sweeps);
            for (i, s) in mdp.states.iter().enumerate() {
                let opt = d
                    .optimal_steps(s, budget)
                    .map_or_else(|| "unknown".to_string(), |o| o.to_string());
                let _ = writeln!(out, "state {i} optimal {opt} value {:.9}", table.value(i));
                let facts: Vec<String> = s.facts().iter().map(ToString::to_string).collect();
                let _ = writeln!(out, "facts {}", facts.join(" "));
                for (e, q) in mdp.edges[i].iter().zip(&table.q[i]) {
                    let _ = writeln!(out, "q {} {q:.9}", e.action);
                }
            }
            print!("{out}");
            Ok(())
        }
        Command::Eval {
            model,
            domain,
            episodes,
            counts,
            seed,
            max_steps,
            goal_slack,
        } => {
            let text = std::fs::read_to_string(&model).with_context(|| format!("reading {}", model.display()))?;
            let q = QFunction::from_bundle(&text)?;
            let cfg = DomainConfig {
                test: counts.as_deref().map(parse_sizes).transpose()?,
                ..DomainConfig::default()
            };
            let d = domain_by_name(&domain, &cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let score = evaluate_policy(&q, d.as_ref(), episodes, &mut rng, max_steps, goal_slack)?;
            println!("episodes {episodes}");
            println!("avg_test_reward {:.6}", score.avg_reward);
            println!("pct_goals {:.6}", score.pct_goals);
            Ok(())
        }
    }
}
