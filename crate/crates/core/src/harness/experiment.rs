use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::domains::Domain;
use crate::qlearn::{mean_abs_bellman_error, read_trajectories, stream_rng, Trainer, Trajectory, EVAL_STREAM};

use super::{evaluate_policy, ConfigError, RunConfig};

pub const CSV_HEADER: &str = "seed,iteration,mean_abs_bellman_error,avg_test_reward,pct_goals,elapsed_ms";
pub const AGGREGATE_HEADER: &str = "iteration,runs,mean_abs_bellman_error_mean,mean_abs_bellman_error_std,\
avg_test_reward_mean,avg_test_reward_std,pct_goals_mean,pct_goals_std";

#[derive(Clone, Debug, PartialEq)]
pub struct IterationMetrics {
    pub seed: u64,
    pub iteration: usize,
    /// Absent when the iteration's training set was empty.
    pub mean_abs_bellman_error: Option<f64>,
    pub avg_test_reward: f64,
    pub pct_goals: f64,
    pub elapsed_ms: u128,
}

impl IterationMetrics {
    pub fn csv_row(&self) -> String {
        let err = self.mean_abs_bellman_error.map(|e| format!("{e:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{:.6},{:.6},{}",
            self.seed, self.iteration, err, self.avg_test_reward, self.pct_goals, self.elapsed_ms
        )
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub per_seed: Vec<Vec<IterationMetrics>>,
    pub seed_files: Vec<PathBuf>,
    pub aggregate_file: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> crate::Error + '_ {
    move |source| {
        ConfigError::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    }
}

/// Runs every seed of `cfg` and writes per-seed and aggregate CSVs.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentReport, crate::Error> {
    cfg.validate()?;
    let domain = cfg.build_domain()?;
    let expert = match &cfg.expert_trajectories {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            read_trajectories(&text, domain.as_ref())?
        }
        None => Vec::new(),
    };
    std::fs::create_dir_all(&cfg.output).map_err(io_err(&cfg.output))?;
    let results: Vec<(Vec<IterationMetrics>, PathBuf)> = (0..cfg.runs)
        .into_par_iter()
        .map(|k| run_seed(cfg, k, domain.as_ref(), &expert))
        .collect::<Result<_, _>>()?;
    let (per_seed, seed_files): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let aggregate_file = cfg.output.join(format!("{}_aggregate.csv", cfg.file_stem()));
    write_aggregate_csv(&aggregate_file, &per_seed)?;
    Ok(ExperimentReport {
        per_seed,
        seed_files,
        aggregate_file,
    })
}

/// One seed's full run. Each CSV row is flushed before the next iteration
/// starts.
pub fn run_seed(
    cfg: &RunConfig,
    k: usize,
    domain: &dyn Domain,
    expert: &[Trajectory],
) -> Result<(Vec<IterationMetrics>, PathBuf), crate::Error> {
    let params = cfg.params_for_run(k);
    let seed = params.seed;
    let stem = format!("{}_seed{}", cfg.file_stem(), seed);
    let csv_path = cfg.output.join(format!("{stem}.csv"));
    let ckpt_path = cfg.output.join(format!("{stem}.checkpoint.json"));
    let model_path = cfg.output.join(format!("{stem}.model"));
    let mut csv = BufWriter::new(File::create(&csv_path).map_err(io_err(&csv_path))?);
    writeln!(csv, "{CSV_HEADER}").and_then(|_| csv.flush()).map_err(io_err(&csv_path))?;
    let gamma = params.gamma;
    let max_steps = params.max_episode_steps;
    let mut trainer = Trainer::new(domain, cfg.algorithm, params)?.with_expert(expert);
    let mut rows = Vec::new();
    let mut clock = Instant::now();
    trainer.run(|t, out| -> Result<(), crate::Error> {
        let err = mean_abs_bellman_error(t.q(), domain, &out.training_set, gamma);
        let mut rng = stream_rng(seed, out.iteration, EVAL_STREAM);
        let score = evaluate_policy(t.q(), domain, cfg.test_trajectories, &mut rng, max_steps, cfg.goal_slack)?;
        let elapsed_ms = if cfg.record_timing { clock.elapsed().as_millis() } else { 0 };
        let row = IterationMetrics {
            seed,
            iteration: out.iteration,
            mean_abs_bellman_error: err,
            avg_test_reward: score.avg_reward,
            pct_goals: score.pct_goals,
            elapsed_ms,
        };
        writeln!(csv, "{}", row.csv_row()).and_then(|_| csv.flush()).map_err(io_err(&csv_path))?;
        if cfg.checkpoint {
            std::fs::write(&ckpt_path, t.checkpoint().to_json()).map_err(io_err(&ckpt_path))?;
        }
        rows.push(row);
        clock = Instant::now();
        Ok(())
    })?;
    std::fs::write(&model_path, trainer.q().to_bundle()).map_err(io_err(&model_path))?;
    Ok((rows, csv_path))
}

/// Mean and sample standard deviation; the deviation is 0 for one value.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

/// `0.82(±0.11)`.
pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.2}(±{std:.2})")
}

/// Aggregate CSV rows, one per iteration present in every seed.
pub fn aggregate(per_seed: &[Vec<IterationMetrics>]) -> Vec<String> {
    let iterations = per_seed.iter().map(Vec::len).min().unwrap_or(0);
    let cell = |v: Option<(f64, f64)>| v.map_or_else(|| ",".to_string(), |(m, s)| format!("{m:.6},{s:.6}"));
    (0..iterations)
        .map(|i| {
            let rows: Vec<&IterationMetrics> = per_seed.iter().map(|r| &r[i]).collect();
            let errs: Vec<f64> = rows.iter().filter_map(|r| r.mean_abs_bellman_error).collect();
            let rewards: Vec<f64> = rows.iter().map(|r| r.avg_test_reward).collect();
            let pcts: Vec<f64> = rows.iter().map(|r| r.pct_goals).collect();
            format!(
                "{},{},{},{},{}",
                rows[0].iteration,
                rows.len(),
                cell(mean_std(&errs)),
                cell(mean_std(&rewards)),
                cell(mean_std(&pcts))
            )
        })
        .collect()
}

pub fn write_aggregate_csv(path: &Path, per_seed: &[Vec<IterationMetrics>]) -> Result<(), crate::Error> {
    let mut text = format!("{AGGREGATE_HEADER}\n");
    for row in aggregate(per_seed) {
        text.push_str(&row);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_cell_format() {
        assert_eq!(format_mean_std(0.8213, 0.1149), "0.82(±0.11)");
    }

    #[test]
    fn single_run_has_zero_std() {
        assert_eq!(mean_std(&[0.4]), Some((0.4, 0.0)));
        let (m, s) = mean_std(&[1.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn csv_row_leaves_absent_error_empty() {
        let row = IterationMetrics {
            seed: 3,
            iteration: 1,
            mean_abs_bellman_error: None,
            avg_test_reward: -1.5,
            pct_goals: 0.5,
            elapsed_ms: 0,
        };
        assert_eq!(row.csv_row(), "3,1,,-1.500000,0.500000,0");
    }
}
