use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{trial_seeds, ExperimentSpec};
use crate::error::Result;
use crate::inference::{solve_online, WalkConfig};
use crate::model::noise_posterior;
use crate::simulator::Environment;

/// Noise posterior at the current MAP assignment for one trial and checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub trial: usize,
    pub t: usize,
    pub mean: f64,
    pub mode: f64,
    /// Posterior probability of each grid point.
    pub weights: Vec<f64>,
}

/// Aggregate over trials at one checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub t: usize,
    pub p_true: f64,
    pub mean_of_means: f64,
    /// Fraction of trials whose mode is within the tolerance of `p_true`.
    pub mode_hit_rate: f64,
    /// Largest `|sum(weights) - 1|` seen.
    pub max_normalization_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseTracking {
    pub summary: Vec<NoiseSummary>,
    pub rows: Vec<NoiseRow>,
}

impl NoiseTracking {
    pub fn at(&self, t: usize) -> Option<&NoiseSummary> {
        self.summary.iter().find(|s| s.t == t)
    }

    /// Per-trial rows as CSV: `trial,t,mean,mode,w0,...,wN`.
    pub fn write_rows_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let width = self.rows.first().map_or(0, |r| r.weights.len());
        let mut header: Vec<String> = ["trial", "t", "mean", "mode"].iter().map(|s| s.to_string()).collect();
        header.extend((0..width).map(|k| format!("w{k}")));
        writer.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.trial.to_string(), row.t.to_string(), row.mean.to_string(), row.mode.to_string()];
            rec.extend(row.weights.iter().map(f64::to_string));
            writer.write_record(&rec)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Tracks the noise posterior at the solver's MAP assignment over checkpoints.
pub fn run_noise_tracking(spec: &ExperimentSpec) -> Result<NoiseTracking> {
    spec.validate()?;
    let problem = spec.problem()?;
    let om = spec.observation_model(problem.spec());
    let grid = om.grid();
    let horizon = spec.checkpoints.last().copied().unwrap_or(0);

    let per_trial: Vec<Vec<NoiseRow>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<NoiseRow>> {
            let (env_seed, solver_seed) = trial_seeds(spec.seed, trial);
            let mut env = Environment::random(&problem, spec.p_true, env_seed)?;
            let stream = env.stream(horizon);
            let cfg = WalkConfig { seed: solver_seed, ..spec.walk.clone() };
            let results =
                solve_online(&problem, &om, &grid, stream.requests().iter().copied(), &spec.checkpoints, &cfg)?;
            Ok(results
                .iter()
                .map(|c| {
                    let post = noise_posterior(&problem, &om, &c.result.assignment, &stream.counts_at(c.t), &grid);
                    NoiseRow { trial, t: c.t, mean: post.mean(), mode: post.mode(), weights: post.probabilities() }
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<NoiseRow> = per_trial.into_iter().flatten().collect();

    let n = spec.trials as f64;
    let summary = spec
        .checkpoints
        .iter()
        .map(|&t| {
            let at: Vec<&NoiseRow> = rows.iter().filter(|r| r.t == t).collect();
            NoiseSummary {
                t,
                p_true: spec.p_true,
                mean_of_means: at.iter().map(|r| r.mean).sum::<f64>() / n,
                mode_hit_rate: at
                    .iter()
                    .filter(|r| (r.mode - spec.p_true).abs() <= spec.noise_tolerance + 1e-12)
                    .count() as f64
                    / n,
                max_normalization_error: at
                    .iter()
                    .map(|r| (r.weights.iter().sum::<f64>() - 1.0).abs())
                    .fold(0.0, f64::max),
            }
        })
        .collect();
    Ok(NoiseTracking { summary, rows })
}
