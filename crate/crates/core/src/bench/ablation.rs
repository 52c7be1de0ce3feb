use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ci_half_width, trial_seeds, ExperimentSpec};
use crate::error::Result;
use crate::inference::{solve, InitStrategy, WalkConfig};
use crate::rng::derive_path;
use crate::simulator::Environment;

/// Grid of the walk ablation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    /// Requests observed before solving.
    pub observations: usize,
    /// Include a row starting from a prior draw.
    pub include_random: bool,
    /// One likelihood-weighted row per sample count.
    pub init_samples: Vec<usize>,
    pub walk_steps: Vec<usize>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            observations: 100,
            include_random: true,
            init_samples: vec![50, 250],
            walk_steps: vec![50, 100, 500, 1000, 2000, 4000],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    /// `random` or `lw`.
    pub init: String,
    /// Samples per object (0 for `random`).
    pub samples: usize,
    pub steps: usize,
    pub success_rate: f64,
    pub ci_half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub cells: Vec<AblationCell>,
}

impl AblationTable {
    pub fn rate(&self, init: &str, samples: usize, steps: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.init == init && c.samples == samples && c.steps == steps)
            .map(|c| c.success_rate)
    }

    /// Success rates of one row in increasing step order.
    pub fn row(&self, init: &str, samples: usize) -> Vec<&AblationCell> {
        let mut row: Vec<&AblationCell> =
            self.cells.iter().filter(|c| c.init == init && c.samples == samples).collect();
        row.sort_by_key(|c| c.steps);
        row
    }
}

/// Success probability of initialization + walk for each (init, steps)
/// cell, on `observations` requests. Every cell gets its own solver seed.
pub fn run_walk_ablation(spec: &ExperimentSpec) -> Result<AblationTable> {
    spec.validate()?;
    let problem = spec.problem()?;
    let om = spec.observation_model(problem.spec());
    let grid = om.grid();
    let ab = &spec.ablation;

    let mut rows: Vec<(InitStrategy, usize)> = Vec::new();
    if ab.include_random {
        rows.push((InitStrategy::Prior, 0));
    }
    rows.extend(ab.init_samples.iter().map(|&s| (InitStrategy::LikelihoodWeighted, s)));

    let hits: Vec<Vec<bool>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<bool>> {
            let (env_seed, _) = trial_seeds(spec.seed, trial);
            let mut env = Environment::random(&problem, spec.p_true, env_seed)?;
            let counts = env.stream(ab.observations).counts();
            let mut out = Vec::with_capacity(rows.len() * ab.walk_steps.len());
            for (r, &(init, samples)) in rows.iter().enumerate() {
                for (s, &steps) in ab.walk_steps.iter().enumerate() {
                    let cfg = WalkConfig {
                        init,
                        init_samples: samples.max(1),
                        steps,
                        record_trace: false,
                        seed: derive_path(spec.seed, &[trial as u64, 1, r as u64, s as u64]),
                        ..spec.walk.clone()
                    };
                    let result = solve(&problem, &om, &counts, &grid, &cfg)?;
                    out.push(result.assignment.equivalent_up_to_relabeling(env.truth())?);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = spec.trials;
    let mut cells = Vec::new();
    for (r, &(init, samples)) in rows.iter().enumerate() {
        for (s, &steps) in ab.walk_steps.iter().enumerate() {
            let idx = r * ab.walk_steps.len() + s;
            let q = hits.iter().filter(|h| h[idx]).count() as f64 / n as f64;
            cells.push(AblationCell {
                init: match init {
                    InitStrategy::Prior => "random".into(),
                    InitStrategy::LikelihoodWeighted => "lw".into(),
                },
                samples,
                steps,
                success_rate: q,
                ci_half_width: ci_half_width(q, n),
            });
        }
    }
    Ok(AblationTable { cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_every_cell() {
        let spec = ExperimentSpec {
            objects: 6,
            partitions: 2,
            p_true: 0.9,
            trials: 10,
            ablation: AblationConfig {
                observations: 60,
                include_random: true,
                init_samples: vec![5],
                walk_steps: vec![0, 200],
            },
            ..ExperimentSpec::default()
        };
        let table = run_walk_ablation(&spec).unwrap();
        assert_eq!(table.cells.len(), 4);
        assert_eq!(table.row("lw", 5).len(), 2);
        assert!(table.rate("random", 0, 200).unwrap() >= 0.5);
    }
}
