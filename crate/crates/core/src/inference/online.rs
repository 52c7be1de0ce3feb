use serde::{Deserialize, Serialize};

use super::walk::walk_with_rng;
use super::{lw_initialize, InitStrategy, SolveResult, WalkConfig};
use crate::constraints::Problem;
use crate::counts::PairCounts;
use crate::error::{Error, Result};
use crate::model::ObservationModel;
use crate::noise::NoiseGrid;
use crate::partition::Assignment;
use crate::prior::sample_prior;
use crate::rng::{derive_seed, rng_from_seed};

/// Solver output after the first `t` requests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointResult {
    pub t: usize,
    pub result: SolveResult,
}

/// Initialization followed by the walk, on fixed counts.
pub fn solve(
    problem: &Problem,
    om: &ObservationModel,
    counts: &PairCounts,
    grid: &NoiseGrid,
    cfg: &WalkConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    if counts.objects() != problem.objects() {
        return Err(Error::LengthMismatch { left: counts.objects(), right: problem.objects() });
    }
    let mut rng = rng_from_seed(cfg.seed);
    let init: Assignment = match cfg.init {
        InitStrategy::LikelihoodWeighted => lw_initialize(problem, om, counts, grid, cfg.init_samples, &mut rng),
        InitStrategy::Prior => sample_prior(problem, &mut rng),
    };
    Ok(walk_with_rng(problem, om, counts, grid, &init, cfg, &mut rng))
}

/// Folds `requests` into counts and solves at each checkpoint.
///
/// Checkpoints must be increasing and covered by the stream. Checkpoint
/// `c` is solved with seed `derive_seed(cfg.seed, c)`.
pub fn solve_online<I>(
    problem: &Problem,
    om: &ObservationModel,
    grid: &NoiseGrid,
    requests: I,
    checkpoints: &[usize],
    cfg: &WalkConfig,
) -> Result<Vec<CheckpointResult>>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DomainError("checkpoints must be strictly increasing".into()));
    }
    let mut counts = PairCounts::new(problem.objects());
    let mut requests = requests.into_iter();
    let mut seen = 0usize;
    let mut out = Vec::with_capacity(checkpoints.len());
    for (index, &t) in checkpoints.iter().enumerate() {
        while seen < t {
            let (i, j) = requests
                .next()
                .ok_or_else(|| Error::DomainError(format!("stream ended after {seen} requests, before checkpoint {t}")))?;
            counts.observe(i, j)?;
            seen += 1;
        }
        let cfg = WalkConfig { seed: derive_seed(cfg.seed, index as u64), ..cfg.clone() };
        out.push(CheckpointResult { t, result: solve(problem, om, &counts, grid, &cfg)? });
    }
    Ok(out)
}
