use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ci_half_width, trial_seeds, ExperimentSpec};
use crate::error::{Error, Result};
use crate::inference::{solve_online, WalkConfig};
use crate::oma::OmaState;
use crate::partition::{Assignment, PartitionSpec};
use crate::simulator::{Environment, Stream};

/// Solver names used in result files.
pub const BN_EPP: &str = "bn-epp";
pub const OMA: &str = "oma";

/// Correctness of both solvers at every checkpoint of one trial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub stream_digest: u64,
    pub bn_epp: Vec<bool>,
    pub oma: Vec<bool>,
}

/// One CSV row of an accuracy curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub solver: String,
    pub t: usize,
    pub p_true: f64,
    pub problem: String,
    pub success_rate: f64,
    pub ci_half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCurve {
    pub rows: Vec<AccuracyRow>,
    pub trials: Vec<TrialOutcome>,
}

impl AccuracyCurve {
    pub fn rate(&self, solver: &str, t: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.solver == solver && r.t == t).map(|r| r.success_rate)
    }

    pub fn row(&self, solver: &str, t: usize) -> Option<&AccuracyRow> {
        self.rows.iter().find(|r| r.solver == solver && r.t == t)
    }
}

/// Folds the stream into the automaton, scoring it at each checkpoint.
/// Also returns the digest of the requests it consumed.
pub(crate) fn oma_trace(
    stream: &Stream,
    checkpoints: &[usize],
    depth: usize,
    spec: &PartitionSpec,
    truth: &Assignment,
) -> Result<(Vec<bool>, u64)> {
    let mut state = OmaState::new(spec, depth)?;
    let mut consumed = Vec::with_capacity(stream.len());
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for &t in checkpoints {
        while next < t {
            let (i, j) = stream.requests()[next];
            state.step(i, j)?;
            consumed.push((i, j));
            next += 1;
        }
        out.push(state.answer().equivalent_up_to_relabeling(truth)?);
    }
    Ok((out, Stream::new(stream.objects(), consumed)?.digest()))
}

/// Runs BN-EPP and the automaton on identical simulated streams and
/// reports the fraction of trials each recovers the truth (up to
/// relabeling) at every checkpoint.
pub fn run_accuracy_experiment(spec: &ExperimentSpec) -> Result<AccuracyCurve> {
    spec.validate()?;
    let problem = spec.problem()?;
    let om = spec.observation_model(problem.spec());
    let grid = om.grid();
    let horizon = spec.checkpoints.last().copied().unwrap_or(0);
    let run_oma = problem.spec().is_equi() && problem.is_unconstrained();

    let trials: Vec<TrialOutcome> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialOutcome> {
            let (env_seed, solver_seed) = trial_seeds(spec.seed, trial);
            let mut env = Environment::random(&problem, spec.p_true, env_seed)?;
            let stream = env.stream(horizon);
            let cfg = WalkConfig { seed: solver_seed, ..spec.walk.clone() };
            let mut consumed = Vec::with_capacity(horizon);
            let results = solve_online(
                &problem,
                &om,
                &grid,
                stream.requests().iter().copied().inspect(|&r| consumed.push(r)),
                &spec.checkpoints,
                &cfg,
            )?;
            let bn_digest = Stream::new(stream.objects(), consumed)?.digest();
            let bn_epp = results
                .iter()
                .map(|c| c.result.assignment.equivalent_up_to_relabeling(env.truth()))
                .collect::<Result<Vec<_>>>()?;
            let oma = if run_oma {
                let (hits, digest) = oma_trace(&stream, &spec.checkpoints, spec.oma_depth, problem.spec(), env.truth())?;
                if digest != bn_digest || digest != stream.digest() {
                    return Err(Error::DomainError(format!("trial {trial}: solvers saw different streams")));
                }
                hits
            } else {
                Vec::new()
            };
            Ok(TrialOutcome { trial, stream_digest: stream.digest(), bn_epp, oma })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = trials.len();
    let mut rows = Vec::new();
    let mut push = |solver: &str, pick: &dyn Fn(&TrialOutcome) -> &Vec<bool>| {
        for (c, &t) in spec.checkpoints.iter().enumerate() {
            let hits = trials.iter().filter(|o| pick(o)[c]).count();
            let q = hits as f64 / n as f64;
            rows.push(AccuracyRow {
                solver: solver.to_string(),
                t,
                p_true: spec.p_true,
                problem: spec.problem_label(),
                success_rate: q,
                ci_half_width: ci_half_width(q, n),
            });
        }
    };
    push(BN_EPP, &|o| &o.bn_epp);
    if run_oma {
        push(OMA, &|o| &o.oma);
    }
    Ok(AccuracyCurve { rows, trials })
}
