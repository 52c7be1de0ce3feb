//! MAP solvers over assignments and the noise grid.
//!
//! * [`exact_map`] enumerates every class (small instances only).
//! * [`lw_initialize`] builds a starting assignment object by object,
//!   sampling each label from a likelihood-weighted posterior estimate.
//! * [`walk`] improves an assignment with random swaps, keeping worse
//!   configurations only with probability epsilon.
//! * [`solve_online`] runs initialization and walk at checkpoints of a
//!   request stream.

mod exact;
mod lw;
mod online;
mod walk;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::partition::Assignment;

pub use exact::{exact_map, DEFAULT_ORACLE_CAP};
pub use lw::lw_initialize;
pub use online::{solve, solve_online, CheckpointResult};
pub use walk::{walk, MassTracker};

/// How the walk's starting point is produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Likelihood-weighted sampling, `init_samples` samples per object.
    #[default]
    LikelihoodWeighted,
    /// One draw from the prior, ignoring the evidence.
    Prior,
}

/// Parameters of initialization and walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    /// Probability of keeping a configuration that scores worse.
    pub epsilon: f64,
    /// Number of swap proposals.
    pub steps: usize,
    /// Likelihood-weighted samples per object.
    pub init_samples: usize,
    pub init: InitStrategy,
    /// Maximize the noise value at every step instead of holding the
    /// initial estimate fixed.
    pub reestimate_noise: bool,
    pub record_trace: bool,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            steps: 5000,
            init_samples: 250,
            init: InitStrategy::LikelihoodWeighted,
            reestimate_noise: true,
            record_trace: false,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(crate::Error::Config(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        if self.init_samples == 0 {
            return Err(crate::Error::Config("init_samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// One walk step: the proposed swap, its score and whether it was kept.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub score: f64,
    pub accepted: bool,
    pub swap_i: usize,
    pub swap_j: usize,
}

/// A solver's answer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub assignment: Assignment,
    /// Maximizing grid value of the noise parameter.
    pub p_hat: f64,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceRecord>>,
}

impl SolveResult {
    /// Trace as CSV: `step,score,accepted,swap_i,swap_j`.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for record in self.trace.iter().flatten() {
            writer.serialize(record)?;
        }
        writer.flush()?;
        Ok(())
    }
}
