//! Ensemble experiments: accuracy curves, noise tracking, walk ablation and
//! the warehouse study.
//!
//! Trials run in parallel on the current rayon pool. Trial `k` draws every
//! random decision from seeds derived from `(seed, k)`, and results are
//! collected in trial order, so output does not depend on the pool size.

mod ablation;
mod accuracy;
mod noise;
mod warehouse;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constraints::Problem;
use crate::error::{Error, Result};
use crate::inference::WalkConfig;
use crate::model::{NoiseSupport, ObservationModel};
use crate::noise::DEFAULT_RESOLUTION;
use crate::oma::DEFAULT_DEPTH;
use crate::partition::PartitionSpec;
use crate::rules::RuleFile;

pub use ablation::{run_walk_ablation, AblationCell, AblationConfig, AblationTable};
pub use accuracy::{run_accuracy_experiment, AccuracyCurve, AccuracyRow, TrialOutcome};
pub use noise::{run_noise_tracking, NoiseRow, NoiseSummary, NoiseTracking};
pub use warehouse::{run_warehouse, sign_test_p, warehouse_transactions, Repetition, SolverCost, WarehouseReport, WarehouseSpec};

/// Supported config schema version.
pub const CONFIG_VERSION: u32 = 1;

/// What [`ExperimentSpec`] asks for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    Accuracy,
    NoiseTracking,
    WalkAblation,
}

/// A simulated-ensemble experiment, loadable from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub version: u32,
    pub kind: ExperimentKind,
    pub name: String,
    pub objects: usize,
    pub partitions: usize,
    /// Per-partition capacities; equal sizes when omitted.
    pub capacities: Option<Vec<usize>>,
    /// Constraint-file lines with object and partition indices.
    pub rules: Vec<String>,
    pub p_true: f64,
    pub trials: usize,
    pub checkpoints: Vec<usize>,
    pub seed: u64,
    pub resolution: usize,
    pub noise_support: NoiseSupport,
    pub oma_depth: usize,
    pub walk: WalkConfig,
    /// Half-width of the window counted as a hit when tracking the noise mode.
    pub noise_tolerance: f64,
    pub ablation: AblationConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            kind: ExperimentKind::Accuracy,
            name: String::new(),
            objects: 4,
            partitions: 2,
            capacities: None,
            rules: Vec::new(),
            p_true: 0.6,
            trials: 1000,
            checkpoints: vec![10, 50],
            seed: 1,
            resolution: DEFAULT_RESOLUTION,
            noise_support: NoiseSupport::AboveChance,
            oma_depth: DEFAULT_DEPTH,
            walk: WalkConfig::default(),
            noise_tolerance: 0.05,
            ablation: AblationConfig::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!("unsupported config version {}", self.version)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("checkpoints must be strictly ascending".into()));
        }
        if !(0.0..=1.0).contains(&self.p_true) {
            return Err(Error::Config(format!("p_true {} outside [0, 1]", self.p_true)));
        }
        if self.resolution == 0 || self.oma_depth == 0 {
            return Err(Error::Config("resolution and oma_depth must be positive".into()));
        }
        self.walk.validate()
    }

    pub fn partition_spec(&self) -> Result<PartitionSpec> {
        match &self.capacities {
            Some(c) => {
                if c.len() != self.partitions || c.iter().sum::<usize>() != self.objects {
                    return Err(Error::Config("capacities disagree with objects/partitions".into()));
                }
                PartitionSpec::new(c.clone())
            }
            None => PartitionSpec::equi(self.objects, self.partitions),
        }
    }

    pub fn problem(&self) -> Result<Problem> {
        let cons = RuleFile::parse(&self.rules.join("\n"))?.resolve(None)?;
        Problem::new(self.partition_spec()?, cons)
    }

    pub fn observation_model(&self, spec: &PartitionSpec) -> ObservationModel {
        ObservationModel::new(spec).with_resolution(self.resolution).with_support(self.noise_support)
    }

    /// Short problem label such as `r3w9`.
    pub fn problem_label(&self) -> String {
        format!("r{}w{}", self.partitions, self.objects)
    }
}

/// Binomial 95% half-width `1.96 sqrt(q (1 - q) / n)`.
pub fn ci_half_width(q: f64, n: usize) -> f64 {
    1.96 * (q * (1.0 - q) / n as f64).sqrt()
}

/// Writes serializable rows as CSV with a header.
pub fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Seeds shared by the experiments: trial `k` uses `derive_seed(seed, k)`
/// for its environment and `derive_path(seed, [k, 1])` for the solver.
pub(crate) fn trial_seeds(seed: u64, trial: usize) -> (u64, u64) {
    let env = crate::rng::derive_seed(seed, trial as u64);
    (env, crate::rng::derive_path(seed, &[trial as u64, 1]))
}
