use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CONFIG_VERSION;
use crate::constraints::{ConstraintSet, Problem};
use crate::counts::PairCounts;
use crate::data::{
    mean_trip_cost, transactions_to_requests, warehouse_rule_file, FoldPlan, RequestMode, SyntheticBasketConfig,
    TransactionSet, WAREHOUSE_SECTIONS,
};
use crate::error::{Error, Result};
use crate::inference::{solve, WalkConfig};
use crate::model::{NoiseSupport, ObservationModel};
use crate::noise::DEFAULT_RESOLUTION;
use crate::oma::{OmaState, DEFAULT_DEPTH};
use crate::partition::PartitionSpec;
use crate::rng::{derive_path, derive_seed};
use crate::rules::RuleFile;

pub const BN_EPP_RULES: &str = "bn-epp-rules";
pub const BN_EPP_FREE: &str = "bn-epp";
pub const OMA_FREE: &str = "oma";

/// Settings of the warehouse study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WarehouseSpec {
    pub version: u32,
    pub name: String,
    pub repetitions: usize,
    pub folds: usize,
    pub sections: usize,
    pub request_mode: RequestMode,
    pub seed: u64,
    pub walk: WalkConfig,
    pub oma_depth: usize,
    pub resolution: usize,
    pub noise_support: NoiseSupport,
    /// Also run BN-EPP under the placement rules.
    pub with_rules: bool,
    /// Transactions file; the synthetic generator is used when absent.
    pub transactions: Option<String>,
    /// Constraint file with item names; the built-in warehouse rules when absent.
    pub constraints: Option<String>,
    pub synthetic: SyntheticBasketConfig,
    pub synthetic_seed: u64,
}

impl Default for WarehouseSpec {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            name: String::new(),
            repetitions: 1000,
            folds: 5,
            sections: WAREHOUSE_SECTIONS,
            request_mode: RequestMode::AllPairs,
            seed: 1,
            walk: WalkConfig { init_samples: 100, steps: 1000, ..WalkConfig::default() },
            oma_depth: DEFAULT_DEPTH,
            resolution: DEFAULT_RESOLUTION,
            noise_support: NoiseSupport::AboveChance,
            with_rules: true,
            transactions: None,
            constraints: None,
            synthetic: SyntheticBasketConfig::default(),
            synthetic_seed: 2012,
        }
    }
}

impl WarehouseSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!("unsupported config version {}", self.version)));
        }
        if self.repetitions == 0 || self.folds < 2 {
            return Err(Error::Config("need at least one repetition and two folds".into()));
        }
        self.walk.validate()
    }
}

/// Mean trip cost of each solver in one repetition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    pub repetition: usize,
    pub train_fold: usize,
    pub requests: usize,
    pub bn_epp_rules: Option<f64>,
    pub bn_epp: f64,
    pub oma: f64,
    /// Rules broken by the constrained solver's output.
    pub rule_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverCost {
    pub solver: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarehouseReport {
    pub summary: Vec<SolverCost>,
    pub repetitions: Vec<Repetition>,
}

impl WarehouseReport {
    pub fn cost(&self, solver: &str) -> Option<&SolverCost> {
        self.summary.iter().find(|s| s.solver == solver)
    }

    /// Paired sign test of unconstrained BN-EPP against OMA: repetitions
    /// where BN-EPP is cheaper, where it is dearer, and the one-sided
    /// p-value of seeing that many wins if both were equally good. Ties
    /// are dropped.
    pub fn sign_test(&self) -> (usize, usize, f64) {
        let wins = self.repetitions.iter().filter(|r| r.bn_epp < r.oma).count();
        let losses = self.repetitions.iter().filter(|r| r.bn_epp > r.oma).count();
        (wins, losses, sign_test_p(wins, losses))
    }
}

/// `P(X >= wins)` for `X ~ Binomial(wins + losses, 1/2)`.
pub fn sign_test_p(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let ln_half_n = -(n as f64) * std::f64::consts::LN_2;
    let mut ln_choose = 0.0; // ln C(n, 0)
    let mut terms = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            ln_choose += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        if k >= wins {
            terms.push(ln_choose + ln_half_n);
        }
    }
    crate::noise::log_sum_exp(&terms).exp().min(1.0)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Trains every solver on one fold per repetition and scores the mean trip
/// cost of the remaining transactions.
pub fn run_warehouse(spec: &WarehouseSpec, ts: &TransactionSet, rules: Option<&RuleFile>) -> Result<WarehouseReport> {
    spec.validate()?;
    let items = ts.items().len();
    if spec.sections < 2 {
        return Err(Error::DegenerateEnvironment(format!(
            "{} section(s): every placement has the same trip cost",
            spec.sections
        )));
    }
    if !items.is_multiple_of(spec.sections) {
        return Err(Error::UnsupportedSpec(format!("{items} items do not split evenly into {} sections", spec.sections)));
    }
    let pspec = PartitionSpec::equi(items, spec.sections)?;
    let free = Problem::unconstrained(pspec.clone());
    let constrained = if spec.with_rules {
        let default_rules;
        let file = match rules {
            Some(f) => f,
            None => {
                default_rules = warehouse_rule_file(items / spec.sections);
                &default_rules
            }
        };
        Some(Problem::new(pspec.clone(), file.resolve(Some(ts.items()))?)?)
    } else {
        None
    };
    let om = ObservationModel::new(&pspec).with_resolution(spec.resolution).with_support(spec.noise_support);
    let grid = om.grid();

    let reps: Vec<Repetition> = (0..spec.repetitions)
        .into_par_iter()
        .map(|rep| -> Result<Repetition> {
            let r = rep as u64;
            let plan = FoldPlan::random(ts.len(), spec.folds, derive_seed(spec.seed, r))?;
            let requests = transactions_to_requests(ts, &plan, spec.request_mode, derive_path(spec.seed, &[r, 1]));
            let counts = PairCounts::from_requests(items, &requests)?;
            let cost = |a: &crate::partition::Assignment| mean_trip_cost(a, ts, plan.test());

            let cfg = |k: u64| WalkConfig { seed: derive_path(spec.seed, &[r, k]), ..spec.walk.clone() };
            let bn_free = solve(&free, &om, &counts, &grid, &cfg(2))?;
            let (bn_rules, violations) = match &constrained {
                Some(problem) => {
                    let res = solve(problem, &om, &counts, &grid, &cfg(3))?;
                    let v = violations(problem.constraints(), &res.assignment, &pspec);
                    (Some(cost(&res.assignment)?), v)
                }
                None => (None, 0),
            };
            let mut oma = OmaState::new(&pspec, spec.oma_depth)?;
            for &(i, j) in &requests {
                oma.step(i, j)?;
            }
            Ok(Repetition {
                repetition: rep,
                train_fold: plan.train_fold(),
                requests: requests.len(),
                bn_epp_rules: bn_rules,
                bn_epp: cost(&bn_free.assignment)?,
                oma: cost(&oma.answer())?,
                rule_violations: violations,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summary = Vec::new();
    if spec.with_rules {
        let xs: Vec<f64> = reps.iter().filter_map(|r| r.bn_epp_rules).collect();
        let (mean, std) = mean_std(&xs);
        summary.push(SolverCost { solver: BN_EPP_RULES.into(), mean, std });
    }
    for (name, pick) in [(BN_EPP_FREE, (|r: &Repetition| r.bn_epp) as fn(&Repetition) -> f64), (OMA_FREE, |r| r.oma)] {
        let xs: Vec<f64> = reps.iter().map(pick).collect();
        let (mean, std) = mean_std(&xs);
        summary.push(SolverCost { solver: name.into(), mean, std });
    }
    Ok(WarehouseReport { summary, repetitions: reps })
}

fn violations(cons: &ConstraintSet, a: &crate::partition::Assignment, spec: &PartitionSpec) -> usize {
    cons.violations(a).len() + usize::from(!a.respects_capacities(spec))
}

/// The configured transactions: loaded from file or generated.
pub fn warehouse_transactions(spec: &WarehouseSpec) -> Result<TransactionSet> {
    match &spec.transactions {
        Some(path) => TransactionSet::load(path),
        None => crate::data::synthetic_groceries(&spec.synthetic, spec.synthetic_seed),
    }
}
