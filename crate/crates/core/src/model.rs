//! Observation likelihoods and the joint score of a configuration.
//!
//! A request lands on one unordered pair. With probability `p` it is drawn
//! uniformly from the pairs that share a partition, otherwise uniformly
//! from the pairs that do not. Over `T` requests the count of a pair is
//! then Binomial(`T`, `q`) with
//!
//! ```text
//! q_same(p) = p / S        S = number of same-partition pairs
//! q_diff(p) = (1 - p) / D  D = number of cross-partition pairs
//! ```
//!
//! Binomial coefficients depend only on the counts, so they are dropped
//! everywhere: they cancel in every comparison and normalization.
//!
//! Because the pair likelihood depends on the assignment only through
//! "same or not", the whole likelihood of a capacity-respecting assignment
//! is a function of one number: the request mass on its same-partition
//! pairs. [`NoiseScorer`] exploits that to score a configuration over the
//! full noise grid in O(grid) once the mass is known.

use serde::{Deserialize, Serialize};

use crate::constraints::Problem;
use crate::counts::PairCounts;
use crate::error::{Error, Result};
use crate::noise::{log_sum_exp, NoiseGrid, DEFAULT_RESOLUTION};
use crate::partition::{choose2, Assignment, PartitionSpec};
use crate::prior::log_prior;

/// Which grid values of `p` carry prior mass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSupport {
    /// Every grid value, uniformly.
    #[default]
    Full,
    /// Grid values at or above the chance level `S / (S + D)`, uniformly;
    /// below it convergent requests would be rarer than under random pairing.
    AboveChance,
}

/// Per-pair request probabilities for a partition spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    same_pairs: u64,
    diff_pairs: u64,
    resolution: usize,
    support: NoiseSupport,
}

impl ObservationModel {
    pub fn new(spec: &PartitionSpec) -> Self {
        Self {
            same_pairs: spec.same_pairs(),
            diff_pairs: spec.diff_pairs(),
            resolution: DEFAULT_RESOLUTION,
            support: NoiseSupport::Full,
        }
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        assert!(resolution > 0, "noise grid resolution must be positive");
        self.resolution = resolution;
        self
    }

    pub fn with_support(mut self, support: NoiseSupport) -> Self {
        self.support = support;
        self
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn support(&self) -> NoiseSupport {
        self.support
    }

    pub fn same_pairs(&self) -> u64 {
        self.same_pairs
    }

    pub fn diff_pairs(&self) -> u64 {
        self.diff_pairs
    }

    /// Uniform grid at this model's resolution.
    pub fn grid(&self) -> NoiseGrid {
        NoiseGrid::uniform(self.resolution)
    }

    pub fn q_same(&self, p: f64) -> f64 {
        if self.same_pairs == 0 {
            0.0
        } else {
            p / self.same_pairs as f64
        }
    }

    pub fn q_diff(&self, p: f64) -> f64 {
        if self.diff_pairs == 0 {
            0.0
        } else {
            (1.0 - p) / self.diff_pairs as f64
        }
    }

    /// `p` at which same and cross-partition pairs are equally likely.
    pub fn chance_level(&self) -> f64 {
        self.same_pairs as f64 / (self.same_pairs + self.diff_pairs) as f64
    }

    fn in_support(&self, k: usize) -> bool {
        match self.support {
            NoiseSupport::Full => true,
            // k / N >= S / (S + D), in integers
            NoiseSupport::AboveChance => {
                (k as u128) * u128::from(self.same_pairs + self.diff_pairs)
                    >= (self.resolution as u128) * u128::from(self.same_pairs)
            }
        }
    }

    /// Prior log weight of each grid point `k / N`.
    pub fn noise_log_prior(&self) -> Vec<f64> {
        let support = (0..=self.resolution).filter(|&k| self.in_support(k)).count();
        let w = -(support as f64).ln();
        (0..=self.resolution).map(|k| if self.in_support(k) { w } else { f64::NEG_INFINITY }).collect()
    }

    /// Prior log weight of `p`; values off the grid are weighted like their
    /// nearest grid point.
    pub fn noise_log_prior_at(&self, p: f64) -> f64 {
        let k = (p * self.resolution as f64).round().clamp(0.0, self.resolution as f64) as usize;
        self.noise_log_prior()[k]
    }
}

/// `x * ln_y` with `0 * -inf = 0`.
#[inline]
fn xlogy(x: f64, ln_y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * ln_y
    }
}

/// Log Binomial(`t`, `q`) mass at `n`, without the binomial coefficient.
pub fn pair_log_likelihood(om: &ObservationModel, n: u64, t: u64, same: bool, p: f64) -> Result<f64> {
    if n > t {
        return Err(Error::DomainError(format!("pair count {n} exceeds total {t}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::DomainError(format!("noise value {p} outside [0, 1]")));
    }
    let q = if same { om.q_same(p) } else { om.q_diff(p) };
    Ok(xlogy(n as f64, q.ln()) + xlogy((t - n) as f64, (-q).ln_1p()))
}

/// Log of prior(a) * prior(p) * likelihood(counts | a, p), summed pair by pair.
///
/// This is the reference evaluation; the solvers use [`NoiseScorer`].
pub fn joint_log_score(
    problem: &Problem,
    om: &ObservationModel,
    a: &Assignment,
    counts: &PairCounts,
    p: f64,
) -> Result<f64> {
    if a.len() != counts.objects() {
        return Err(Error::LengthMismatch { left: a.len(), right: counts.objects() });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::DomainError(format!("noise value {p} outside [0, 1]")));
    }
    let prior = log_prior(problem, a);
    if prior == f64::NEG_INFINITY {
        return Ok(prior);
    }
    let t = counts.total();
    let labels = a.labels();
    let mut score = prior + om.noise_log_prior_at(p);
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            let n = u64::from(counts.get(i, j));
            score += pair_log_likelihood(om, n, t, labels[i] == labels[j], p)?;
        }
    }
    Ok(score)
}

/// Grid-wide likelihood terms for a fixed request total.
///
/// For a capacity-respecting assignment with same-partition mass `m`, the
/// log likelihood at grid point `k` is
/// `m ln qs + (S T - m) ln(1 - qs) + (T - m) ln qd + (D T - T + m) ln(1 - qd)`.
#[derive(Clone, Debug)]
pub struct NoiseScorer {
    total: u64,
    same_pairs: u64,
    diff_pairs: u64,
    values: Vec<f64>,
    log_prior: Vec<f64>,
    ln_qs: Vec<f64>,
    ln_1m_qs: Vec<f64>,
    ln_qd: Vec<f64>,
    ln_1m_qd: Vec<f64>,
}

impl NoiseScorer {
    pub fn new(om: &ObservationModel, grid: &NoiseGrid, total: u64) -> Self {
        let values: Vec<f64> = grid.values().collect();
        let mut prior = om.clone();
        prior.resolution = grid.resolution();
        let qs: Vec<f64> = values.iter().map(|&p| om.q_same(p)).collect();
        let qd: Vec<f64> = values.iter().map(|&p| om.q_diff(p)).collect();
        Self {
            total,
            same_pairs: om.same_pairs,
            diff_pairs: om.diff_pairs,
            log_prior: prior.noise_log_prior(),
            ln_qs: qs.iter().map(|q| q.ln()).collect(),
            ln_1m_qs: qs.iter().map(|q| (-q).ln_1p()).collect(),
            ln_qd: qd.iter().map(|q| q.ln()).collect(),
            ln_1m_qd: qd.iter().map(|q| (-q).ln_1p()).collect(),
            values,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Log likelihood at grid point `k` for an assignment with `same_pairs`
    /// within-partition pairs carrying `mass` requests.
    #[inline]
    pub fn log_likelihood_general(&self, k: usize, mass: u64, same_pairs: u64) -> f64 {
        let t = self.total as f64;
        let m = mass as f64;
        let all_pairs = self.same_pairs + self.diff_pairs;
        let diff_pairs = all_pairs - same_pairs;
        xlogy(m, self.ln_qs[k])
            + xlogy(same_pairs as f64 * t - m, self.ln_1m_qs[k])
            + xlogy(t - m, self.ln_qd[k])
            + xlogy(diff_pairs as f64 * t - (t - m), self.ln_1m_qd[k])
    }

    #[inline]
    pub fn log_likelihood(&self, k: usize, mass: u64) -> f64 {
        self.log_likelihood_general(k, mass, self.same_pairs)
    }

    /// Prior of `p` plus likelihood at grid point `k`.
    #[inline]
    pub fn noise_term(&self, k: usize, mass: u64) -> f64 {
        let prior = self.log_prior[k];
        if prior == f64::NEG_INFINITY {
            return prior;
        }
        prior + self.log_likelihood(k, mass)
    }

    /// Best grid point and its noise term; ties go to the smaller `p`.
    pub fn best(&self, mass: u64) -> (usize, f64) {
        let mut best = (0, self.noise_term(0, mass));
        for k in 1..self.values.len() {
            let v = self.noise_term(k, mass);
            if v > best.1 {
                best = (k, v);
            }
        }
        best
    }

    /// `ln sum_k prior(k) likelihood(k)`: the likelihood with `p` summed out.
    pub fn marginal(&self, mass: u64) -> f64 {
        let terms: Vec<f64> = (0..self.values.len()).map(|k| self.noise_term(k, mass)).collect();
        log_sum_exp(&terms)
    }

    /// Normalized posterior over the grid.
    pub fn posterior(&self, mass: u64, same_pairs: u64, resolution: usize) -> NoiseGrid {
        let terms: Vec<f64> = (0..self.values.len())
            .map(|k| {
                let prior = self.log_prior[k];
                if prior == f64::NEG_INFINITY {
                    prior
                } else {
                    prior + self.log_likelihood_general(k, mass, same_pairs)
                }
            })
            .collect();
        NoiseGrid::from_log_weights(resolution, terms)
    }
}

fn same_pairs_of(a: &Assignment, partitions: usize) -> u64 {
    a.partition_sizes(partitions).iter().map(|&s| choose2(s as u64)).sum()
}

/// `(p*, score)` maximizing [`joint_log_score`] over the grid; ties go to the smaller `p`.
pub fn best_score_over_noise(
    problem: &Problem,
    om: &ObservationModel,
    a: &Assignment,
    counts: &PairCounts,
    grid: &NoiseGrid,
) -> (f64, f64) {
    let prior = log_prior(problem, a);
    if prior == f64::NEG_INFINITY || a.len() != counts.objects() {
        return (0.0, f64::NEG_INFINITY);
    }
    let scorer = NoiseScorer::new(om, grid, counts.total());
    let (k, term) = scorer.best(counts.same_partition_mass(a));
    (scorer.value(k), prior + term)
}

/// Posterior over the noise grid given the assignment `a`.
pub fn noise_posterior(
    problem: &Problem,
    om: &ObservationModel,
    a: &Assignment,
    counts: &PairCounts,
    grid: &NoiseGrid,
) -> NoiseGrid {
    let scorer = NoiseScorer::new(om, grid, counts.total());
    let same = same_pairs_of(a, problem.partitions());
    scorer.posterior(counts.same_partition_mass(a), same, grid.resolution())
}
