use rand::Rng;

use super::{SolveResult, TraceRecord, WalkConfig};
use crate::constraints::Problem;
use crate::counts::PairCounts;
use crate::model::{NoiseScorer, ObservationModel};
use crate::noise::NoiseGrid;
use crate::partition::Assignment;
use crate::prior::{log_prior, uniform_log_prior};
use crate::rng::rng_from_seed;

/// Same-partition request mass of an assignment, maintained under swaps.
///
/// `acc[k * R + r]` holds the requests between object `k` and the objects
/// currently labeled `r`, which makes the mass change of a swap O(1) and
/// applying it O(W).
#[derive(Clone, Debug)]
pub struct MassTracker<'c> {
    counts: &'c PairCounts,
    labels: Vec<usize>,
    partitions: usize,
    acc: Vec<u64>,
    mass: u64,
}

impl<'c> MassTracker<'c> {
    pub fn new(counts: &'c PairCounts, a: &Assignment, partitions: usize) -> Self {
        let w = a.len();
        let labels = a.labels().to_vec();
        let mut acc = vec![0u64; w * partitions];
        for k in 0..w {
            let row = counts.row(k);
            for (m, &n) in row.iter().enumerate() {
                acc[k * partitions + labels[m]] += u64::from(n);
            }
        }
        let mass = counts.same_partition_mass(a);
        Self { counts, labels, partitions, acc, mass }
    }

    pub fn mass(&self) -> u64 {
        self.mass
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Mass after swapping the labels of `i` and `j` (in different partitions).
    #[inline]
    pub fn mass_after_swap(&self, i: usize, j: usize) -> u64 {
        let (a, b) = (self.labels[i], self.labels[j]);
        let r = self.partitions;
        let nij = u64::from(self.counts.get(i, j));
        let gain = (self.acc[i * r + b] - nij) + (self.acc[j * r + a] - nij);
        let loss = self.acc[i * r + a] + self.acc[j * r + b];
        self.mass + gain - loss
    }

    pub fn swap(&mut self, i: usize, j: usize) {
        let (a, b) = (self.labels[i], self.labels[j]);
        if a == b {
            return;
        }
        self.mass = self.mass_after_swap(i, j);
        let r = self.partitions;
        let row_i = self.counts.row(i);
        let row_j = self.counts.row(j);
        for k in 0..self.labels.len() {
            let (ni, nj) = (u64::from(row_i[k]), u64::from(row_j[k]));
            self.acc[k * r + a] = self.acc[k * r + a] - ni + nj;
            self.acc[k * r + b] = self.acc[k * r + b] + ni - nj;
        }
        self.labels.swap(i, j);
    }
}

/// Swap-based random walk from `init` towards higher joint score.
///
/// Each step swaps two objects in different partitions. The swap is kept
/// when its score is at least the current one; otherwise it is undone with
/// probability `1 - epsilon`. Swaps that break a rule score `-inf` and are
/// always undone. The best configuration ever visited is returned.
pub fn walk(
    problem: &Problem,
    om: &ObservationModel,
    counts: &PairCounts,
    grid: &NoiseGrid,
    init: &Assignment,
    cfg: &WalkConfig,
) -> SolveResult {
    let mut rng = rng_from_seed(cfg.seed);
    walk_with_rng(problem, om, counts, grid, init, cfg, &mut rng)
}

pub(crate) fn walk_with_rng<R: Rng + ?Sized>(
    problem: &Problem,
    om: &ObservationModel,
    counts: &PairCounts,
    grid: &NoiseGrid,
    init: &Assignment,
    cfg: &WalkConfig,
    rng: &mut R,
) -> SolveResult {
    let scorer = NoiseScorer::new(om, grid, counts.total());
    let w = problem.objects();
    let constant_prior = problem.is_unconstrained().then(|| uniform_log_prior(problem));
    let prior_of = |labels: &[usize]| match constant_prior {
        Some(v) => v,
        None => log_prior(problem, &Assignment::new(labels.to_vec())),
    };

    let mut tracker = MassTracker::new(counts, init, problem.partitions());
    let init_prior = log_prior(problem, init);
    let (fixed_k, _) = scorer.best(tracker.mass());
    let score_of = |prior: f64, mass: u64| -> (usize, f64) {
        if prior == f64::NEG_INFINITY {
            return (0, prior);
        }
        let (k, term) = if cfg.reestimate_noise { scorer.best(mass) } else { (fixed_k, scorer.noise_term(fixed_k, mass)) };
        (k, prior + term)
    };

    let (_, mut current) = score_of(init_prior, tracker.mass());
    let mut best_labels = tracker.labels().to_vec();
    let mut best = current;
    let mut trace = cfg.record_trace.then(|| Vec::with_capacity(cfg.steps));

    let movable = tracker.labels().iter().any(|&l| l != tracker.labels()[0]);
    if movable && w >= 2 {
        let mut candidate = tracker.labels().to_vec();
        for step in 1..=cfg.steps {
            let (i, j) = loop {
                let i = rng.random_range(0..w);
                let j = rng.random_range(0..w);
                if tracker.labels()[i] != tracker.labels()[j] {
                    break (i, j);
                }
            };
            let mass = tracker.mass_after_swap(i, j);
            let prior = if constant_prior.is_some() {
                prior_of(&candidate)
            } else {
                candidate.swap(i, j);
                let p = prior_of(&candidate);
                candidate.swap(i, j);
                p
            };
            let (_, score) = score_of(prior, mass);
            if score > best {
                best = score;
                best_labels.copy_from_slice(tracker.labels());
                best_labels.swap(i, j);
            }
            let accepted = if score == f64::NEG_INFINITY {
                false
            } else if score < current {
                rng.random::<f64>() >= 1.0 - cfg.epsilon
            } else {
                true
            };
            if accepted {
                tracker.swap(i, j);
                candidate.swap(i, j);
                current = score;
            }
            if let Some(trace) = trace.as_mut() {
                trace.push(TraceRecord { step, score, accepted, swap_i: i, swap_j: j });
            }
        }
    }

    let assignment = Assignment::new(best_labels);
    let prior = log_prior(problem, &assignment);
    let (k, term) = scorer.best(counts.same_partition_mass(&assignment));
    SolveResult { assignment, p_hat: scorer.value(k), score: prior + term, trace }
}
