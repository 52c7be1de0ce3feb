//! The sequential prior over assignments.
//!
//! Objects are placed in index order. Object `i` goes to partition `r` with
//! probability proportional to the capacity `r` has left, after zeroing
//! every partition that would break a capacity, an allowed set, or a
//! must-link / cannot-link rule against objects already placed. Without
//! rules this makes every capacity-respecting labeling equally likely.

use rand::Rng;

use crate::constraints::Problem;
use crate::error::{Error, Result};
use crate::partition::Assignment;

/// Partial placement of objects `0..placed`.
#[derive(Clone, Debug)]
pub struct PlacementState<'a> {
    problem: &'a Problem,
    remaining: Vec<usize>,
    group_label: Vec<Option<usize>>,
    placed: usize,
}

impl<'a> PlacementState<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        Self {
            problem,
            remaining: problem.spec().capacities().to_vec(),
            group_label: vec![None; problem.compiled().groups()],
            placed: 0,
        }
    }

    /// State after placing `prefix`; fails if the prefix itself breaks a rule.
    pub fn from_prefix(problem: &'a Problem, prefix: &[usize]) -> Result<Self> {
        let mut state = Self::new(problem);
        for &label in prefix {
            if !state.admissible(label) {
                return Err(Error::DomainError(format!(
                    "prefix places object {} in inadmissible partition {label}",
                    state.placed
                )));
            }
            state.place(label);
        }
        Ok(state)
    }

    /// Index of the next object to place.
    pub fn next_object(&self) -> usize {
        self.placed
    }

    pub fn is_complete(&self) -> bool {
        self.placed == self.problem.objects()
    }

    /// Whether the next object may go to `partition`.
    #[inline]
    pub fn admissible(&self, partition: usize) -> bool {
        if partition >= self.remaining.len() || self.remaining[partition] == 0 || self.is_complete() {
            return false;
        }
        let c = self.problem.compiled();
        let g = c.group_of[self.placed];
        match self.group_label[g] {
            Some(p) => p == partition,
            None => c.allows(g, partition) && !c.cannot[g].iter().any(|&h| self.group_label[h] == Some(partition)),
        }
    }

    /// Unnormalized weights for the next object: remaining capacity or zero.
    pub fn weights(&self, out: &mut [f64]) {
        for (p, w) in out.iter_mut().enumerate() {
            *w = if self.admissible(p) { self.remaining[p] as f64 } else { 0.0 };
        }
    }

    /// Places the next object in `partition` without checking admissibility.
    #[inline]
    pub fn place(&mut self, partition: usize) {
        let g = self.problem.compiled().group_of[self.placed];
        self.group_label[g] = Some(partition);
        self.remaining[partition] -= 1;
        self.placed += 1;
    }

    /// Draws a label for the next object from the prior conditional.
    pub fn sample_next<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut [f64]) -> Result<usize> {
        self.weights(scratch);
        let total: f64 = scratch.iter().sum();
        if total <= 0.0 {
            return Err(Error::DeadEnd { object: self.placed });
        }
        Ok(draw_index(scratch, total, rng))
    }
}

/// Index `k` with probability `weights[k] / total`.
pub(crate) fn draw_index<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return k;
            }
            u -= w;
            last = k;
        }
    }
    last
}

/// Prior distribution of object `object` given the labels of objects `0..object`.
pub fn conditional_placement_distribution(problem: &Problem, prefix: &[usize], object: usize) -> Result<Vec<f64>> {
    if object != prefix.len() {
        return Err(Error::DomainError(format!(
            "prefix covers {} objects but object {object} was requested",
            prefix.len()
        )));
    }
    if object >= problem.objects() {
        return Err(Error::IndexOutOfRange { index: object, len: problem.objects() });
    }
    let state = PlacementState::from_prefix(problem, prefix)?;
    let mut dist = vec![0.0; problem.partitions()];
    state.weights(&mut dist);
    let total: f64 = dist.iter().sum();
    if total <= 0.0 {
        return Err(Error::DeadEnd { object });
    }
    dist.iter_mut().for_each(|w| *w /= total);
    Ok(dist)
}

/// Log prior probability of `a`; `-inf` when any rule or capacity is broken.
pub fn log_prior(problem: &Problem, a: &Assignment) -> f64 {
    if a.len() != problem.objects() {
        return f64::NEG_INFINITY;
    }
    let mut state = PlacementState::new(problem);
    let mut log = 0.0;
    for &label in a.labels() {
        if !state.admissible(label) {
            return f64::NEG_INFINITY;
        }
        let mut total = 0usize;
        for p in 0..problem.partitions() {
            if state.admissible(p) {
                total += state.remaining[p];
            }
        }
        log += (state.remaining[label] as f64 / total as f64).ln();
        state.place(label);
    }
    log
}

/// Log prior shared by every capacity-respecting assignment when there are
/// no rules: `ln(prod c_r! / W!)`.
pub fn uniform_log_prior(problem: &Problem) -> f64 {
    let spec = problem.spec();
    spec.capacities().iter().map(|&c| crate::partition::ln_factorial(c)).sum::<f64>()
        - crate::partition::ln_factorial(spec.objects())
}

/// Completes `state` by sampling the prior; `DeadEnd` when it gets stuck.
pub fn sample_completion<R: Rng + ?Sized>(
    mut state: PlacementState<'_>,
    labels: &mut Vec<usize>,
    rng: &mut R,
    scratch: &mut [f64],
) -> Result<()> {
    while !state.is_complete() {
        let label = state.sample_next(rng, scratch)?;
        state.place(label);
        labels.push(label);
    }
    Ok(())
}

/// One draw from the prior, restarting from scratch after dead ends.
pub fn sample_prior<R: Rng + ?Sized>(problem: &Problem, rng: &mut R) -> Assignment {
    let mut scratch = vec![0.0; problem.partitions()];
    let mut labels = Vec::with_capacity(problem.objects());
    loop {
        labels.clear();
        if sample_completion(PlacementState::new(problem), &mut labels, rng, &mut scratch).is_ok() {
            return Assignment::new(labels);
        }
    }
}
