use serde::{Deserialize, Serialize};

/// Default number of grid steps; the grid then has 101 points.
pub const DEFAULT_RESOLUTION: usize = 100;

/// Discretized values `k / N` of the convergent-request probability with
/// log weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseGrid {
    resolution: usize,
    log_weights: Vec<f64>,
}

impl NoiseGrid {
    /// Uniform weights over `k / resolution`, `k = 0..=resolution`.
    pub fn uniform(resolution: usize) -> Self {
        assert!(resolution > 0, "noise grid resolution must be positive");
        let w = -((resolution + 1) as f64).ln();
        Self { resolution, log_weights: vec![w; resolution + 1] }
    }

    /// Grid with the given unnormalized log weights, normalized.
    pub fn from_log_weights(resolution: usize, log_weights: Vec<f64>) -> Self {
        assert_eq!(log_weights.len(), resolution + 1, "one weight per grid point");
        let mut grid = Self { resolution, log_weights };
        grid.normalize();
        grid
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.resolution + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn value(&self, k: usize) -> f64 {
        k as f64 / self.resolution as f64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.resolution).map(|k| self.value(k))
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Rescales the weights so that they sum to one in probability space.
    pub fn normalize(&mut self) {
        let norm = log_sum_exp(&self.log_weights);
        if norm.is_finite() {
            self.log_weights.iter_mut().for_each(|w| *w -= norm);
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn mean(&self) -> f64 {
        self.probabilities().iter().enumerate().map(|(k, w)| w * self.value(k)).sum()
    }

    /// Grid value with the largest weight; the smallest such value on ties.
    pub fn mode(&self) -> f64 {
        let mut best = 0;
        for (k, &w) in self.log_weights.iter().enumerate() {
            if w > self.log_weights[best] {
                best = k;
            }
        }
        self.value(best)
    }
}

/// `ln(sum(exp(x)))`, `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
