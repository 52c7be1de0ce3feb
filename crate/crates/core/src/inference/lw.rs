use rand::Rng;

use crate::constraints::Problem;
use crate::counts::PairCounts;
use crate::model::{NoiseScorer, ObservationModel};
use crate::noise::NoiseGrid;
use crate::partition::Assignment;
use crate::prior::{draw_index, PlacementState};

/// Likelihood-weighted initialization.
///
/// Objects are labeled in index order. For object `i`, `samples` forward
/// completions of the current prefix are drawn from the prior and weighted
/// by their likelihood with the noise parameter summed out over the grid;
/// the label of `i` is then drawn from the weighted label frequencies. When
/// every completion has zero weight (or dead-ends) the label is drawn from
/// the prior conditional restricted to extendable choices.
pub fn lw_initialize<R: Rng + ?Sized>(
    problem: &Problem,
    om: &ObservationModel,
    counts: &PairCounts,
    grid: &NoiseGrid,
    samples: usize,
    rng: &mut R,
) -> Assignment {
    let w = problem.objects();
    let parts = problem.partitions();
    let scorer = NoiseScorer::new(om, grid, counts.total());
    let samples = samples.max(1);

    let mut state = PlacementState::new(problem);
    let mut prefix: Vec<usize> = Vec::with_capacity(w);
    // prefix_acc[k * R + r]: requests between k and prefix objects labeled r
    let mut prefix_acc = vec![0u64; w * parts];
    let mut prefix_mass = 0u64;

    let mut scratch = vec![0.0; parts];
    let mut completion: Vec<usize> = Vec::with_capacity(w);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); parts];
    let mut log_weights: Vec<(usize, f64)> = Vec::with_capacity(samples);

    for i in 0..w {
        log_weights.clear();
        for _ in 0..samples {
            completion.clear();
            if crate::prior::sample_completion(state.clone(), &mut completion, rng, &mut scratch).is_err() {
                continue;
            }
            let mut mass = prefix_mass;
            members.iter_mut().for_each(Vec::clear);
            for (offset, &label) in completion.iter().enumerate() {
                let k = i + offset;
                mass += prefix_acc[k * parts + label];
                let row = counts.row(k);
                for &m in &members[label] {
                    mass += u64::from(row[m]);
                }
                members[label].push(k);
            }
            log_weights.push((completion[0], scorer.marginal(mass)));
        }

        let max = log_weights.iter().map(|&(_, lw)| lw).fold(f64::NEG_INFINITY, f64::max);
        let mut dist = vec![0.0; parts];
        if max.is_finite() {
            for &(label, lw) in &log_weights {
                dist[label] += (lw - max).exp();
            }
        } else {
            state.weights(&mut dist);
            for (r, d) in dist.iter_mut().enumerate() {
                if *d > 0.0 {
                    prefix.push(r);
                    if !problem.prefix_extendable(&prefix) {
                        *d = 0.0;
                    }
                    prefix.pop();
                }
            }
        }
        let total: f64 = dist.iter().sum();
        let label = if total > 0.0 {
            draw_index(&dist, total, rng)
        } else {
            // Unreachable for a feasible problem; keep going with any admissible label.
            (0..parts).find(|&r| state.admissible(r)).unwrap_or(0)
        };

        prefix_mass += prefix_acc[i * parts + label];
        for (k, &n) in counts.row(i).iter().enumerate() {
            prefix_acc[k * parts + label] += u64::from(n);
        }
        state.place(label);
        prefix.push(label);
    }
    Assignment::new(prefix)
}
