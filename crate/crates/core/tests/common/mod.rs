//! Brute-force references written against the model definition only, not
//! against the library's scorers or enumerators.

#![allow(dead_code)]

use equipart::PairCounts;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every label vector over `capacities.len()` partitions whose partition
/// sizes equal `capacities`, in lexicographic order.
pub fn all_labelings(capacities: &[usize]) -> Vec<Vec<usize>> {
    fn extend(left: &mut [usize], labels: &mut Vec<usize>, w: usize, out: &mut Vec<Vec<usize>>) {
        if labels.len() == w {
            out.push(labels.clone());
            return;
        }
        for r in 0..left.len() {
            if left[r] > 0 {
                left[r] -= 1;
                labels.push(r);
                extend(left, labels, w, out);
                labels.pop();
                left[r] += 1;
            }
        }
    }
    let w = capacities.iter().sum();
    let mut out = Vec::new();
    extend(&mut capacities.to_vec(), &mut Vec::with_capacity(w), w, &mut out);
    out
}

/// Relabels by first appearance, so relabeling-equivalent vectors coincide.
pub fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<Option<usize>> = vec![None; labels.len() + 1];
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            *map[l].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

fn ln_or_zero(n: f64, q: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        n * q.ln()
    }
}

/// Log of the full joint `P(a) P(p) P(counts | a, p)` for an unconstrained
/// problem with uniform labeling prior. `above_chance` restricts the noise
/// prior to grid points with `p >= S / (S + D)`.
pub fn full_joint(
    capacities: &[usize],
    labels: &[usize],
    counts: &PairCounts,
    resolution: usize,
    k: usize,
    above_chance: bool,
    labelings: usize,
) -> f64 {
    let w = labels.len();
    let same: u64 = capacities.iter().map(|&c| (c * c.saturating_sub(1) / 2) as u64).sum();
    let all = (w * (w - 1) / 2) as u64;
    let diff = all - same;
    let support: Vec<usize> =
        (0..=resolution).filter(|&k| !above_chance || k as u64 * all >= resolution as u64 * same).collect();
    if !support.contains(&k) {
        return f64::NEG_INFINITY;
    }
    let p = k as f64 / resolution as f64;
    let qs = if same == 0 { 0.0 } else { p / same as f64 };
    let qd = if diff == 0 { 0.0 } else { (1.0 - p) / diff as f64 };
    let t = counts.total() as f64;
    let mut score = -(labelings as f64).ln() - (support.len() as f64).ln();
    for i in 0..w {
        for j in i + 1..w {
            let n = counts.get(i, j) as f64;
            let q = if labels[i] == labels[j] { qs } else { qd };
            score += ln_or_zero(n, q) + ln_or_zero(t - n, 1.0 - q);
        }
    }
    score
}

/// Maximum of the full joint over every labeling and grid point, and the
/// canonical classes attaining it within `tol`.
pub fn brute_force_map(
    capacities: &[usize],
    counts: &PairCounts,
    resolution: usize,
    above_chance: bool,
    tol: f64,
) -> (f64, Vec<Vec<usize>>) {
    let labelings = all_labelings(capacities);
    let n = labelings.len();
    let scored: Vec<(f64, Vec<usize>)> = labelings
        .iter()
        .map(|l| {
            let best = (0..=resolution)
                .map(|k| full_joint(capacities, l, counts, resolution, k, above_chance, n))
                .fold(f64::NEG_INFINITY, f64::max);
            (best, canonical(l))
        })
        .collect();
    let top = scored.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let mut winners: Vec<Vec<usize>> = scored.into_iter().filter(|s| top - s.0 <= tol).map(|s| s.1).collect();
    winners.sort();
    winners.dedup();
    (top, winners)
}

/// A stream from the generative model written out directly: pick a
/// same-partition pair with probability `p`, otherwise a cross pair,
/// uniformly within the kind.
pub fn direct_counts(truth: &[usize], p: f64, t: usize, seed: u64) -> PairCounts {
    let w = truth.len();
    let mut same = Vec::new();
    let mut diff = Vec::new();
    for i in 0..w {
        for j in i + 1..w {
            if truth[i] == truth[j] {
                same.push((i, j));
            } else {
                diff.push((i, j));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = PairCounts::new(w);
    for _ in 0..t {
        let pool = if rng.random::<f64>() < p { &same } else { &diff };
        let (i, j) = pool[rng.random_range(0..pool.len())];
        counts.observe(i, j).unwrap();
    }
    counts
}

/// Multinomial coefficient `w! / prod(c!)` divided by the permutations of
/// equal-sized partitions: the number of unlabeled partitionings.
pub fn class_count_formula(capacities: &[usize]) -> u128 {
    let fact = |n: usize| (1..=n as u128).product::<u128>();
    let w: usize = capacities.iter().sum();
    let mut denom: u128 = capacities.iter().map(|&c| fact(c)).product();
    let mut sorted = capacities.to_vec();
    sorted.sort();
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&c| c == sorted[i]).count();
        denom *= fact(j);
        i += j;
    }
    fact(w) / denom
}
