mod common;

use common::direct_counts;
use equipart::inference::MassTracker;
use equipart::prior::sample_prior;
use equipart::rng::rng_from_seed;
use equipart::{
    best_score_over_noise, joint_log_score, walk, Assignment, ConstraintSet, NoiseSupport, ObservationModel,
    PartitionSpec, Problem, WalkConfig,
};
use rand::Rng;

#[test]
fn tracked_mass_matches_recount_after_random_swaps() {
    let problem = Problem::unconstrained(PartitionSpec::equi(12, 4).unwrap());
    let truth: Vec<usize> = (0..12).map(|i| i % 4).collect();
    let counts = direct_counts(&truth, 0.7, 400, 9);
    let mut rng = rng_from_seed(1);
    let mut a = sample_prior(&problem, &mut rng);
    let mut tracker = MassTracker::new(&counts, &a, 4);
    for _ in 0..2000 {
        let (i, j) = (rng.random_range(0..12), rng.random_range(0..12));
        if a.label(i) == a.label(j) {
            continue;
        }
        let predicted = tracker.mass_after_swap(i, j);
        tracker.swap(i, j);
        a.swap(i, j);
        assert_eq!(predicted, counts.same_partition_mass(&a));
        assert_eq!(tracker.mass(), predicted);
        assert_eq!(tracker.labels(), a.labels());
    }
}

/// Replays the trace: every proposed score must equal a from-scratch
/// evaluation of the proposed assignment.
fn check_trace(problem: &Problem, support: NoiseSupport, seed: u64) {
    let om = ObservationModel::new(problem.spec()).with_support(support);
    let grid = om.grid();
    let w = problem.objects();
    let truth = problem.witness().labels().to_vec();
    let counts = direct_counts(&truth, 0.8, 150, seed);
    let init = sample_prior(problem, &mut rng_from_seed(seed));
    let cfg = WalkConfig { epsilon: 0.3, steps: 400, record_trace: true, seed, ..WalkConfig::default() };
    let result = walk(problem, &om, &counts, &grid, &init, &cfg);
    let mut current = init.labels().to_vec();
    let mut best = best_score_over_noise(problem, &om, &init, &counts, &grid).1;
    for rec in result.trace.as_ref().unwrap() {
        let mut proposed = current.clone();
        proposed.swap(rec.swap_i, rec.swap_j);
        let proposed = Assignment::new(proposed);
        let (p, full) = best_score_over_noise(problem, &om, &proposed, &counts, &grid);
        if full.is_finite() {
            assert!((full - rec.score).abs() <= 1e-9 * full.abs().max(1.0), "step {}: {full} vs {}", rec.step, rec.score);
            // and the pair-by-pair reference agrees at the maximizing p
            let reference = joint_log_score(problem, &om, &proposed, &counts, p).unwrap();
            assert!((reference - full).abs() <= 1e-9 * full.abs().max(1.0));
        } else {
            assert_eq!(rec.score, f64::NEG_INFINITY);
            assert!(!rec.accepted);
        }
        best = best.max(full);
        if rec.accepted {
            current = proposed.into_labels();
        }
    }
    assert_eq!(result.assignment.len(), w);
    assert!((result.score - best).abs() <= 1e-9 * best.abs().max(1.0));
    assert!(problem.is_feasible(&result.assignment));
}

#[test]
fn incremental_scores_match_full_evaluation() {
    let free = Problem::unconstrained(PartitionSpec::equi(9, 3).unwrap());
    let ruled = Problem::new(
        PartitionSpec::equi(9, 3).unwrap(),
        ConstraintSet::new().must(0, 1).cannot(2, 3).allow(4, [0, 2]).allow(8, [1]),
    )
    .unwrap();
    let uneven = Problem::unconstrained(PartitionSpec::new(vec![2, 3, 4]).unwrap());
    for seed in 0..5 {
        check_trace(&free, NoiseSupport::Full, seed);
        check_trace(&free, NoiseSupport::AboveChance, seed);
        check_trace(&ruled, NoiseSupport::AboveChance, seed);
        check_trace(&uneven, NoiseSupport::Full, seed);
    }
}

#[test]
fn greedy_walk_never_keeps_a_worse_state() {
    let problem = Problem::unconstrained(PartitionSpec::equi(4, 2).unwrap());
    let om = ObservationModel::new(problem.spec());
    let mut counts = equipart::PairCounts::new(4);
    counts.add(0, 1, 5).unwrap();
    let init = Assignment::new(vec![0, 1, 0, 1]);
    let cfg = WalkConfig { epsilon: 0.0, steps: 100, record_trace: true, seed: 4, ..WalkConfig::default() };
    let result = walk(&problem, &om, &counts, &om.grid(), &init, &cfg);
    assert_eq!(result.assignment.label(0), result.assignment.label(1));
    let mut current = best_score_over_noise(&problem, &om, &init, &counts, &om.grid()).1;
    for rec in result.trace.unwrap() {
        if rec.accepted {
            assert!(rec.score >= current);
            current = rec.score;
        }
    }
}

#[test]
fn zero_steps_returns_the_initialization() {
    let problem = Problem::unconstrained(PartitionSpec::equi(6, 2).unwrap());
    let om = ObservationModel::new(problem.spec());
    let counts = direct_counts(&[0, 0, 0, 1, 1, 1], 0.9, 40, 1);
    let init = Assignment::new(vec![1, 0, 1, 0, 1, 0]);
    let cfg = WalkConfig { epsilon: 0.0, steps: 0, ..WalkConfig::default() };
    let result = walk(&problem, &om, &counts, &om.grid(), &init, &cfg);
    assert_eq!(result.assignment, init);
}
