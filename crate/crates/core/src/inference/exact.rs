use super::SolveResult;
use crate::constraints::Problem;
use crate::counts::PairCounts;
use crate::error::{Error, Result};
use crate::model::{NoiseScorer, ObservationModel};
use crate::noise::NoiseGrid;
use crate::partition::{enumerate_classes, enumerate_labeled, Assignment};
use crate::prior::log_prior;

/// Largest number of candidates [`exact_map`] enumerates by default.
pub const DEFAULT_ORACLE_CAP: u128 = 1_000_000;

/// Exact MAP assignment and noise value by enumeration.
///
/// Without per-object allowed sets every member of a relabeling class has
/// the same score, so one representative per class is scored; otherwise
/// all labelings are. Fails with `InstanceTooLarge` when the candidate
/// count exceeds `cap`. Ties go to the lexicographically smallest
/// canonical labeling, then to the smaller noise value.
pub fn exact_map(
    problem: &Problem,
    om: &ObservationModel,
    counts: &PairCounts,
    grid: &NoiseGrid,
    cap: u128,
) -> Result<SolveResult> {
    let spec = problem.spec();
    let by_class = !problem.has_partition_rules();
    let candidates = if by_class { spec.class_count().unwrap_or(u128::MAX) } else { spec.labeled_count() };
    if candidates > cap {
        return Err(Error::InstanceTooLarge { classes: candidates, cap });
    }

    let scorer = NoiseScorer::new(om, grid, counts.total());
    let constant_prior = problem.is_unconstrained();
    let uniform = crate::prior::uniform_log_prior(problem);

    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    let mut visit = |labels: &[usize]| {
        let a = Assignment::new(labels.to_vec());
        let prior = if constant_prior { uniform } else { log_prior(problem, &a) };
        if prior == f64::NEG_INFINITY {
            return;
        }
        let (k, term) = scorer.best(counts.same_partition_mass(&a));
        let score = prior + term;
        let replace = match &best {
            None => true,
            Some((s, bk, canon)) => {
                score > *s || (score == *s && (a.canonical() < *canon || (a.canonical() == *canon && k < *bk)))
            }
        };
        if replace {
            best = Some((score, k, a.canonical()));
        }
    };
    if by_class {
        enumerate_classes(spec, &mut visit);
    } else {
        enumerate_labeled(spec, &mut visit);
    }

    let (score, k, canon) =
        best.ok_or_else(|| Error::InfeasibleConstraints("no labeling satisfies the constraints".into()))?;
    // The canonical form loses the partition identities, which matter when
    // capacities differ or objects have allowed sets; recover a concrete
    // labeling from the class by re-enumerating.
    let assignment = concrete_member(problem, &canon, by_class);
    Ok(SolveResult { assignment, p_hat: scorer.value(k), score, trace: None })
}

fn concrete_member(problem: &Problem, canon: &[usize], by_class: bool) -> Assignment {
    let spec = problem.spec();
    let mut found: Option<Vec<usize>> = None;
    let mut visit = |labels: &[usize]| {
        if found.is_none()
            && Assignment::new(labels.to_vec()).canonical() == canon
            && problem.is_feasible(&Assignment::new(labels.to_vec()))
        {
            found = Some(labels.to_vec());
        }
    };
    if by_class {
        enumerate_classes(spec, &mut visit);
    } else {
        enumerate_labeled(spec, &mut visit);
    }
    Assignment::new(found.expect("winning class was enumerated"))
}
