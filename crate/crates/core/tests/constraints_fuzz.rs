mod common;

use common::all_labelings;
use equipart::{solve, ConstraintSet, Error, ObservationModel, PairCounts, PartitionSpec, Problem, WalkConfig};
use proptest::prelude::*;

#[derive(Clone, Debug)]
struct Instance {
    caps: Vec<usize>,
    must: Vec<(usize, usize)>,
    cannot: Vec<(usize, usize)>,
    allow: Vec<(usize, Vec<usize>)>,
    requests: Vec<(usize, usize)>,
}

fn instance() -> impl Strategy<Value = Instance> {
    prop::collection::vec(1usize..=3, 2..=4).prop_flat_map(|caps| {
        let w: usize = caps.iter().sum();
        let r = caps.len();
        let pair = (0..w, 0..w).prop_filter("distinct", |(i, j)| i != j);
        (
            Just(caps),
            prop::collection::vec(pair.clone(), 0..4),
            prop::collection::vec(pair.clone(), 0..4),
            prop::collection::vec((0..w, prop::collection::vec(0..r, 1..=r)), 0..3),
            prop::collection::vec(pair, 0..40),
        )
            .prop_map(|(caps, must, cannot, allow, requests)| Instance { caps, must, cannot, allow, requests })
    })
}

/// Direct check of every rule and capacity.
fn satisfies(inst: &Instance, labels: &[usize]) -> bool {
    let mut sizes = vec![0; inst.caps.len()];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes == inst.caps
        && inst.must.iter().all(|&(i, j)| labels[i] == labels[j])
        && inst.cannot.iter().all(|&(i, j)| labels[i] != labels[j])
        && inst.allow.iter().all(|(i, set)| set.contains(&labels[*i]))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1500, ..ProptestConfig::default() })]

    #[test]
    fn outputs_satisfy_rules_or_the_instance_is_rejected(inst in instance(), seed in any::<u64>()) {
        let mut cons = ConstraintSet::new();
        for &(i, j) in &inst.must { cons = cons.must(i, j); }
        for &(i, j) in &inst.cannot { cons = cons.cannot(i, j); }
        for (i, set) in &inst.allow { cons = cons.allow(*i, set.iter().copied()); }
        let feasible = all_labelings(&inst.caps).iter().any(|l| satisfies(&inst, l));
        match Problem::new(PartitionSpec::new(inst.caps.clone()).unwrap(), cons) {
            Ok(problem) => {
                prop_assert!(feasible, "accepted an unsatisfiable instance");
                let w = problem.objects();
                let counts = PairCounts::from_requests(w, &inst.requests).unwrap();
                let om = ObservationModel::new(problem.spec());
                let cfg = WalkConfig { steps: 60, init_samples: 3, seed, ..WalkConfig::default() };
                let out = solve(&problem, &om, &counts, &om.grid(), &cfg).unwrap();
                prop_assert!(satisfies(&inst, out.assignment.labels()), "{:?}", out.assignment.labels());
            }
            Err(Error::InfeasibleConstraints(_)) | Err(Error::MalformedConstraint(_)) => {
                prop_assert!(!feasible, "rejected a satisfiable instance");
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
