//! Placement rules and their validation.
//!
//! A [`ConstraintSet`] is plain data. [`Problem`] pairs it with a
//! [`PartitionSpec`] after validation: must-link pairs are closed into
//! groups, allowed sets and cannot-links are lifted to those groups, and a
//! witness assignment is found by backtracking over groups.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{Assignment, PartitionSpec};

/// Must-link pairs, cannot-link pairs and per-object allowed partitions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub must_link: BTreeSet<(usize, usize)>,
    pub cannot_link: BTreeSet<(usize, usize)>,
    /// Objects absent from the map may go anywhere.
    pub allowed: BTreeMap<usize, BTreeSet<usize>>,
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn must(mut self, i: usize, j: usize) -> Self {
        self.must_link.insert(ordered(i, j));
        self
    }

    pub fn cannot(mut self, i: usize, j: usize) -> Self {
        self.cannot_link.insert(ordered(i, j));
        self
    }

    /// Restricts `object` to `partitions`, intersecting with any earlier restriction.
    pub fn allow(mut self, object: usize, partitions: impl IntoIterator<Item = usize>) -> Self {
        let set: BTreeSet<usize> = partitions.into_iter().collect();
        self.allowed
            .entry(object)
            .and_modify(|cur| *cur = cur.intersection(&set).copied().collect())
            .or_insert(set);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.must_link.is_empty() && self.cannot_link.is_empty() && self.allowed.is_empty()
    }

    /// Whether `a` satisfies every rule (capacities are not checked here).
    pub fn satisfied_by(&self, a: &Assignment) -> bool {
        let l = a.labels();
        let get = |i: usize| l.get(i).copied();
        self.must_link.iter().all(|&(i, j)| get(i).is_some() && get(i) == get(j))
            && self.cannot_link.iter().all(|&(i, j)| get(i).is_some() && get(j).is_some() && get(i) != get(j))
            && self
                .allowed
                .iter()
                .all(|(&i, set)| get(i).is_some_and(|r| set.contains(&r)))
    }

    /// Lists every violated rule in human-readable form.
    pub fn violations(&self, a: &Assignment) -> Vec<String> {
        let l = a.labels();
        let mut out = Vec::new();
        for &(i, j) in &self.must_link {
            if l.get(i) != l.get(j) {
                out.push(format!("must {i} {j}"));
            }
        }
        for &(i, j) in &self.cannot_link {
            if l.get(i) == l.get(j) {
                out.push(format!("cannot {i} {j}"));
            }
        }
        for (&i, set) in &self.allowed {
            if !l.get(i).is_some_and(|r| set.contains(r)) {
                out.push(format!("allow {i}"));
            }
        }
        out
    }
}

/// A partition spec with validated, compiled constraints.
#[derive(Clone, Debug)]
pub struct Problem {
    spec: PartitionSpec,
    cons: ConstraintSet,
    compiled: Compiled,
    witness: Assignment,
}

/// Constraints lifted to must-link groups.
#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    pub group_of: Vec<usize>,
    pub group_size: Vec<usize>,
    /// `allowed[g * R + r]`: whether group `g` may use partition `r`.
    pub allowed: Vec<bool>,
    pub cannot: Vec<Vec<usize>>,
    pub trivial: bool,
    partitions: usize,
}

impl Compiled {
    #[inline]
    pub fn allows(&self, group: usize, partition: usize) -> bool {
        self.allowed[group * self.partitions + partition]
    }

    pub fn groups(&self) -> usize {
        self.group_size.len()
    }
}

impl Problem {
    /// Validates `cons` against `spec`; fails unless some assignment satisfies everything.
    pub fn new(spec: PartitionSpec, cons: ConstraintSet) -> Result<Self> {
        let compiled = compile(&spec, &cons)?;
        let pinned = vec![None; spec.objects()];
        let witness = complete(&spec, &compiled, &pinned).ok_or_else(|| {
            Error::InfeasibleConstraints("no assignment satisfies the rules and capacities".into())
        })?;
        Ok(Self { spec, cons, compiled, witness: Assignment::new(witness) })
    }

    pub fn unconstrained(spec: PartitionSpec) -> Self {
        Self::new(spec, ConstraintSet::default()).expect("an unconstrained spec is always feasible")
    }

    pub fn spec(&self) -> &PartitionSpec {
        &self.spec
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.cons
    }

    pub fn objects(&self) -> usize {
        self.spec.objects()
    }

    pub fn partitions(&self) -> usize {
        self.spec.partitions()
    }

    /// True when only capacities restrict the assignment.
    pub fn is_unconstrained(&self) -> bool {
        self.compiled.trivial
    }

    /// True when some rule distinguishes partitions (allowed sets), so
    /// relabeling can turn a feasible assignment into an infeasible one.
    pub fn has_partition_rules(&self) -> bool {
        !self.cons.allowed.is_empty()
    }

    pub(crate) fn compiled(&self) -> &Compiled {
        &self.compiled
    }

    /// A feasible assignment found during validation.
    pub fn witness(&self) -> &Assignment {
        &self.witness
    }

    /// Capacities and every rule hold for `a`.
    pub fn is_feasible(&self, a: &Assignment) -> bool {
        a.respects_capacities(&self.spec) && self.cons.satisfied_by(a)
    }

    /// Whether `i` and `j` are must-linked through the closure.
    pub fn must_linked(&self, i: usize, j: usize) -> bool {
        self.compiled.group_of[i] == self.compiled.group_of[j]
    }

    /// Completes a partial assignment (`None` = free) into a feasible one, if possible.
    pub fn complete(&self, partial: &[Option<usize>]) -> Option<Assignment> {
        if partial.len() != self.objects() {
            return None;
        }
        complete(&self.spec, &self.compiled, partial).map(Assignment::new)
    }

    /// Whether labels for objects `0..prefix.len()` extend to a feasible assignment.
    pub fn prefix_extendable(&self, prefix: &[usize]) -> bool {
        if prefix.len() > self.objects() {
            return false;
        }
        let mut partial = vec![None; self.objects()];
        for (slot, &l) in partial.iter_mut().zip(prefix) {
            *slot = Some(l);
        }
        complete(&self.spec, &self.compiled, &partial).is_some()
    }
}

/// Checks that at least one assignment satisfies `cons` under `spec`.
pub fn validate_constraints(spec: &PartitionSpec, cons: &ConstraintSet) -> Result<()> {
    Problem::new(spec.clone(), cons.clone()).map(|_| ())
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn compile(spec: &PartitionSpec, cons: &ConstraintSet) -> Result<Compiled> {
    let w = spec.objects();
    let r = spec.partitions();
    let check_pair = |kind: &str, i: usize, j: usize| -> Result<()> {
        if i >= w || j >= w {
            return Err(Error::MalformedConstraint(format!("{kind} pair ({i}, {j}) out of range for {w} objects")));
        }
        if i == j {
            return Err(Error::MalformedConstraint(format!("{kind} pair ({i}, {j}) repeats an object")));
        }
        Ok(())
    };
    for &(i, j) in &cons.must_link {
        check_pair("must", i, j)?;
    }
    for &(i, j) in &cons.cannot_link {
        check_pair("cannot", i, j)?;
        if cons.must_link.contains(&(i, j)) {
            return Err(Error::MalformedConstraint(format!("pair ({i}, {j}) is both must-link and cannot-link")));
        }
    }
    for (&i, set) in &cons.allowed {
        if i >= w {
            return Err(Error::MalformedConstraint(format!("allowed set for object {i} out of range")));
        }
        if set.is_empty() {
            return Err(Error::MalformedConstraint(format!("object {i} has an empty allowed set")));
        }
        if let Some(&bad) = set.iter().find(|&&p| p >= r) {
            return Err(Error::MalformedConstraint(format!("object {i} allowed in partition {bad} of {r}")));
        }
    }

    let mut parent: Vec<usize> = (0..w).collect();
    for &(i, j) in &cons.must_link {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut root_to_group = vec![usize::MAX; w];
    let mut group_of = vec![0; w];
    let mut group_size = Vec::new();
    for i in 0..w {
        let root = find(&mut parent, i);
        if root_to_group[root] == usize::MAX {
            root_to_group[root] = group_size.len();
            group_size.push(0);
        }
        group_of[i] = root_to_group[root];
        group_size[group_of[i]] += 1;
    }
    let groups = group_size.len();

    let mut allowed = vec![true; groups * r];
    for (&i, set) in &cons.allowed {
        let g = group_of[i];
        for p in 0..r {
            if !set.contains(&p) {
                allowed[g * r + p] = false;
            }
        }
    }
    for g in 0..groups {
        if !allowed[g * r..(g + 1) * r].iter().any(|&a| a) {
            return Err(Error::InfeasibleConstraints(format!(
                "must-link group {g} has no partition allowed for all of its members"
            )));
        }
    }

    let mut cannot: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); groups];
    for &(i, j) in &cons.cannot_link {
        let (gi, gj) = (group_of[i], group_of[j]);
        if gi == gj {
            return Err(Error::MalformedConstraint(format!(
                "cannot-link ({i}, {j}) contradicts the closure of the must-link rules"
            )));
        }
        cannot[gi].insert(gj);
        cannot[gj].insert(gi);
    }

    Ok(Compiled {
        group_of,
        group_size,
        allowed,
        cannot: cannot.into_iter().map(|s| s.into_iter().collect()).collect(),
        trivial: cons.is_empty(),
        partitions: r,
    })
}

/// Backtracking search for a feasible completion of `partial`.
fn complete(spec: &PartitionSpec, c: &Compiled, partial: &[Option<usize>]) -> Option<Vec<usize>> {
    let r_count = spec.partitions();
    let groups = c.groups();
    let mut remaining: Vec<usize> = spec.capacities().to_vec();
    let mut group_label: Vec<Option<usize>> = vec![None; groups];
    let mut unplaced = c.group_size.clone();

    for (i, slot) in partial.iter().enumerate() {
        let Some(p) = *slot else { continue };
        if p >= r_count || remaining[p] == 0 {
            return None;
        }
        let g = c.group_of[i];
        match group_label[g] {
            Some(q) if q != p => return None,
            Some(_) => {}
            None => {
                if !c.allows(g, p) {
                    return None;
                }
                group_label[g] = Some(p);
            }
        }
        remaining[p] -= 1;
        unplaced[g] -= 1;
    }
    for g in 0..groups {
        if let Some(p) = group_label[g] {
            if c.cannot[g].iter().any(|&h| group_label[h] == Some(p)) {
                return None;
            }
            if remaining[p] < unplaced[g] {
                return None;
            }
            remaining[p] -= unplaced[g];
        }
    }

    let mut order: Vec<usize> = (0..groups).filter(|&g| group_label[g].is_none()).collect();
    order.sort_by_key(|&g| {
        let options = (0..r_count).filter(|&p| c.allows(g, p)).count();
        (std::cmp::Reverse(c.group_size[g]), options, std::cmp::Reverse(c.cannot[g].len()), g)
    });

    // Partitions untouched by any group are interchangeable when their
    // capacity and allowed columns agree.
    let signature: Vec<(usize, Vec<bool>)> = (0..r_count)
        .map(|p| (spec.capacity(p), (0..groups).map(|g| c.allows(g, p)).collect()))
        .collect();
    let mut touched = vec![false; r_count];
    for &p in group_label.iter().flatten() {
        touched[p] = true;
    }

    fn search(
        depth: usize,
        order: &[usize],
        c: &Compiled,
        signature: &[(usize, Vec<bool>)],
        remaining: &mut [usize],
        touched: &mut [bool],
        group_label: &mut [Option<usize>],
    ) -> bool {
        let Some(&g) = order.get(depth) else { return true };
        let size = c.group_size[g];
        let mut tried_fresh: Vec<usize> = Vec::new();
        for p in 0..remaining.len() {
            if remaining[p] < size || !c.allows(g, p) {
                continue;
            }
            if c.cannot[g].iter().any(|&h| group_label[h] == Some(p)) {
                continue;
            }
            if !touched[p] {
                if tried_fresh.iter().any(|&q| signature[q] == signature[p] && remaining[q] == remaining[p]) {
                    continue;
                }
                tried_fresh.push(p);
            }
            let was_touched = touched[p];
            remaining[p] -= size;
            touched[p] = true;
            group_label[g] = Some(p);
            if search(depth + 1, order, c, signature, remaining, touched, group_label) {
                return true;
            }
            group_label[g] = None;
            touched[p] = was_touched;
            remaining[p] += size;
        }
        false
    }

    if !search(0, &order, c, &signature, &mut remaining, &mut touched, &mut group_label) {
        return None;
    }
    Some(
        (0..partial.len())
            .map(|i| group_label[c.group_of[i]].expect("every group is placed"))
            .collect(),
    )
}
