//! Partition specifications and object-to-partition assignments.
//!
//! Partition labels carry no meaning of their own: two assignments that
//! induce the same "same partition" relation describe the same
//! partitioning. [`Assignment::canonical`] and
//! [`Assignment::equivalent_up_to_relabeling`] compare assignments at that
//! level, and [`enumerate_classes`] visits one representative per class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Object count, partition count and per-partition capacities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    capacities: Vec<usize>,
}

impl PartitionSpec {
    /// Builds a spec from explicit capacities; the object count is their sum.
    pub fn new(capacities: Vec<usize>) -> Result<Self> {
        if capacities.is_empty() {
            return Err(Error::UnsupportedSpec("at least one partition is required".into()));
        }
        if capacities.contains(&0) {
            return Err(Error::UnsupportedSpec("capacities must be positive".into()));
        }
        Ok(Self { capacities })
    }

    /// `partitions` partitions of `objects / partitions` objects each.
    pub fn equi(objects: usize, partitions: usize) -> Result<Self> {
        if partitions == 0 || objects == 0 {
            return Err(Error::UnsupportedSpec("objects and partitions must be positive".into()));
        }
        if !objects.is_multiple_of(partitions) {
            return Err(Error::UnsupportedSpec(format!(
                "{partitions} partitions do not divide {objects} objects"
            )));
        }
        Self::new(vec![objects / partitions; partitions])
    }

    /// Near-equal split: the first `objects % partitions` partitions get one extra slot.
    pub fn balanced(objects: usize, partitions: usize) -> Result<Self> {
        if partitions == 0 || objects < partitions {
            return Err(Error::UnsupportedSpec(format!(
                "cannot split {objects} objects into {partitions} non-empty partitions"
            )));
        }
        let base = objects / partitions;
        let extra = objects % partitions;
        Self::new((0..partitions).map(|r| base + usize::from(r < extra)).collect())
    }

    pub fn objects(&self) -> usize {
        self.capacities.iter().sum()
    }

    pub fn partitions(&self) -> usize {
        self.capacities.len()
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn capacity(&self, partition: usize) -> usize {
        self.capacities[partition]
    }

    pub fn is_equi(&self) -> bool {
        self.capacities.windows(2).all(|w| w[0] == w[1])
    }

    /// Number of unordered object pairs.
    pub fn total_pairs(&self) -> u64 {
        choose2(self.objects() as u64)
    }

    /// Number of pairs that share a partition in any capacity-respecting assignment.
    pub fn same_pairs(&self) -> u64 {
        self.capacities.iter().map(|&c| choose2(c as u64)).sum()
    }

    pub fn diff_pairs(&self) -> u64 {
        self.total_pairs() - self.same_pairs()
    }

    /// Short name such as `r3w9`.
    pub fn label(&self) -> String {
        if self.is_equi() {
            format!("r{}w{}", self.partitions(), self.objects())
        } else {
            let caps: Vec<String> = self.capacities.iter().map(|c| c.to_string()).collect();
            format!("r{}w{}c{}", self.partitions(), self.objects(), caps.join("-"))
        }
    }

    /// Exact number of unlabeled partitionings with these block sizes, or
    /// `None` when it does not fit in a `u128`.
    pub fn class_count(&self) -> Option<u128> {
        let mut count: u128 = 1;
        let mut placed: u128 = 0;
        for &c in &self.capacities {
            for k in 1..=c as u128 {
                placed += 1;
                // count * placed / k stays integral: it is a running multinomial.
                count = count.checked_mul(placed)? / k;
            }
        }
        for mult in self.capacity_multiplicities() {
            for k in 2..=mult as u128 {
                count /= k;
            }
        }
        Some(count)
    }

    /// Natural log of the class count, valid for any size.
    pub fn log_class_count(&self) -> f64 {
        let mut log = ln_factorial(self.objects());
        for &c in &self.capacities {
            log -= ln_factorial(c);
        }
        for mult in self.capacity_multiplicities() {
            log -= ln_factorial(mult);
        }
        log
    }

    /// Number of capacity-respecting labeled assignments, saturating at `u128::MAX`.
    pub fn labeled_count(&self) -> u128 {
        let mut count: u128 = 1;
        let mut placed: u128 = 0;
        for &c in &self.capacities {
            for k in 1..=c as u128 {
                placed += 1;
                match count.checked_mul(placed) {
                    Some(v) => count = v / k,
                    None => return u128::MAX,
                }
            }
        }
        count
    }

    fn capacity_multiplicities(&self) -> Vec<usize> {
        let mut sorted = self.capacities.clone();
        sorted.sort_unstable();
        let mut out = Vec::new();
        let mut run = 1;
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                run += 1;
            } else {
                out.push(run);
                run = 1;
            }
        }
        out.push(run);
        out
    }
}

pub(crate) fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Partition label per object.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    labels: Vec<usize>,
}

impl Assignment {
    pub fn new(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    /// Round-robin labels `0, 1, .., R-1, 0, 1, ..`.
    pub fn round_robin(objects: usize, partitions: usize) -> Self {
        Self::new((0..objects).map(|i| i % partitions).collect())
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, object: usize) -> usize {
        self.labels[object]
    }

    pub fn swap(&mut self, i: usize, j: usize) {
        self.labels.swap(i, j);
    }

    pub fn same_partition(&self, i: usize, j: usize) -> Result<bool> {
        let len = self.labels.len();
        for index in [i, j] {
            if index >= len {
                return Err(Error::IndexOutOfRange { index, len });
            }
        }
        if i == j {
            return Err(Error::DomainError(format!("pair ({i}, {j}) is not a pair of distinct objects")));
        }
        Ok(self.labels[i] == self.labels[j])
    }

    /// Labels renumbered by order of first appearance.
    pub fn canonical(&self) -> Vec<usize> {
        let mut map: Vec<Option<usize>> = Vec::new();
        let mut next = 0;
        self.labels
            .iter()
            .map(|&l| {
                if l >= map.len() {
                    map.resize(l + 1, None);
                }
                *map[l].get_or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    }

    pub fn equivalent_up_to_relabeling(&self, other: &Assignment) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { left: self.len(), right: other.len() });
        }
        Ok(self.canonical() == other.canonical())
    }

    /// Object count per partition; labels outside `0..partitions` are ignored.
    pub fn partition_sizes(&self, partitions: usize) -> Vec<usize> {
        let mut sizes = vec![0; partitions];
        for &l in &self.labels {
            if l < partitions {
                sizes[l] += 1;
            }
        }
        sizes
    }

    /// Labels in range and per-partition counts equal to the capacities.
    pub fn respects_capacities(&self, spec: &PartitionSpec) -> bool {
        self.labels.len() == spec.objects()
            && self.labels.iter().all(|&l| l < spec.partitions())
            && self.partition_sizes(spec.partitions()) == spec.capacities()
    }

    /// Groups of object indices, one per non-empty partition, ordered by label.
    pub fn groups(&self, partitions: usize) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); partitions];
        for (i, &l) in self.labels.iter().enumerate() {
            if l < partitions {
                groups[l].push(i);
            }
        }
        groups
    }
}

impl From<Vec<usize>> for Assignment {
    fn from(labels: Vec<usize>) -> Self {
        Self::new(labels)
    }
}

/// Visits one capacity-respecting labeling per relabeling class.
///
/// Partitions of equal capacity are interchangeable, so a partition may only
/// be opened after every lower-indexed partition of the same capacity has
/// been opened. Visiting order is lexicographic in the labels.
pub fn enumerate_classes(spec: &PartitionSpec, mut visit: impl FnMut(&[usize])) {
    let caps = spec.capacities();
    // prev_same[r]: the closest lower partition with the same capacity.
    let prev_same: Vec<Option<usize>> =
        (0..caps.len()).map(|r| (0..r).rev().find(|&q| caps[q] == caps[r])).collect();
    let mut labels = Vec::with_capacity(spec.objects());
    let mut used = vec![0usize; caps.len()];
    recurse(spec.objects(), caps, Some(&prev_same), &mut labels, &mut used, &mut visit);
}

/// Visits every capacity-respecting labeled assignment in lexicographic order.
pub fn enumerate_labeled(spec: &PartitionSpec, mut visit: impl FnMut(&[usize])) {
    let mut labels = Vec::with_capacity(spec.objects());
    let mut used = vec![0usize; spec.partitions()];
    recurse(spec.objects(), spec.capacities(), None, &mut labels, &mut used, &mut visit);
}

fn recurse(
    objects: usize,
    caps: &[usize],
    prev_same: Option<&[Option<usize>]>,
    labels: &mut Vec<usize>,
    used: &mut [usize],
    visit: &mut dyn FnMut(&[usize]),
) {
    if labels.len() == objects {
        visit(labels);
        return;
    }
    for r in 0..caps.len() {
        if used[r] == caps[r] {
            continue;
        }
        if let Some(prev) = prev_same {
            if used[r] == 0 && prev[r].is_some_and(|q| used[q] == 0) {
                continue;
            }
        }
        used[r] += 1;
        labels.push(r);
        recurse(objects, caps, prev_same, labels, used, visit);
        labels.pop();
        used[r] -= 1;
    }
}
