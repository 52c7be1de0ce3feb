//! Hidden partitionings and noisy request streams.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::Problem;
use crate::counts::PairCounts;
use crate::error::{Error, Result};
use crate::partition::Assignment;
use crate::prior::sample_prior;
use crate::rng::{rng_from_seed, SolverRng};

/// Draws a hidden partitioning from the sequential prior.
///
/// Without rules the draw is uniform over capacity-respecting labelings.
pub fn generate_ground_truth(problem: &Problem, seed: u64) -> Assignment {
    sample_prior(problem, &mut rng_from_seed(seed))
}

/// A hidden partitioning plus the convergent-request probability.
#[derive(Clone, Debug)]
pub struct Environment {
    truth: Assignment,
    p: f64,
    seed: u64,
    rng: SolverRng,
    same_pairs: Vec<(usize, usize)>,
    diff_pairs: Vec<(usize, usize)>,
}

impl Environment {
    pub fn new(problem: &Problem, truth: Assignment, p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::DomainError(format!("convergent probability {p} outside [0, 1]")));
        }
        if !problem.is_feasible(&truth) {
            return Err(Error::DomainError("ground truth violates its spec or constraints".into()));
        }
        let labels = truth.labels();
        let mut same_pairs = Vec::new();
        let mut diff_pairs = Vec::new();
        for i in 0..labels.len() {
            for j in i + 1..labels.len() {
                if labels[i] == labels[j] {
                    same_pairs.push((i, j));
                } else {
                    diff_pairs.push((i, j));
                }
            }
        }
        if same_pairs.is_empty() || diff_pairs.is_empty() {
            return Err(Error::DegenerateEnvironment(format!(
                "{} same-partition and {} cross-partition pairs; both kinds are needed",
                same_pairs.len(),
                diff_pairs.len()
            )));
        }
        Ok(Self { truth, p, seed, rng: rng_from_seed(seed), same_pairs, diff_pairs })
    }

    /// Draws the truth from the prior with `seed`, then requests from a derived stream.
    pub fn random(problem: &Problem, p: f64, seed: u64) -> Result<Self> {
        let truth = generate_ground_truth(problem, seed);
        Self::new(problem, truth, p, crate::rng::derive_seed(seed, 0))
    }

    pub fn truth(&self) -> &Assignment {
        &self.truth
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One request: a same-partition pair with probability `p`, else a cross pair.
    pub fn sample_request(&mut self) -> (usize, usize) {
        let pool = if self.rng.random::<f64>() < self.p { &self.same_pairs } else { &self.diff_pairs };
        pool[self.rng.random_range(0..pool.len())]
    }

    /// The next `requests` requests, in order, with their counts.
    pub fn stream(&mut self, requests: usize) -> Stream {
        let objects = self.truth.len();
        let list: Vec<(usize, usize)> = (0..requests).map(|_| self.sample_request()).collect();
        Stream::new(objects, list).expect("simulated requests are in range")
    }
}

/// An ordered request list and its accumulated counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stream {
    objects: usize,
    requests: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StreamRow {
    t: usize,
    i: usize,
    j: usize,
}

impl Stream {
    pub fn new(objects: usize, requests: Vec<(usize, usize)>) -> Result<Self> {
        for &(i, j) in &requests {
            if i == j {
                return Err(Error::DomainError(format!("request ({i}, {j}) pairs an object with itself")));
            }
            if let Some(&index) = [i, j].iter().find(|&&x| x >= objects) {
                return Err(Error::IndexOutOfRange { index, len: objects });
            }
        }
        Ok(Self { objects, requests })
    }

    pub fn objects(&self) -> usize {
        self.objects
    }

    pub fn requests(&self) -> &[(usize, usize)] {
        &self.requests
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// Counts of the first `t` requests.
    pub fn counts_at(&self, t: usize) -> PairCounts {
        PairCounts::from_requests(self.objects, &self.requests[..t.min(self.requests.len())])
            .expect("stream requests are validated")
    }

    pub fn counts(&self) -> PairCounts {
        self.counts_at(self.requests.len())
    }

    /// 64-bit FNV-1a digest of the request sequence.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &(i, j) in &self.requests {
            for b in (i as u64).to_le_bytes().into_iter().chain((j as u64).to_le_bytes()) {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }

    /// CSV with header `t,i,j`, `t` counting from 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for (k, &(i, j)) in self.requests.iter().enumerate() {
            writer.serialize(StreamRow { t: k + 1, i, j })?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(objects: usize, input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let mut rows: Vec<StreamRow> = Vec::new();
        for row in reader.deserialize() {
            rows.push(row?);
        }
        rows.sort_by_key(|r| r.t);
        Self::new(objects, rows.into_iter().map(|r| (r.i, r.j)).collect())
    }
}
