use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Assignment;

/// Symmetric per-pair observation counts and the total request count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairCounts {
    objects: usize,
    counts: Vec<u32>,
    total: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CountRow {
    i: usize,
    j: usize,
    n: u32,
}

impl PairCounts {
    pub fn new(objects: usize) -> Self {
        Self { objects, counts: vec![0; objects * objects], total: 0 }
    }

    pub fn from_requests(objects: usize, requests: &[(usize, usize)]) -> Result<Self> {
        let mut counts = Self::new(objects);
        for &(i, j) in requests {
            counts.observe(i, j)?;
        }
        Ok(counts)
    }

    pub fn objects(&self) -> usize {
        self.objects
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Records one request for the unordered pair `(i, j)`.
    pub fn observe(&mut self, i: usize, j: usize) -> Result<()> {
        self.add(i, j, 1)
    }

    pub fn add(&mut self, i: usize, j: usize, n: u32) -> Result<()> {
        for index in [i, j] {
            if index >= self.objects {
                return Err(Error::IndexOutOfRange { index, len: self.objects });
            }
        }
        if i == j {
            return Err(Error::DomainError(format!("request ({i}, {j}) pairs an object with itself")));
        }
        self.counts[i * self.objects + j] += n;
        self.counts[j * self.objects + i] += n;
        self.total += u64::from(n);
        Ok(())
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.objects + j]
    }

    /// Counts of object `i` against every object.
    #[inline]
    pub fn row(&self, i: usize) -> &[u32] {
        &self.counts[i * self.objects..(i + 1) * self.objects]
    }

    /// Non-zero pairs `(i, j, n)` with `i < j`.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.objects).flat_map(move |i| {
            self.row(i)[i + 1..]
                .iter()
                .enumerate()
                .filter(|(_, &n)| n > 0)
                .map(move |(k, &n)| (i, i + 1 + k, n))
        })
    }

    /// Requests that fall on pairs sharing a partition under `a`.
    pub fn same_partition_mass(&self, a: &Assignment) -> u64 {
        let labels = a.labels();
        let mut mass = 0u64;
        for i in 0..self.objects {
            let li = labels[i];
            let row = self.row(i);
            for j in i + 1..self.objects {
                if labels[j] == li {
                    mass += u64::from(row[j]);
                }
            }
        }
        mass
    }

    /// Writes `i,j,n` rows for non-zero pairs.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for (i, j, n) in self.nonzero() {
            writer.serialize(CountRow { i, j, n })?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(objects: usize, input: R) -> Result<Self> {
        let mut counts = Self::new(objects);
        let mut reader = csv::Reader::from_reader(input);
        for row in reader.deserialize() {
            let row: CountRow = row?;
            counts.add(row.i, row.j, row.n)?;
        }
        Ok(counts)
    }
}
