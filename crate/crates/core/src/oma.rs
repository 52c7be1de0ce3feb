//! Object Migration Automaton baseline.
//!
//! Every object sits in a class at a depth between 1 (innermost, most
//! certain) and `N` (boundary). A request for a pair of objects is taken
//! at face value as evidence that they belong together:
//!
//! * same class: both move one step inward;
//! * different classes, neither at the boundary: both move one step outward;
//! * different classes, `i` at the boundary (or both): `j` moves outward,
//!   `i` migrates into `j`'s class at the boundary, and the deepest-state
//!   (largest depth, smallest index on ties) other member of `j`'s class
//!   moves to `i`'s old class at the boundary, keeping class sizes fixed.
//!
//! The rules are deterministic, so stepping needs no random source.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{Assignment, PartitionSpec};

/// Standard number of depth states per class.
pub const DEFAULT_DEPTH: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmaState {
    depth_states: usize,
    class_of: Vec<usize>,
    depth: Vec<usize>,
}

impl OmaState {
    /// Round-robin classes with every object at the boundary.
    pub fn new(spec: &PartitionSpec, depth_states: usize) -> Result<Self> {
        if !spec.is_equi() {
            return Err(Error::UnsupportedSpec(format!(
                "the automaton needs equal class sizes, got capacities {:?}",
                spec.capacities()
            )));
        }
        if depth_states == 0 {
            return Err(Error::Config("depth_states must be positive".into()));
        }
        let w = spec.objects();
        Ok(Self {
            depth_states,
            class_of: (0..w).map(|i| i % spec.partitions()).collect(),
            depth: vec![depth_states; w],
        })
    }

    pub fn depth_states(&self) -> usize {
        self.depth_states
    }

    pub fn class_of(&self) -> &[usize] {
        &self.class_of
    }

    pub fn depth(&self) -> &[usize] {
        &self.depth
    }

    /// Applies one request.
    pub fn step(&mut self, i: usize, j: usize) -> Result<()> {
        let w = self.class_of.len();
        for index in [i, j] {
            if index >= w {
                return Err(Error::IndexOutOfRange { index, len: w });
            }
        }
        if i == j {
            return Err(Error::DomainError(format!("request ({i}, {j}) pairs an object with itself")));
        }
        let n = self.depth_states;
        if self.class_of[i] == self.class_of[j] {
            self.depth[i] = (self.depth[i] - 1).max(1);
            self.depth[j] = (self.depth[j] - 1).max(1);
            return Ok(());
        }
        let (migrant, host) = match (self.depth[i] == n, self.depth[j] == n) {
            (false, false) => {
                self.depth[i] = (self.depth[i] + 1).min(n);
                self.depth[j] = (self.depth[j] + 1).min(n);
                return Ok(());
            }
            (true, _) => (i, j),
            (false, true) => (j, i),
        };
        self.depth[host] = (self.depth[host] + 1).min(n);
        let from = self.class_of[migrant];
        let to = self.class_of[host];
        let displaced = (0..w)
            .filter(|&k| k != host && self.class_of[k] == to)
            .fold(None, |best: Option<usize>, k| match best {
                Some(b) if self.depth[b] >= self.depth[k] => Some(b),
                _ => Some(k),
            });
        if let Some(k) = displaced {
            self.class_of[migrant] = to;
            self.depth[migrant] = n;
            self.class_of[k] = from;
            self.depth[k] = n;
        }
        Ok(())
    }

    /// The current classes as an assignment.
    pub fn answer(&self) -> Assignment {
        Assignment::new(self.class_of.clone())
    }
}

/// Initial state with the standard number of depth states.
///
/// Initialization is deterministic; `seed` is accepted for interface
/// symmetry with the other solvers and does not influence the result.
pub fn oma_init(spec: &PartitionSpec, _seed: u64) -> Result<OmaState> {
    OmaState::new(spec, DEFAULT_DEPTH)
}

pub fn oma_step(state: &mut OmaState, request: (usize, usize)) -> Result<()> {
    state.step(request.0, request.1)
}

pub fn oma_answer(state: &OmaState) -> Assignment {
    state.answer()
}
