//! Bayesian MAP inference for stochastic on-line equi-partitioning.
//!
//! Objects are accessed in pairs; pairs that share a hidden partition are
//! requested with total probability `p`, the rest with `1 - p`. Given
//! request counts, the solvers here recover the most probable partitioning
//! (up to relabeling) and `p`, optionally under must-link, cannot-link and
//! allowed-partition rules.

pub mod bench;
pub mod constraints;
pub mod counts;
pub mod data;
pub mod error;
pub mod inference;
pub mod model;
pub mod noise;
pub mod oma;
pub mod partition;
pub mod prior;
pub mod rules;
pub mod rng;
pub mod simulator;

pub use constraints::{ConstraintSet, Problem};
pub use counts::PairCounts;
pub use error::{Error, Result};
pub use inference::{exact_map, lw_initialize, solve, solve_online, walk, SolveResult, WalkConfig};
pub use model::{best_score_over_noise, joint_log_score, NoiseScorer, NoiseSupport, ObservationModel};
pub use noise::NoiseGrid;
pub use oma::{oma_answer, oma_init, oma_step, OmaState};
pub use partition::{Assignment, PartitionSpec};
pub use simulator::{Environment, Stream};
