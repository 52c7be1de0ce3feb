use std::io;

use thiserror::Error;

/// Errors surfaced by the partitioning library.
#[derive(Debug, Error)]
pub enum Error {
    /// No assignment satisfies the constraints together with the capacities.
    #[error("constraints are infeasible: {0}")]
    InfeasibleConstraints(String),

    /// A rule references something out of range or contradicts another rule.
    #[error("malformed constraint: {0}")]
    MalformedConstraint(String),

    /// The prefix cannot be extended by the next object.
    #[error("dead end: object {object} has no admissible partition")]
    DeadEnd { object: usize },

    #[error("index {index} out of range for {len} objects")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("domain error: {0}")]
    DomainError(String),

    /// The exhaustive oracle would have to visit more classes than allowed.
    #[error("instance too large for exhaustive search: {classes} classes exceed cap {cap}")]
    InstanceTooLarge { classes: u128, cap: u128 },

    #[error("degenerate environment: {0}")]
    DegenerateEnvironment(String),

    #[error("unsupported partition spec: {0}")]
    UnsupportedSpec(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input file is empty")]
    EmptyFile,

    #[error("unknown item `{0}`")]
    UnknownItem(String),

    #[error("unknown section `{0}`")]
    UnknownSection(String),

    #[error("item {0} has no assigned partition")]
    UnassignedItem(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
