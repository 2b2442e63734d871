//! Numerical laboratory for limit theorems of windowed sums of i.i.d.
//! random fields on the d-dimensional positive integer lattice.
//!
//! The crates in this workspace split along the obvious lines: this one
//! holds the algorithms (lattice counting, deterministic field sampling,
//! window statistics, subsequence geometry, truncation bookkeeping, moment
//! series, smooth-transform limits, and the experiment harness); `lsl-lab`
//! wraps them in a CLI.

pub mod bounds;
pub mod delta;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod lattice;
pub mod moments;
pub mod numeric;
pub mod window;

pub use bounds::{BoundParams, SeriesVerdict, TruncationClass, TruncationReading};
pub use delta::TransformKind;
pub use field::{Distribution, FieldSpec, MomentValue};
pub use geometry::{SubsequenceKind, SubsequenceSpec};
pub use harness::{ExperimentConfig, ReplicationSummary, Trajectory, TrajectoryRecord};
pub use lattice::{CountTable, LatticeIndex};
pub use window::WindowSpec;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("integer overflow in lattice arithmetic")]
    ArithmeticOverflow,
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("accuracy loss: {0}")]
    Accuracy(&'static str),
    #[error("window volume {volume} exceeds the cell budget {budget}")]
    CellBudgetExceeded { volume: u64, budget: u64 },
    #[error("{0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
