//! Fixed-budget and anytime best arm identification.
//!
//! The crate provides the `H1`-targeted tracking samplers (Simple Tracking,
//! Almost Tracking), the Pooled Allocation scheme, elimination baselines
//! (Successive Rejects, Sequential Halving and their doubling wrappers), the
//! complexity measures `H1`, `H2` and `H3`, a replicated Monte-Carlo harness
//! for probability-of-error curves, and executable checks of the allocation
//! and complexity bounds.
//!
//! Arms are zero-indexed everywhere.

pub mod algorithms;
pub mod allocation;
pub mod environment;
pub mod error;
pub mod instances;
pub mod model;
pub mod simulation;
pub mod theory;

pub use error::{Error, Result};
pub use model::{EmpiricalState, Instance};
