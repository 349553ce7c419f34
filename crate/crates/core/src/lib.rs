//! Projection pursuit classification trees.
//!
//! The crate implements the projection pursuit tree (PPtree) classifier, in
//! which every internal node splits on a linear combination of the features
//! found by optimizing an LDA or PDA projection index, together with two
//! extensions:
//!
//! * class subsetting ([`Variant::Mod1`]): the second projection at each node
//!   and its split value use only the two closest classes across the
//!   super-class boundary;
//! * entropy splitting ([`Variant::Mod2`]): the split value minimizes the
//!   weighted child entropy over all midpoints of the projected data, so a
//!   class may be split several times.
//!
//! An axis-aligned entropy tree ([`Variant::AxisBaseline`]) is provided as a
//! comparator, along with 2D simulators, a repeated-holdout benchmark
//! harness and decision-boundary diagnostics.
//!
//! Batch work (benchmark repetitions, boundary lattices) runs on rayon when
//! the `parallel` feature is enabled and falls back to a sequential loop
//! otherwise; see [`Execution`].

pub mod bench;
pub mod boundary;
pub mod dataset;
mod error;
pub mod par;
pub mod projection;
pub mod simulate;
pub mod split_rules;
pub mod tree;

pub use dataset::{ClassId, Dataset};
pub use error::{Error, Result};
pub use par::Execution;
pub use projection::{IndexConfig, IndexKind, Projection, ScatterPair};
pub use split_rules::{GroupStats, SplitRule};
pub use tree::{FitConfig, FittedTree, TreeNode, Variant};
