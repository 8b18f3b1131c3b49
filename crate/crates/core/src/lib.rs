//! Fully-dynamic correlation clustering.
//!
//! A clustering is carried as a representation `(C, D)` where `D = E △ E(C)`;
//! every static algorithm here reads and writes that representation in time
//! proportional to `|D|`, and [`engine::Engine`] rebuilds it periodically as
//! the graph changes.

pub mod cluster_lp;
pub mod clustering;
pub mod engine;
pub mod error;
pub mod graph;
pub mod local_search;
pub mod marks;
pub mod oracle;
pub mod pivot;
pub mod precluster;
pub mod representation;
pub mod sampling;
pub mod steps;
pub mod violation;

pub use clustering::{ClusterId, Clustering};
pub use error::{Error, Result};
pub use graph::{Graph, Pair, VertexId};
pub use representation::{
    clustering_cost, symmetric_difference, symmetric_difference_update, violation, ClusterRepresentation, SymDiff,
    TieRule, UpdateBuffer,
};
pub use sampling::{RngStream, WeightedSampler};
pub use steps::{BudgetExceeded, StepCounter};
pub use violation::ViolationSet;
