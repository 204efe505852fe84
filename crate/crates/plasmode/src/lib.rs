//! Plasmode simulation toolkit for social-network causal studies.
//!
//! Builds synthetic school-style network populations from released model
//! summaries — ERGM coefficients for the tie structure, rank-correlation
//! targets for nodal attributes, and structural exposure/outcome models —
//! then evaluates inverse-probability, regression, and doubly robust
//! estimators of direct and spillover effects against the known truth.
//!
//! The pieces compose bottom-up: [`graph`] and [`table`] hold data,
//! [`ergm`] simulates and fits tie models, [`copula`] synthesizes
//! attributes, [`datagen`] assembles populations, [`estimands`] computes
//! ground truth, [`estimators`] the competing analyses, and [`harness`]
//! runs seeded replicate studies end to end.

pub mod copula;
pub mod datagen;
pub mod ergm;
pub mod error;
pub mod estimands;
pub mod estimators;
pub mod graph;
pub mod harness;
pub mod table;
mod util;

pub use error::{Error, Result};
pub use graph::{summarize, Graph, NetworkSummary};
pub use table::{Column, ColumnData, NodeTable, Role};
