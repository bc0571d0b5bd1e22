//! Finding, verifying and enumerating (α,γ)-clusters and clusterings of
//! finite metric spaces.
//!
//! A set C is an (α,γ)-cluster when it carries mass at least α and every
//! outside point is at least γ times farther from C (in average distance)
//! than every inside point. A partition is an (α,γ)-clustering when every
//! point is γ times closer to its own part than to any other part.
//!
//! - [`metric`]: spaces, proximities Δ / Δ_U, partition distance
//! - [`verify`]: exact verdicts, regularity checks, closed-form bounds
//! - [`sampler`]: sample-and-enumerate search for all clusterings
//! - [`laminar`]: ball clusters and partitions for γ > 3
//! - [`hardness`]: the 3DM gadget reduction and graph-metric special cases
//! - [`oracle`]: brute-force ground truth and instance generators

// `!(x > 0.0)` rejects NaN too; index loops over square matrices read better.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod assign;
pub mod error;
pub mod hardness;
pub mod laminar;
pub mod metric;
pub mod oracle;
pub mod partitions;
pub mod sampler;
mod serde_util;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
pub use metric::{
    delta, delta_sets, delta_uniform, load_space, partition_distance, Clustering, MetricSpace,
    SpaceFile, EXCEPTIONAL,
};
