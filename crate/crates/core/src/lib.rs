//! Link fraction mixed membership (LFMM) on aggregated weighted networks.
//!
//! The crate covers the whole pipeline:
//!
//! * [`graph`]: the weighted graph model with explicit diagonal masses, plus
//!   tab-separated I/O.
//! * [`aggregation`]: collapsing graphs by a node partition and lifting
//!   community labels back to the fine scale.
//! * [`detect`]: Leiden optimization of the Reichardt–Bornholdt quality.
//! * [`lfmm`]: raw, normalized and diffusion memberships, and the check that
//!   raw memberships add up across scales.
//! * [`diversity`]: Gini–Simpson diversity and gravity-null z-scores.
//! * [`synth`]: planted-partition benchmarks and the experiment drivers.

pub mod aggregation;
pub mod detect;
pub mod diversity;
pub mod error;
pub mod graph;
pub mod lfmm;
pub mod rng;
pub mod sparse;
pub mod synth;
pub mod table;

pub use aggregation::{aggregate, compose, lift_communities, AggregationMap};
pub use detect::{leiden, rb_quality, DetectConfig};
pub use error::{Error, Result};
pub use graph::{CommunityAssignment, WeightedGraph};
pub use lfmm::{MembershipKind, MembershipMatrix};
