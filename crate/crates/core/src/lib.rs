//! Distributed conditional feature screening.
//!
//! Features are ranked by the absolute partial correlation between the
//! response and each feature given one conditional variable, estimated
//! across `K` data shards with one of three aggregation schemes. A two-stage
//! knockoff procedure then picks a data-driven threshold that controls the
//! false discovery rate.

pub mod cli;
pub mod data;
pub mod knockoff;
pub mod metrics;
pub mod error;
pub mod moments;
pub mod seed;
pub mod shard;
pub mod simulate;

pub use data::{DataBlock, Dataset};
pub use error::{Error, Result};
pub use moments::{MomentVector, TripleSample};
pub use shard::{Method, ScreeningResult, SelectionRule, ShardSummary, ShardedDataset, Utilities};
