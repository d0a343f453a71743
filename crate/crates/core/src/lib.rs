//! Fully dynamic metric k-median.
//!
//! Maintains an O(1)-approximate improper k-median solution under point
//! insertions and deletions with polylogarithmic recourse. The engine is
//! organized around epochs: a doubling search decides how many centers can
//! be dropped cheaply, updates inside the epoch are handled lazily, and the
//! epoch close-out re-extends, shrinks, and robustifies the center set.
//! Exact brute-force oracles back every guarantee at desk scale.

pub mod develop;
pub mod engine;
pub mod error;
pub mod local_search;
pub mod metric;
pub mod oracles;
pub mod robustify;
pub mod solvers;

pub use error::{Error, Result};
pub use metric::{CenterSet, Metric, MetricSpace, PointId, PointSet, WeightedPoint};
