//! Random perturbations of planar self-similar sets whose projections
//! contain intervals: geometry of similarity maps, line coordinates,
//! projected measures, recurrent sets of lines and the perturbation search.

// `!(x > 0.0)` is the idiom for rejecting NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod ifs;
pub mod line;
pub mod measure;
pub mod output;
pub mod params;
pub mod perturb;
pub mod pipeline;
pub mod raster;
pub mod recurrence;
pub mod search;

pub use error::{Error, Result};
pub use ifs::{IfsSpec, PartitionRule, Point, Similarity, SimilarityMap, Square, Symbol, Word};
pub use line::{Interval, Line};
