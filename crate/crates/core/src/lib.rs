// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod align;
pub mod baselines;
pub mod embedding;
pub mod error;
pub mod koopman;
pub mod linalg;
pub mod pipeline;
pub mod rank;
pub mod systems;

pub use error::{Error, Result, Stage};

pub use align::{AlignmentResult, Method, OptimizerConfig};
pub use embedding::{EmbeddingParams, HankelPair, TimeSeries};
pub use pipeline::{compare, Comparison, ComparisonConfig, DistanceMatrix, ExperimentRecord};
pub use rank::RankEstimate;
