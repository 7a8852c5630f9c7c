//! Similarity-based evaluation metrics for structured prediction.
//!
//! Every metric here is built from the same parts: a similarity between
//! individual items, a matching between the predicted and reference
//! collections, and a normalizer turning the matched overlap into
//! precision, recall, F or Jaccard.

pub mod bnb;
pub mod corpus;
pub mod error;
pub mod explain;
pub mod kernel;
pub mod latent;
pub mod matcher;
pub mod ordered;
pub mod report;
pub mod schema;
pub mod sim;
pub mod zoo;

pub use error::{Error, Result};
pub use matcher::{match_score, MatchConstraint, Matching, WeightMatrix};
pub use report::{aggregate, Aggregation, MetricReport, Tally};
pub use sim::{Normalizer, OverlapTriple, Prim, Scores, SimScore};
