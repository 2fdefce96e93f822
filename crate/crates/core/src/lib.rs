//! Annotation, clustering and evaluation engine for lexical semantic change.
//!
//! Word uses are judged pairwise for relatedness, the judgments form a usage
//! graph, and correlation clustering turns the graph into senses. Per-epoch
//! sense frequencies then yield a binary and a graded change score per word.

pub mod clustering;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod measures;
pub mod pipeline;
pub mod sampling;
pub mod seed;
pub mod simulation;

pub use error::{Error, Result};
