//! Location-specific activity network.
//!
//! Mines `(verb, concept)` activities from dependency-annotated location
//! reviews, filters them against a category-aware concept hierarchy, merges
//! activities sharing a hidden sense, and links activities and locations into
//! a property graph that answers activity and location recommendation
//! queries.
//!
//! Numeric code is generic over [`Scalar`]; the aliases below fix it to `f64`.

pub mod concepts;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod extract;
pub mod merge;
pub mod network;
pub mod pipeline;
pub mod query;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Graph = network::LanetGraph<f64>;
pub type Graph32 = network::LanetGraph<f32>;
pub type Build = pipeline::BuildOutput<f64>;
pub type Boundary = network::Boundary<f64>;
pub type SimilarityMatrix = network::SimilarityMatrix<f64>;
pub type AfIlf = network::AfIlf<f64>;
pub type ConceptScore = concepts::ConceptScore<f64>;
