//! Location-activity network: the activity-location matrix and its AF-ILF
//! weighting, location similarity, popularity, boundary of uniqueness and
//! the assembled property graph.

mod bou;
mod export;
mod geo;
mod graph;
mod matrix;

pub use bou::{compute_bou, Boundary, BouAssignment, SpatialLocation, SpatialView, Uniqueness};
pub use export::{parse_records, to_graphml, to_records, to_si_csv};
pub use geo::{haversine, radial_distance, EARTH_RADIUS_M};
pub use graph::{
    assemble_graph, ActivityNode, GraphStats, LanetGraph, LocationNode, PerformedAt, SimilarTo,
    ConceptScores, ScoreTable, IS_PERFORMED_AT, IS_SIMILAR_TO,
};
pub use matrix::{af_ilf, build_alm, popularity_index, similarity_index, ActivityLocationMatrix, AfIlf, SimilarityMatrix};
