//! Statute corpus tooling: ingestion, search, a linear-chain CRF discourse
//! tagger, span analytics and annotation collection.
//!
//! Numeric code is generic over [`num::Float`]; the aliases below fix the
//! scalar to `f64`, which is what the CLI and server use.

pub mod analytics;
pub mod annotation;
pub mod corpus;
pub mod crf;
pub mod ingest;
pub mod num;
pub mod search;

pub use num::Float;

/// Scalar used by the binaries.
pub type Scalar = f64;

pub type CrfModel = crf::CrfModel<Scalar>;
pub type FeatureVector = crf::FeatureVector<Scalar>;
pub type Potentials = crf::Potentials<Scalar>;
pub type Marginals = crf::Marginals<Scalar>;
pub type Gradient = crf::Gradient<Scalar>;
