//! Sequence-only protein-protein interaction prediction.
//!
//! Proteins are rewritten over a seven-letter physicochemical alphabet,
//! turned into fixed-length vectors with a truncated discrete cosine
//! transform, and scored by a mesh of classifiers keyed on pairs of Gene
//! Ontology molecular-function terms.

pub mod classifier;
pub mod dataset;
pub mod dct;
pub mod features;
pub mod mesh;
pub mod metrics;
pub mod seq;
pub mod synthetic;
pub mod validation;
