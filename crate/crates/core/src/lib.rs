//! k-anonymization by searching a generalization lattice.
//!
//! A dataset's quasi-identifiers are each given a generalization ladder
//! ([`hierarchy`]); the product of those ladders forms a lattice of
//! per-attribute generalization levels ([`lattice`]). Every node of the
//! lattice is a candidate anonymization, checked for k-anonymity under a
//! row-suppression budget through per-attribute support maps
//! ([`anonymity`]) and scored by its precision loss ([`metrics`]).
//!
//! [`search`] provides four strategies for finding the feasible node with the
//! least information loss: exhaustive enumeration, OLA, random sampling and
//! the KGen genetic algorithm. [`experiment`] drives comparative runs and
//! [`cli`] exposes everything from the command line.

pub mod anonymity;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod hierarchy;
pub mod lattice;
pub mod metrics;
pub mod search;

pub use anonymity::{
    apply_anonymization, build_support_map, build_support_maps, check_k_anonymity,
    equivalence_classes, AnonymityVerdict, SupportEntry, SupportMap,
};
pub use dataset::{
    generate_config, load_dataset, suppress_identifiers, AttributeConfig, Config, DataType,
    Dataset, Role,
};
pub use error::{Error, Result};
pub use hierarchy::{build_hierarchies, GeneralizationHierarchy};
pub use lattice::{node_height, preprocess, random_node, LatticeBounds, LatticeNode};
pub use metrics::{accuracy, precision, suppression_level, AccuracyReport, QualityReport};
pub use search::{Algorithm, GaParams, SearchContext, SearchResult, SelectionObjective};
