//! Ontology DAG, information content and IC-based semantic similarity.

mod graph;
mod ic;
mod obo;
mod similarity;

pub use graph::{OntologyGraph, Term, TermId};
pub use ic::{compute_ic, AnnotationCounts, IcKind, IcMode, Ontology};
pub use obo::{parse_obo, parse_obo_path};
pub use similarity::{Metric, SharedIcMode};
