pub mod cf;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod hybrid;
pub mod ontology;
pub mod rng;
pub mod semantic;
pub mod synthetic;

pub use error::{Error, Result};
