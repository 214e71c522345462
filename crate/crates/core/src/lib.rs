//! Ontology profile analysis: RDF loading, a small SPARQL evaluator,
//! description logic axiom extraction and DL<∀₀^π> membership checks.

pub mod dl_mapping;
mod iso;
pub mod profile_checker;
pub mod rdf_io;
pub mod rdf_model;
pub mod sparql;
pub mod vocab;

pub use rdf_io::{parse_ntriples, parse_turtle, serialize_ntriples, ParseDiagnostic, PrefixMap};
pub use rdf_model::{Graph, GraphBuilder, Literal, Term, Triple, TriplePattern};
