//! Atomic proposition decomposition and knowledge graph construction.
//!
//! The crate is organised by pipeline stage: [`atomizer`] splits text into
//! atomic propositions, [`extraction`] turns text or atoms into triplets,
//! [`kg`] assembles and closes the graph and [`eval`] scores the output.
//! [`logic`] holds the propositional model behind the notion of atomicity.

pub mod atomizer;
pub mod error;
pub mod eval;
pub mod extraction;
pub mod io;
pub mod kg;
pub mod logic;
pub mod par;
pub mod pipeline;
pub mod remote;
pub mod text;

pub use error::{AtomizeError, BackendError, EvalError, ExtractError, IoError, LogicError, RemoteError};
