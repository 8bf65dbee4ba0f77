//! Quantum NLP sentence classification with pre-quantum word embeddings,
//! simulated on a dense statevector.

pub mod aae;
pub mod ansatz;
pub mod bundled;
pub mod circuit;
pub mod corpus;
pub mod diagnostics;
pub mod embedding;
pub mod error;
pub mod experiment;
pub mod pqe;
pub mod pregroup;
pub mod simulator;
pub mod spsa;
pub mod trainer;

pub use error::{Error, Result};
