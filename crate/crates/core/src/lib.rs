//! Class degree of factor codes between shifts of finite type, with the
//! measure-theoretic machinery around it: Markov and equilibrium measures,
//! relatively independent joinings, the jump extension and splicing.

pub mod class_degree;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod io;
pub mod joinings;
pub mod measures;
pub mod rng;
pub mod shift;
pub mod splicing;
pub mod symset;

pub use error::{Error, Result};
pub use shift::{Alphabet, FactorTriple, FiberProduct, GeneralTriple, RecodedTriple, Sft, Symbol, Word};
pub use symset::SymbolSet;
