//! Dense-coding capacities of small multiqubit states under local Pauli noise.

pub mod analysis;
pub mod capacity;
pub mod channels;
pub mod error;
pub mod exec;
pub mod optimizer;
pub mod oracles;
pub mod qmath;
pub mod states;
pub mod tables;

pub use error::{QdcError, Result};
