//! Quantum bit-string commitment: encodings, codes, bounds, simulation and attacks.

pub mod adversary;
pub mod bounds;
pub mod cli;
pub mod codes;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod report;
pub mod scheme;

pub use error::{Error, Result};
pub use linalg::{ComplexScalar, DenseOperator, Limits, StateVector};
pub use scheme::{bb84_scheme, six_state_scheme, Codeword, EncodingScheme};
