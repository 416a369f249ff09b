//! Quantum state tomography estimators and the bias they carry.
//!
//! Linear inversion, maximum likelihood and least squares reconstruction
//! on the Pauli product basis, Monte Carlo bias benchmarks, and linear
//! witness bounds with Hoeffding confidence regions.

pub mod error;
pub mod estimators;
pub mod functionals;
pub mod harness;
pub mod operator;
pub mod pauli;
pub mod random;
pub mod sampling;
pub mod scheme;
pub mod states;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use estimators::{reconstruct, Estimate, Method, ReconstructionResult, SolverOptions};
pub use functionals::{FunctionalSpec, WitnessOperator};
pub use operator::{HermitianOperator, QuantumState};
pub use sampling::SeedPolicy;
pub use scheme::{linear_inversion, FrequencyData, TomographyScheme};
pub use states::{make_state, StateFamily, StateSpec};
