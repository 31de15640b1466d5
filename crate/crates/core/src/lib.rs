//! Charged-particle track reconstruction posed as a QUBO.
//!
//! The pipeline runs hits → doublets → triplets → QUBO → azimuthal
//! sub-QUBOs → solver → merged selection → doublet-level scores. Solvers
//! are exhaustive enumeration, simulated annealing and a layered VQE
//! simulated on a statevector with a CVaR cost.
//!
//! Bit convention used everywhere: variable/qubit `i` is bit `i` of a
//! bitstring index (qubit 0 is the least significant bit), and a set bit
//! means the triplet is selected (`T_i = 1`, `Z_i = -1`).

pub mod config;
pub mod detector;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod quantum;
pub mod qubo;
pub mod rng;
pub mod seeding;
pub mod slicing;
pub mod solvers;
pub mod vqe;

pub use error::{Error, Result};
