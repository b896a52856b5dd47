//! Time dynamics of fermionic lattice models on an emulated noisy quantum
//! computer.
//!
//! Basis indices are little-endian throughout: qubit 0 is the least
//! significant bit, and text labels and bitstrings are written with the
//! highest qubit first.

pub mod circuit;
pub mod device;
pub mod error;
pub mod evolution;
pub mod fermion;
pub mod linalg;
pub mod measure;
pub mod mitigation;
pub mod noise;
pub mod pauli;
pub mod prep;
pub mod sampling;
pub mod state;

pub use circuit::{Circuit, Gate, GateKind};
pub use error::{Error, Result};
pub use noise::{NoiseSpec, ReadoutError};
pub use pauli::{Letter, PauliSum, PauliTerm, Phase};
pub use sampling::Counts;
pub use state::QuantumState;
