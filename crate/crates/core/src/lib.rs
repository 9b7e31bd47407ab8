//! Exact polymer expansion of the quantum Heisenberg ferromagnet wave
//! function on small rectangular lattices.
//!
//! A state is a real coefficient per subset of lattice vertices (the sites
//! carrying an up spin). The crate evolves such states under `e^{-Ht}`,
//! maps between spin-wave sectors with superset sums, solves for the polymer
//! weights of the cluster expansion and rebuilds the state from them.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod init;
pub mod intertwiners;
pub mod lattice;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod polymer;
pub mod state;
pub mod tolerances;
pub mod verify;

pub use dynamics::{apply_hamiltonian, evolve, heat_rhs, EvolutionConfig, Method};
pub use error::{Error, Result};
pub use init::InitialState;
pub use intertwiners::{apply_t, IntertwinerSpec};
pub use lattice::{Boundary, Lattice, LatticeSpec, SubsetId};
pub use polymer::{
    compute_c, count_partitions, reconstruct_f, solve_u, truncate, PolymerCoefficients, SetPartition,
};
pub use state::{SectorVector, SubsetVector};
