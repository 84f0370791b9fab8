//! Randomized-measurement protocols for many-body topological invariants of
//! one-dimensional spin-1/2 chains.
//!
//! The crate covers the full pipeline at desk scale (N ≤ 16 sites):
//!
//! - [`spin`]: statevectors, bitstrings, local gates and Born-rule sampling.
//! - [`hamiltonian`]: the bond-alternating XXZ chain with its optional
//!   symmetry-breaking, staggered and pinning terms, as a matrix-free operator.
//! - [`groundstate`]: a Lanczos solver for the lowest eigenpair.
//! - [`rdm`]: reduced density matrices and exact invariants (partial
//!   reflection, partial time reversal, D₂ and Klein bottle).
//! - [`protocols`]: CUE sampling, correlated unitary patterns, simulated
//!   measurement campaigns and the Hamming-weighted estimators.
//! - [`dynamics`]: Trotterized adiabatic ramps from the Néel state.
//! - [`analysis`]: sweeps, correlation-length fits and error-scaling scans.
//!
//! # Conventions
//!
//! Sites are indexed from 0. Site `k` is stored in bit `k` of a basis-state
//! index, and spin up (`↑`) is bit value 0 with `σᶻ|↑⟩ = +|↑⟩`.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod groundstate;
pub mod hamiltonian;
pub mod protocols;
pub mod rdm;
pub mod rng;
pub mod spin;
pub mod stats;

pub use error::{Error, Result};
pub use groundstate::{ground_state, EigenResult, LanczosOptions};
pub use hamiltonian::HamiltonianSpec;
pub use protocols::{EstimatorResult, MeasurementRecord, ProtocolKind, ProtocolParams};
pub use rdm::{InvariantKind, InvariantValue, PartitionSpec, ReducedDensityMatrix};
pub use spin::{Bitstring, LocalUnitary, StateVector, C64};
