//! Adaptive quantum state tomography for high-dimensional bipartite systems.
//!
//! The crate is organized bottom-up:
//!
//! - [`quantum`]: complex linear algebra carriers (state vectors, density
//!   matrices, projective bases) and the quantum-information primitives built
//!   on them (Born rule, fidelity, purification, Schmidt decomposition,
//!   entanglement metrics).
//! - [`random`]: seeded Ginibre / Haar / Bures generators.
//! - [`fisher`]: Fisher information of a measurement protocol and the
//!   asymptotic infidelity distribution it implies.
//! - [`mle`]: maximum-likelihood reconstruction by accelerated projected
//!   gradient with adaptive restart.
//! - [`protocols`]: measurement-selection strategies, including the factorized
//!   estimator-orthogonal protocol, mutually unbiased bases and the block-size
//!   schedule.
//! - [`sim`]: end-to-end tomography runs, trajectory aggregation, power-law
//!   fits and the library of reference true states.

pub mod error;
pub mod fisher;
pub mod mle;
pub mod protocols;
pub mod quantum;
pub mod random;
pub mod sim;

pub use error::{Result, TomoError};
pub use quantum::{BipartiteStructure, CMatrix, CVector, DensityMatrix, ProjectiveBasis, StateVector, C64};
pub use random::RngStream;
