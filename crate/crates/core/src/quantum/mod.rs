//! Complex linear-algebra domain types and quantum-information primitives.

mod basis;
pub mod linalg;
mod ops;
mod state;

pub use basis::{tensor_basis, BipartiteStructure, ProjectiveBasis, ORTHONORMAL_TOL};
pub use linalg::{CMatrix, CVector};
pub use num_complex::Complex64 as C64;
#[cfg(test)]
pub(crate) use ops::purification_amplitudes;
pub use ops::{
    born_probabilities, bures_distance_sq, fidelity, partial_trace_aux, partial_transpose_b, pure_state, purify,
    real_embed_matrix, real_embed_vector, reduced_state_a, schmidt_decompose, spread, state_metrics,
    SchmidtDecomposition, StateMetrics,
};
pub use state::{DensityMatrix, Spectrum, StateVector, EIGEN_FLOOR, RANK_TOL};
