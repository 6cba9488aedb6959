//! Quantum-information primitives on [`DensityMatrix`] and [`StateVector`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::basis::{BipartiteStructure, ProjectiveBasis};
use super::linalg::{eigh, nuclear_norm, psd_sqrt, CMatrix, CVector};
use super::state::{DensityMatrix, StateVector};
use crate::error::{Result, TomoError};

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(TomoError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Outcome probabilities `p_γ = ⟨φ_γ|ρ|φ_γ⟩` of measuring `state` in `basis`.
pub fn born_probabilities(state: &DensityMatrix, basis: &ProjectiveBasis) -> Result<Vec<f64>> {
    check_dims(state.dim(), basis.dim())?;
    let u = basis.unitary();
    let t = state.matrix() * u;
    let probs = (0..basis.dim())
        .map(|g| {
            let p: f64 = u.column(g).dotc(&t.column(g)).re;
            if p < 0.0 && p >= -1e-12 {
                0.0
            } else {
                p
            }
        })
        .collect();
    Ok(probs)
}

/// `Tr|√ρ √σ|`, the square root of the fidelity.
fn root_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho.dim(), sigma.dim())?;
    let a = psd_sqrt(rho.matrix());
    let b = psd_sqrt(sigma.matrix());
    Ok(nuclear_norm(&(a * b)).clamp(0.0, 1.0))
}

/// `F(ρ, σ) = (Tr √(√ρ σ √ρ))²`, evaluated as the squared trace norm of
/// `√ρ √σ` so that nearly pure inputs keep full precision.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let r = root_fidelity(rho, sigma)?;
    Ok(r * r)
}

/// Squared Bures distance `2 − 2√F`.
pub fn bures_distance_sq(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok((2.0 - 2.0 * root_fidelity(rho, sigma)?).max(0.0))
}

/// Purification `|Ψ⟩ = Σ_k √λ_k |k⟩ ⊗ |ψ_k⟩` on `H_R ⊗ H_D`.
///
/// The auxiliary index is the major one: amplitude `(k, i)` sits at `k·D + i`.
/// Slots beyond the numerical rank carry zero weight.
pub fn purify(rho: &DensityMatrix, rank: usize) -> Result<StateVector> {
    let spec = rho.spectrum();
    let numerical_rank = spec.rank();
    if rank < numerical_rank || rank == 0 {
        return Err(TomoError::RankTooSmall { rank, numerical_rank });
    }
    if rank > rho.dim() {
        return Err(TomoError::InvalidRank { rank, dim: rho.dim() });
    }
    Ok(StateVector::new(purification_amplitudes(&spec.values, &spec.vectors, rank))
        .expect("purification of a unit-trace state is normalized"))
}

pub(crate) fn purification_amplitudes(values: &[f64], vectors: &CMatrix, rank: usize) -> CVector {
    let d = vectors.nrows();
    let total: f64 = values.iter().take(rank).map(|v| v.max(0.0)).sum();
    CVector::from_fn(rank * d, |idx, _| {
        let (k, i) = (idx / d, idx % d);
        let lam = if values[k] > super::state::RANK_TOL { values[k] / total } else { 0.0 };
        vectors[(i, k)] * lam.sqrt()
    })
}

/// `Tr_aux |Ψ⟩⟨Ψ|` for an auxiliary-major vector of length `aux_dim · dim`.
pub fn partial_trace_aux(psi: &CVector, aux_dim: usize, dim: usize) -> Result<CMatrix> {
    check_dims(aux_dim * dim, psi.len())?;
    let block = CMatrix::from_column_slice(dim, aux_dim, psi.as_slice());
    Ok(&block * block.adjoint())
}

/// Real representation `[[Re A, −Im A], [Im A, Re A]]` of a complex matrix.
pub fn real_embed_matrix(a: &CMatrix) -> DMatrix<f64> {
    let (r, c) = a.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = a[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Real representation `[Re v; Im v]` of a complex vector.
pub fn real_embed_vector(v: &CVector) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Bipartite normal form `|ψ⟩ = Σ_i √μ_i |a_i⟩ ⊗ |b_i⟩`.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// Squared Schmidt coefficients, decreasing; they sum to one.
    pub coefficients: Vec<f64>,
    /// `|a_i⟩` as columns.
    pub left: CMatrix,
    /// `|b_i⟩` as columns.
    pub right: CMatrix,
}

impl SchmidtDecomposition {
    pub fn reconstruct(&self) -> CVector {
        let da = self.left.nrows();
        let db = self.right.nrows();
        let mut out = CVector::zeros(da * db);
        for (k, mu) in self.coefficients.iter().enumerate() {
            let s = mu.sqrt();
            for i in 0..da {
                for j in 0..db {
                    out[i * db + j] += self.left[(i, k)] * self.right[(j, k)] * s;
                }
            }
        }
        out
    }
}

pub fn schmidt_decompose(psi: &StateVector, split: &BipartiteStructure) -> Result<SchmidtDecomposition> {
    let (da, db) = split.bipartite_dims()?;
    check_dims(da * db, psi.dim())?;
    let amps = psi.amplitudes();
    let m = CMatrix::from_fn(da, db, |i, j| amps[i * db + j]);
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V†");
    let n = svd.singular_values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap().then(a.cmp(&b)));
    let coefficients = order.iter().map(|&k| svd.singular_values[k].powi(2)).collect();
    let left = CMatrix::from_fn(da, n, |i, c| u[(i, order[c])]);
    let right = CMatrix::from_fn(db, n, |j, c| vt[(order[c], j)]);
    Ok(SchmidtDecomposition { coefficients, left, right })
}

/// Reduced state of the first factor.
pub fn reduced_state_a(rho: &DensityMatrix, split: &BipartiteStructure) -> Result<CMatrix> {
    let (da, db) = split.bipartite_dims()?;
    check_dims(da * db, rho.dim())?;
    let m = rho.matrix();
    Ok(CMatrix::from_fn(da, da, |i, k| (0..db).map(|j| m[(i * db + j, k * db + j)]).sum()))
}

/// Partial transpose on the second factor.
pub fn partial_transpose_b(rho: &CMatrix, da: usize, db: usize) -> CMatrix {
    CMatrix::from_fn(da * db, da * db, |r, c| {
        let (i, j) = (r / db, r % db);
        let (k, l) = (c / db, c % db);
        rho[(i * db + l, k * db + j)]
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateMetrics {
    pub purity: f64,
    pub negativity: f64,
}

/// Purity `Tr ρ²` and negativity `(‖ρ^{T_B}‖₁ − 1)/2`.
pub fn state_metrics(rho: &DensityMatrix, split: &BipartiteStructure) -> Result<StateMetrics> {
    let (da, db) = split.bipartite_dims()?;
    check_dims(da * db, rho.dim())?;
    let pt = partial_transpose_b(rho.matrix(), da, db);
    let (values, _) = eigh(&pt);
    let trace_norm: f64 = values.iter().map(|v| v.abs()).sum();
    Ok(StateMetrics { purity: rho.purity(), negativity: ((trace_norm - 1.0) / 2.0).max(0.0) })
}

/// Mean squared Bures distance from each state to the ensemble mean.
pub fn spread(states: &[DensityMatrix]) -> Result<f64> {
    let first = states.first().ok_or_else(|| TomoError::InsufficientData("spread of an empty ensemble".into()))?;
    let d = first.dim();
    let mut mean = CMatrix::zeros(d, d);
    for s in states {
        check_dims(d, s.dim())?;
        mean += s.matrix();
    }
    let mean = DensityMatrix::from_numerical(&mean.unscale(states.len() as f64))?;
    let mut total = 0.0;
    for s in states {
        total += bures_distance_sq(s, &mean)?;
    }
    Ok(total / states.len() as f64)
}

/// Computational-basis projector helper used by tests and nominal states.
pub fn pure_state(amplitudes: &[C64]) -> Result<DensityMatrix> {
    Ok(StateVector::from_vec(amplitudes.to_vec())?.projector())
}
