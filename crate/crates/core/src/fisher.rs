//! Fisher information of a projective measurement protocol and the
//! asymptotic distribution of the infidelity it implies.
//!
//! The state is parameterized by the real embedding `c` of its purification
//! `|Ψ⟩ = Σ_k √λ_k |k⟩⊗|ψ_k⟩`, so that every outcome probability is the
//! quadratic form `p = cᵀ O c`. For the Poisson likelihood with expected
//! counts `b p` the Fisher matrix is `H = Σ (4b/p) O c cᵀ O`; `cᵀ H c = 4N`
//! and `c` is the top singular vector. The remaining singular values
//! `σ_2 … σ_{ν+1}` set the asymptotic law `1 − F = Σ ξ_i² / σ_i`.
//!
//! Elements with zero outcome probability are taken in the limit where the
//! vanishing eigenvalues of `ρ` go to zero at a common rate: `O c / √p` then
//! tends to the normalized projection of the measurement vector onto the
//! kernel eigenvectors, which gives a finite rank-one contribution. This is
//! what lets estimator-orthogonal measurements raise the rank of `H`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Result, TomoError};
use crate::quantum::{real_embed_vector, CMatrix, CVector, DensityMatrix, ProjectiveBasis, RANK_TOL};

/// Singular values below `ZERO_SIGMA_REL · σ_1` count as zero.
pub const ZERO_SIGMA_REL: f64 = 1e-8;
/// Outcome probabilities at or below this are handled by the limit rule.
pub const ZERO_PROBABILITY: f64 = 1e-13;

/// Real symmetric `2RD × 2RD` Fisher information matrix.
#[derive(Debug, Clone)]
pub struct FisherMatrix {
    dim: usize,
    rank: usize,
    matrix: DMatrix<f64>,
    singular_values: Vec<f64>,
    total_counts: f64,
}

impl FisherMatrix {
    fn from_matrix(dim: usize, rank: usize, matrix: DMatrix<f64>, total_counts: f64) -> Self {
        let eig = matrix.clone().symmetric_eigen();
        let mut singular_values: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
        singular_values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Self { dim, rank, matrix, singular_values, total_counts }
    }

    /// Diagonal Fisher matrix with the given singular values, padded with
    /// zeros up to `2·rank·dim`.
    pub fn from_singular_values(dim: usize, rank: usize, sigmas: &[f64]) -> Result<Self> {
        let n = 2 * rank * dim;
        if sigmas.len() > n {
            return Err(TomoError::DimensionMismatch { expected: n, found: sigmas.len() });
        }
        let mut diag = DVector::zeros(n);
        for (i, s) in sigmas.iter().enumerate() {
            diag[i] = *s;
        }
        let total = sigmas.first().copied().unwrap_or(0.0) / 4.0;
        Ok(Self::from_matrix(dim, rank, DMatrix::from_diagonal(&diag), total))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Sorted in decreasing order.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Expected total counts `N = Σ b p` of the protocol.
    pub fn total_counts(&self) -> f64 {
        self.total_counts
    }

    /// Number of singular values above `ZERO_SIGMA_REL · σ_1`.
    pub fn numerical_rank(&self) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values.iter().filter(|&&s| s > ZERO_SIGMA_REL * top).count()
    }
}

/// Degrees-of-freedom bookkeeping for the infidelity law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DofSpec {
    pub state_rank: usize,
    pub estimator_rank: usize,
    pub dim: usize,
    /// `ν = 2 R_e D − R_e² − 1`.
    pub nu: usize,
}

impl DofSpec {
    pub fn with_state_rank(mut self, state_rank: usize) -> Result<Self> {
        if state_rank == 0 || state_rank > self.dim {
            return Err(TomoError::InvalidRank { rank: state_rank, dim: self.dim });
        }
        self.state_rank = state_rank;
        Ok(self)
    }

    /// `2 R_s D − R_s² − 1`.
    pub fn state_nu(&self) -> usize {
        2 * self.state_rank * self.dim - self.state_rank * self.state_rank - 1
    }
}

/// Degrees of freedom of a rank-`estimator_rank` state in dimension `dim`.
pub fn dof(estimator_rank: usize, dim: usize) -> Result<DofSpec> {
    if estimator_rank == 0 || estimator_rank > dim {
        return Err(TomoError::InvalidRank { rank: estimator_rank, dim });
    }
    let r = estimator_rank;
    let nu = 2 * r * dim - r * r - 1;
    if nu == 0 {
        return Err(TomoError::InvalidArgument(format!("no degrees of freedom at D = {dim}")));
    }
    Ok(DofSpec { state_rank: r, estimator_rank: r, dim, nu })
}

/// Fisher information of `protocol` (bases with their block sizes `b_α`)
/// at state `rho`, parameterized through a rank-`rank` purification.
pub fn fisher_information(
    rho: &DensityMatrix,
    rank: usize,
    protocol: &[(ProjectiveBasis, f64)],
) -> Result<FisherMatrix> {
    let d = rho.dim();
    if rank == 0 || rank > d {
        return Err(TomoError::InvalidRank { rank, dim: d });
    }
    let spec = rho.spectrum();
    let numerical_rank = spec.rank();
    if rank < numerical_rank {
        return Err(TomoError::RankTooSmall { rank, numerical_rank });
    }
    let total: f64 = spec.values.iter().take(rank).map(|v| v.max(0.0)).sum();
    let weights: Vec<f64> =
        spec.values[..rank].iter().map(|&v| if v > RANK_TOL { (v / total).sqrt() } else { 0.0 }).collect();
    let eigvecs = spec.vectors.columns(0, rank).into_owned();

    let n = 2 * rank * d;
    let mut columns: Vec<DVector<f64>> = Vec::new();
    let mut expected_counts = 0.0;
    for (basis, block) in protocol {
        if basis.dim() != d {
            return Err(TomoError::DimensionMismatch { expected: d, found: basis.dim() });
        }
        if !(*block >= 0.0) {
            return Err(TomoError::NegativeBlock(*block));
        }
        // overlaps[(γ, k)] = ⟨φ_γ|ψ_k⟩
        let overlaps: CMatrix = basis.unitary().adjoint() * &eigvecs;
        for g in 0..d {
            let a: Vec<_> = (0..rank).map(|k| overlaps[(g, k)] * weights[k]).collect();
            let p: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            expected_counts += block * p;
            let direction: Vec<_> = if p > ZERO_PROBABILITY {
                a.iter().map(|z| z / p.sqrt()).collect()
            } else {
                let kernel: Vec<_> =
                    (0..rank).map(|k| if weights[k] == 0.0 { overlaps[(g, k)] } else { Default::default() }).collect();
                let norm: f64 = kernel.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm < 1e-10 {
                    continue;
                }
                kernel.iter().map(|z| z / norm).collect()
            };
            let phi = basis.unitary().column(g);
            let u = CVector::from_fn(rank * d, |idx, _| direction[idx / d] * phi[idx % d]);
            columns.push(real_embed_vector(&u) * (4.0 * block).sqrt());
        }
    }
    let matrix = if columns.is_empty() {
        DMatrix::zeros(n, n)
    } else {
        let v = DMatrix::from_columns(&columns);
        &v * v.transpose()
    };
    Ok(FisherMatrix::from_matrix(d, rank, matrix, expected_counts))
}

/// `⟨1 − F⟩` and `Δ(1 − F)` of the asymptotic infidelity law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfidelityMoments {
    pub mean: f64,
    pub stdev: f64,
}

fn summation_range<'a>(h: &'a FisherMatrix, dof: &DofSpec) -> Result<&'a [f64]> {
    if dof.dim != h.dim() {
        return Err(TomoError::DimensionMismatch { expected: h.dim(), found: dof.dim });
    }
    let sig = h.singular_values();
    if sig.len() < dof.nu + 1 {
        return Err(TomoError::DimensionMismatch { expected: dof.nu + 1, found: sig.len() });
    }
    let top = sig[0];
    let zero: Vec<usize> = (1..=dof.nu).filter(|&i| !(sig[i] > ZERO_SIGMA_REL * top)).map(|i| i + 1).collect();
    if !zero.is_empty() {
        return Err(TomoError::ZeroSingularValues { indices: zero });
    }
    Ok(&sig[1..=dof.nu])
}

/// `⟨1 − F⟩ = Σ 1/σ_i`, `Δ(1 − F) = √(Σ 2/σ_i²)` over `i = 2 … ν+1`.
///
/// Fails with the (1-based) indices of any zero singular value in range.
pub fn infidelity_moments(h: &FisherMatrix, dof: &DofSpec) -> Result<InfidelityMoments> {
    let range = summation_range(h, dof)?;
    let mean = range.iter().map(|s| 1.0 / s).sum();
    let stdev = range.iter().map(|s| 2.0 / (s * s)).sum::<f64>().sqrt();
    Ok(InfidelityMoments { mean, stdev })
}

/// One draw of `Σ ξ_i² / σ_i` with independent standard normal `ξ_i`.
pub fn sample_infidelity<R: Rng + ?Sized>(h: &FisherMatrix, dof: &DofSpec, rng: &mut R) -> Result<f64> {
    let range = summation_range(h, dof)?;
    Ok(range
        .iter()
        .map(|s| {
            let xi: f64 = rng.sample(StandardNormal);
            xi * xi / s
        })
        .sum())
}

/// Reference-line coefficient `k` of the bound `d_B² = k/N` quoted for the
/// simulated configurations (D = 9 pure / mixed, D = 36 pure).
pub fn gill_massar_coefficient(dim: usize, pure: bool) -> Option<f64> {
    match (dim, pure) {
        (9, true) => Some(8.0),
        (9, false) => Some(200.0),
        (36, true) => Some(35.0),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::purification_amplitudes;
    use crate::quantum::StateVector;
    use crate::random::{basis_containing, bures_random_state, haar_basis, haar_pure_state, RngStream};

    fn random_protocol(d: usize, bases: usize, rng: &mut RngStream) -> Vec<(ProjectiveBasis, f64)> {
        (0..bases).map(|_| (haar_basis(d, rng), 100.0 + rng.random::<f64>() * 900.0)).collect()
    }

    fn c_vector(rho: &DensityMatrix, rank: usize) -> DVector<f64> {
        let spec = rho.spectrum();
        real_embed_vector(&purification_amplitudes(&spec.values, &spec.vectors, rank))
    }

    #[test]
    fn quadratic_form_on_c_is_four_n() {
        let mut rng = RngStream::new(1, 0);
        for d in [3usize, 4] {
            for _ in 0..10 {
                let r = 1 + (rng.random::<u32>() as usize % d);
                let rho = bures_random_state(d, r, &mut rng).unwrap();
                let protocol = random_protocol(d, d + 1, &mut rng);
                let h = fisher_information(&rho, r, &protocol).unwrap();
                let c = c_vector(&rho, r);
                let chc = (c.transpose() * h.matrix() * &c)[(0, 0)];
                let n: f64 = protocol.iter().map(|(_, b)| b).sum();
                assert!((chc - 4.0 * n).abs() < 1e-8 * 4.0 * n);
                assert!((h.singular_values()[0] - 4.0 * n).abs() < 1e-8 * 4.0 * n);
                assert!((h.total_counts() - n).abs() < 1e-9 * n);
            }
        }
    }

    #[test]
    fn pure_state_rank() {
        let mut rng = RngStream::new(2, 0);
        let rho = haar_pure_state(3, &mut rng).projector();
        let h = fisher_information(&rho, 1, &random_protocol(3, 4, &mut rng)).unwrap();
        assert_eq!(h.numerical_rank(), 5);
    }

    #[test]
    fn scalar_system() {
        let rho = DensityMatrix::maximally_mixed(1);
        let h = fisher_information(&rho, 1, &[(ProjectiveBasis::computational(1), 250.0)]).unwrap();
        assert!((h.singular_values()[0] - 1000.0).abs() < 1e-10);
        assert!((h.matrix()[(0, 0)] - 1000.0).abs() < 1e-10);
        assert_eq!(h.numerical_rank(), 1);
    }

    #[test]
    fn rank_law_and_orthogonal_increments() {
        // R_s = 1, R_e = 2 at D = 4: rank 2·4 − 1 = 7, saturating at 2·2·4 − 4 = 12
        let mut rng = RngStream::new(3, 0);
        let psi = haar_pure_state(4, &mut rng);
        let rho = psi.projector();
        let mut protocol = random_protocol(4, 5, &mut rng);
        assert_eq!(fisher_information(&rho, 2, &protocol).unwrap().numerical_rank(), 7);
        for k in 1..=6 {
            // random vector orthogonal to ψ, completed to a basis
            let v = haar_pure_state(4, &mut rng);
            let overlap = psi.inner(&v);
            let orth = StateVector::new(v.amplitudes() - psi.amplitudes() * overlap).unwrap();
            protocol.push((basis_containing(&orth, &mut rng).unwrap(), 500.0));
            let rank = fisher_information(&rho, 2, &protocol).unwrap().numerical_rank();
            assert_eq!(rank, (7 + k).min(12), "after {k} orthogonal measurements");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let rho = DensityMatrix::maximally_mixed(3);
        let p = vec![(ProjectiveBasis::computational(3), -1.0)];
        assert_eq!(fisher_information(&rho, 3, &p).unwrap_err(), TomoError::NegativeBlock(-1.0));
        let p = vec![(ProjectiveBasis::computational(2), 1.0)];
        assert!(matches!(fisher_information(&rho, 3, &p), Err(TomoError::DimensionMismatch { .. })));
        assert!(matches!(fisher_information(&rho, 2, &[]), Err(TomoError::RankTooSmall { .. })));
    }

    #[test]
    fn dof_examples() {
        assert_eq!(dof(1, 9).unwrap().nu, 16);
        assert_eq!(dof(9, 9).unwrap().nu, 80);
        assert_eq!(dof(2, 3).unwrap().nu, 7);
        assert!(dof(0, 3).is_err());
        assert!(dof(4, 3).is_err());
    }

    #[test]
    fn equal_spectrum_moments() {
        let d = dof(1, 3).unwrap(); // ν = 4
        let h = FisherMatrix::from_singular_values(3, 1, &[40.0, 10.0, 10.0, 10.0, 10.0]).unwrap();
        let m = infidelity_moments(&h, &d).unwrap();
        assert!((m.mean - 4.0 / 10.0).abs() < 1e-15);
        assert!((m.stdev - (8.0f64).sqrt() / 10.0).abs() < 1e-15);
    }

    #[test]
    fn moments_scale_inversely_with_counts() {
        let mut rng = RngStream::new(4, 0);
        let rho = bures_random_state(3, 3, &mut rng).unwrap();
        let protocol = random_protocol(3, 6, &mut rng);
        let scaled: Vec<_> = protocol.iter().map(|(b, n)| (b.clone(), 10.0 * n)).collect();
        let d = dof(3, 3).unwrap();
        let m1 = infidelity_moments(&fisher_information(&rho, 3, &protocol).unwrap(), &d).unwrap();
        let m2 = infidelity_moments(&fisher_information(&rho, 3, &scaled).unwrap(), &d).unwrap();
        assert!((m1.mean / m2.mean - 10.0).abs() < 1e-8);
        assert!((m1.stdev / m2.stdev - 10.0).abs() < 1e-8);
    }

    #[test]
    fn moments_match_direct_sum() {
        let mut rng = RngStream::new(5, 0);
        let rho = bures_random_state(3, 2, &mut rng).unwrap();
        let h = fisher_information(&rho, 2, &random_protocol(3, 5, &mut rng)).unwrap();
        let d = dof(2, 3).unwrap();
        let m = infidelity_moments(&h, &d).unwrap();
        let s = h.singular_values();
        let mut mean = 0.0;
        let mut var = 0.0;
        for i in 2..=d.nu + 1 {
            mean += 1.0 / s[i - 1];
            var += 2.0 / (s[i - 1] * s[i - 1]);
        }
        assert!((m.mean - mean).abs() < 1e-14 * mean.abs().max(1.0));
        assert!((m.stdev - var.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn zero_singular_values_are_reported() {
        let mut rng = RngStream::new(6, 0);
        let rho = haar_pure_state(3, &mut rng).projector();
        let h = fisher_information(&rho, 2, &random_protocol(3, 4, &mut rng)).unwrap();
        // rank 5 but ν + 1 = 8 terms requested
        let err = infidelity_moments(&h, &dof(2, 3).unwrap()).unwrap_err();
        assert_eq!(err, TomoError::ZeroSingularValues { indices: vec![6, 7, 8] });
    }

    #[test]
    fn chi_squared_case() {
        let h = FisherMatrix::from_singular_values(1, 1, &[4.0, 1.0]).unwrap();
        let d = DofSpec { state_rank: 1, estimator_rank: 1, dim: 1, nu: 1 };
        let mut rng = RngStream::new(7, 0);
        let draws: Vec<f64> = (0..100_000).map(|_| sample_infidelity(&h, &d, &mut rng).unwrap()).collect();
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((mean - 1.0).abs() < 5.0 * sd / n.sqrt());
    }

    #[test]
    fn sampled_stdev_matches_formula() {
        let mut rng = RngStream::new(8, 0);
        let rho = bures_random_state(3, 3, &mut rng).unwrap();
        let h = fisher_information(&rho, 3, &random_protocol(3, 5, &mut rng)).unwrap();
        let d = dof(3, 3).unwrap();
        let m = infidelity_moments(&h, &d).unwrap();
        let draws: Vec<f64> = (0..100_000).map(|_| sample_infidelity(&h, &d, &mut rng).unwrap()).collect();
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let fourth = draws.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        // standard error of the sample variance
        let se_var = ((fourth - var * var) / n).sqrt();
        assert!((var - m.stdev * m.stdev).abs() < 5.0 * se_var);
        assert!((mean - m.mean).abs() < 5.0 * var.sqrt() / n.sqrt());
        let again: Vec<f64> = {
            let mut r1 = RngStream::new(9, 1);
            (0..3).map(|_| sample_infidelity(&h, &d, &mut r1).unwrap()).collect()
        };
        let mut r2 = RngStream::new(9, 1);
        let twice: Vec<f64> = (0..3).map(|_| sample_infidelity(&h, &d, &mut r2).unwrap()).collect();
        assert_eq!(again, twice);
    }

    #[test]
    fn zero_probability_without_kernel_is_skipped() {
        // full-rank slots only: a computational-basis projector state measured
        // in the computational basis has p = 0 outcomes with no kernel slot
        let rho = StateVector::basis(2, 0).projector();
        let h = fisher_information(&rho, 1, &[(ProjectiveBasis::computational(2), 10.0)]).unwrap();
        assert_eq!(h.numerical_rank(), 1);
    }

    #[test]
    fn reference_lines() {
        assert_eq!(gill_massar_coefficient(9, true), Some(8.0));
        assert_eq!(gill_massar_coefficient(9, false), Some(200.0));
        assert_eq!(gill_massar_coefficient(36, true), Some(35.0));
        assert_eq!(gill_massar_coefficient(4, true), None);
    }
}
