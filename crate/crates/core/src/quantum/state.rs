use num_complex::Complex64 as C64;

use super::linalg::{eigh, from_spectrum, hermitian_part, CMatrix, CVector};
use crate::error::{Result, TomoError};

/// Hermiticity tolerance for validated density matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance for validated density matrices.
pub const TRACE_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted as a rounding artefact.
pub const EIGEN_FLOOR: f64 = -1e-10;
/// Eigenvalues above this count towards the numerical rank.
pub const RANK_TOL: f64 = 1e-10;

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
}

impl StateVector {
    /// Normalizes `amplitudes`; fails on a zero or non-finite vector.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(TomoError::ZeroVector);
        }
        Ok(Self { amplitudes: amplitudes.unscale(norm) })
    }

    pub fn from_vec(amplitudes: Vec<C64>) -> Result<Self> {
        Self::new(CVector::from_vec(amplitudes))
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_inner(self) -> CVector {
        self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Equality up to a global phase: `|⟨a|b⟩| > 1 - 1e-10`.
    pub fn eq_up_to_phase(&self, other: &StateVector) -> bool {
        self.dim() == other.dim() && self.inner(other).norm() > 1.0 - 1e-10
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix { matrix: m }
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

/// Eigenvalues (decreasing) and the matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn rank(&self) -> usize {
        self.values.iter().filter(|&&v| v > RANK_TOL).count()
    }

    pub fn vector(&self, k: usize) -> StateVector {
        StateVector { amplitudes: self.vectors.column(k).into_owned() }
    }
}

impl DensityMatrix {
    /// Validates hermiticity, trace and positivity.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(TomoError::InvalidDensityMatrix(format!(
                "shape {}x{} is not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(TomoError::InvalidDensityMatrix("non-finite entry".into()));
        }
        let herm_err = super::linalg::max_abs_diff(&matrix, &matrix.adjoint());
        if herm_err > HERMITIAN_TOL {
            return Err(TomoError::InvalidDensityMatrix(format!("not Hermitian (residual {herm_err:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(TomoError::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        let (values, _) = eigh(&matrix);
        let min = values.last().copied().unwrap_or(0.0);
        if min < EIGEN_FLOOR {
            return Err(TomoError::InvalidDensityMatrix(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix: hermitian_part(&matrix) })
    }

    /// Builds a state from the output of a numerical routine: the Hermitian
    /// part is taken, negative eigenvalues are clamped to zero and the trace
    /// renormalized.
    pub fn from_numerical(matrix: &CMatrix) -> Result<Self> {
        let (values, vectors) = eigh(matrix);
        Self::from_spectrum(&values, &vectors)
    }

    /// `Σ λ_k |v_k⟩⟨v_k|` after clamping negatives and renormalizing.
    pub fn from_spectrum(values: &[f64], vectors: &CMatrix) -> Result<Self> {
        let clamped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(TomoError::InvalidDensityMatrix("zero or non-finite spectrum".into()));
        }
        let normalized: Vec<f64> = clamped.iter().map(|v| v / total).collect();
        let m = from_spectrum(&normalized, vectors);
        Ok(Self { matrix: hermitian_part(&m) })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim, dim).unscale(dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> Spectrum {
        let (values, vectors) = eigh(&self.matrix);
        Spectrum { values, vectors }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectrum().values
    }

    pub fn rank(&self) -> usize {
        self.spectrum().rank()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(2, 2).unscale(2.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(TomoError::InvalidDensityMatrix(_))));
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(1.1, 0.0), C64::new(-0.1, 0.0)]));
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn from_numerical_clamps_and_renormalizes() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(0.6, 0.0),
            C64::new(-1e-11, 0.0),
            C64::new(0.4, 0.0),
        ]));
        let rho = DensityMatrix::from_numerical(&m).unwrap();
        let vals = rho.eigenvalues();
        assert!((vals[0] - 0.6).abs() < 1e-12);
        assert!(vals[2].abs() < 1e-15);
        assert_eq!(rho.rank(), 2);
    }

    #[test]
    fn zero_vector_is_rejected() {
        assert_eq!(StateVector::new(CVector::zeros(3)), Err(TomoError::ZeroVector));
    }

    #[test]
    fn global_phase_equality() {
        let a = StateVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]).unwrap();
        let phase = C64::from_polar(1.0, 0.7);
        let b = StateVector::new(a.amplitudes() * phase).unwrap();
        assert!(a.eq_up_to_phase(&b));
        let c = StateVector::basis(2, 0);
        assert!(!a.eq_up_to_phase(&c));
    }
}
