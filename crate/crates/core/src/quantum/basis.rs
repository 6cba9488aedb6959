use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::linalg::{kron, unitarity_residual, CMatrix};
use super::state::StateVector;
use crate::error::{Result, TomoError};

/// Orthonormality tolerance for projective bases.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Tensor-product structure `H_{d_1} ⊗ … ⊗ H_{d_l}` of the system space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteStructure {
    factor_dims: Vec<usize>,
}

impl BipartiteStructure {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() {
            return Err(TomoError::InvalidSplit("no factors".into()));
        }
        if let Some(d) = factor_dims.iter().find(|&&d| d < 2) {
            return Err(TomoError::InvalidSplit(format!("factor dimension {d} < 2")));
        }
        Ok(Self { factor_dims })
    }

    /// Two identical factors of dimension `d`.
    pub fn symmetric(d: usize) -> Result<Self> {
        Self::new(vec![d, d])
    }

    /// Two identical factors whose product is `total_dim`.
    pub fn square(total_dim: usize) -> Result<Self> {
        let d = (total_dim as f64).sqrt().round() as usize;
        if d * d != total_dim {
            return Err(TomoError::InvalidSplit(format!("{total_dim} is not a perfect square")));
        }
        Self::symmetric(d)
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn total_dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    /// `(d_A, d_B)` for a two-factor split.
    pub fn bipartite_dims(&self) -> Result<(usize, usize)> {
        match self.factor_dims.as_slice() {
            &[a, b] => Ok((a, b)),
            _ => Err(TomoError::InvalidSplit(format!("expected two factors, found {}", self.factor_dims.len()))),
        }
    }
}

/// Orthonormal basis defining one rank-1 projective measurement.
///
/// Basis vectors are stored as the columns of a unitary matrix. Bases built
/// as tensor products remember the factor index pair `(i, j)` of each element.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveBasis {
    vectors: CMatrix,
    labels: Option<Vec<(usize, usize)>>,
}

impl ProjectiveBasis {
    /// Validates that the columns of `vectors` are orthonormal.
    pub fn from_unitary(vectors: CMatrix) -> Result<Self> {
        if vectors.nrows() != vectors.ncols() || vectors.nrows() == 0 {
            return Err(TomoError::DimensionMismatch { expected: vectors.nrows(), found: vectors.ncols() });
        }
        let residual = unitarity_residual(&vectors);
        if !(residual <= ORTHONORMAL_TOL) {
            return Err(TomoError::NotOrthonormal { residual });
        }
        Ok(Self { vectors, labels: None })
    }

    pub fn from_vectors(vectors: &[StateVector]) -> Result<Self> {
        let dim = vectors.first().map(StateVector::dim).unwrap_or(0);
        if vectors.len() != dim {
            return Err(TomoError::DimensionMismatch { expected: dim, found: vectors.len() });
        }
        let mut m = CMatrix::zeros(dim, dim);
        for (k, v) in vectors.iter().enumerate() {
            if v.dim() != dim {
                return Err(TomoError::DimensionMismatch { expected: dim, found: v.dim() });
            }
            m.set_column(k, v.amplitudes());
        }
        Self::from_unitary(m)
    }

    pub fn computational(dim: usize) -> Self {
        Self { vectors: CMatrix::identity(dim, dim), labels: None }
    }

    /// Discrete Fourier basis `|k⟩ = Σ_j ω^{jk} |j⟩ / √D`.
    pub fn fourier(dim: usize) -> Self {
        let scale = 1.0 / (dim as f64).sqrt();
        let m = CMatrix::from_fn(dim, dim, |j, k| {
            let angle = 2.0 * std::f64::consts::PI * (j * k) as f64 / dim as f64;
            C64::from_polar(scale, angle)
        });
        Self { vectors: m, labels: None }
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    /// Columns are the basis vectors.
    pub fn unitary(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> StateVector {
        StateVector::new(self.vectors.column(k).into_owned()).expect("basis vectors are normalized")
    }

    pub fn labels(&self) -> Option<&[(usize, usize)]> {
        self.labels.as_deref()
    }

    /// `U · self`, i.e. every basis vector rotated by `u`.
    pub fn rotated(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(TomoError::DimensionMismatch { expected: self.dim(), found: u.nrows() });
        }
        Self::from_unitary(u * &self.vectors)
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        unitarity_residual(&self.vectors)
    }

    pub(crate) fn from_trusted(vectors: CMatrix, labels: Option<Vec<(usize, usize)>>) -> Self {
        Self { vectors, labels }
    }
}

/// Product basis `{|α_i⟩ ⊗ |β_j⟩}` with element `(i, j)` at index `i·d_B + j`.
pub fn tensor_basis(a: &ProjectiveBasis, b: &ProjectiveBasis) -> ProjectiveBasis {
    let vectors = kron(a.unitary(), b.unitary());
    let db = b.dim();
    let labels = (0..a.dim() * db).map(|k| (k / db, k % db)).collect();
    ProjectiveBasis { vectors, labels: Some(labels) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn computational_tensor_computational_is_computational() {
        let b = tensor_basis(&ProjectiveBasis::computational(2), &ProjectiveBasis::computational(2));
        assert_eq!(b.unitary(), &CMatrix::identity(4, 4));
        assert_eq!(b.labels().unwrap(), &[(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn identity_tensor_fourier_is_orthonormal() {
        let b = tensor_basis(&ProjectiveBasis::computational(2), &ProjectiveBasis::fourier(2));
        assert!(b.orthonormality_residual() < 1e-12);
    }

    #[test]
    fn split_validation() {
        assert!(BipartiteStructure::new(vec![3, 1]).is_err());
        assert!(BipartiteStructure::square(8).is_err());
        let s = BipartiteStructure::square(36).unwrap();
        assert_eq!(s.bipartite_dims().unwrap(), (6, 6));
        assert!(BipartiteStructure::new(vec![2, 2, 2]).unwrap().bipartite_dims().is_err());
    }

    #[test]
    fn non_orthonormal_rejected() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = C64::new(0.5, 0.0);
        assert!(matches!(ProjectiveBasis::from_unitary(m), Err(TomoError::NotOrthonormal { .. })));
    }
}
