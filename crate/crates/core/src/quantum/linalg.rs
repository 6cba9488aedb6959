//! Small dense linear-algebra helpers shared across the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Hermitian eigendecomposition with eigenvalues sorted in decreasing order.
///
/// Ties keep the order in which the solver emitted them, so identical inputs
/// always produce identical eigenvector matrices.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `(m + m†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// `V diag(values) V†`, summing only over the listed columns.
pub fn from_spectrum(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lam) in values.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        let v = vectors.column(k);
        out.gerc(C64::new(lam, 0.0), &v, &v, C64::new(1.0, 0.0));
    }
    out
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest absolute deviation of `Q†Q` from the identity.
pub fn unitarity_residual(q: &CMatrix) -> f64 {
    let g = q.adjoint() * q;
    max_abs_diff(&g, &CMatrix::identity(q.ncols(), q.ncols()))
}

/// Kronecker product of two column vectors, first factor major.
pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let nb = b.len();
    CVector::from_fn(a.len() * nb, |idx, _| a[idx / nb] * b[idx % nb])
}

/// Kronecker product of two matrices, first factor major.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    CMatrix::from_fn(ra * rb, ca * cb, |r, c| a[(r / rb, c / cb)] * b[(r % rb, c % cb)])
}

/// Frobenius inner product `Re Tr(a† b)`.
pub fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Sum of singular values.
pub fn nuclear_norm(m: &CMatrix) -> f64 {
    m.clone().singular_values().iter().sum()
}

/// Principal square root of a positive semidefinite Hermitian matrix;
/// negative eigenvalues are treated as zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = eigh(m);
    let roots: Vec<f64> = values.iter().map(|&v| v.max(0.0).sqrt()).collect();
    from_spectrum(&roots, &vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_sorts_descending() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(0.1, 0.0),
            C64::new(0.7, 0.0),
            C64::new(0.2, 0.0),
        ]));
        let (vals, vecs) = eigh(&m);
        assert!((vals[0] - 0.7).abs() < 1e-14);
        assert!((vals[1] - 0.2).abs() < 1e-14);
        assert!((vals[2] - 0.1).abs() < 1e-14);
        let back = from_spectrum(&vals, &vecs);
        assert!(max_abs_diff(&back, &m) < 1e-14);
    }

    #[test]
    fn kron_matches_vector_kron() {
        let a = CVector::from_vec(vec![C64::new(1.0, 2.0), C64::new(0.0, -1.0)]);
        let b = CVector::from_vec(vec![C64::new(0.5, 0.0), C64::new(3.0, 1.0), C64::new(-1.0, 0.0)]);
        let am = CMatrix::from_column_slice(2, 1, a.as_slice());
        let bm = CMatrix::from_column_slice(3, 1, b.as_slice());
        let k = kron(&am, &bm);
        let kv = kron_vec(&a, &b);
        for i in 0..6 {
            assert_eq!(k[(i, 0)], kv[i]);
        }
    }
}
