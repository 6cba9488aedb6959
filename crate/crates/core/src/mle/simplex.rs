use crate::quantum::linalg::{eigh, from_spectrum, hermitian_part};
use crate::quantum::{CMatrix, DensityMatrix};

/// Euclidean projection onto `{x : x_i ≥ 0, Σ x_i = 1}`.
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Nearest density matrix of rank at most `rank` in the eigenvalue sense:
/// eigenvectors are kept, the top `rank` eigenvalues are projected onto the
/// simplex and the rest are zeroed.
pub fn project_density(candidate: &CMatrix, rank: usize) -> DensityMatrix {
    DensityMatrix::from_trusted(project_matrix(candidate, rank))
}

pub(crate) fn project_matrix(candidate: &CMatrix, rank: usize) -> CMatrix {
    let (values, vectors) = eigh(candidate);
    let rank = rank.clamp(1, values.len());
    let mut projected = simplex_project(&values[..rank]);
    projected.resize(values.len(), 0.0);
    hermitian_part(&from_spectrum(&projected, &vectors))
}
