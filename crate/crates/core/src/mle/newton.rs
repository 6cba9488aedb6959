//! Newton refinement of full-rank estimates in the interior of the state
//! space, where first-order iterations crawl along weakly determined
//! directions.

use nalgebra::{DMatrix, DVector};

use super::{active_probabilities, TomographyDataset};
use crate::quantum::linalg::eigh;
use crate::quantum::{CMatrix, C64};

/// Problems with more real parameters than this are left to APG alone.
pub(crate) const MAX_PARAMS: usize = 400;
const MAX_STEPS: usize = 30;
const MAX_HALVINGS: usize = 40;
const MIN_EIGENVALUE: f64 = 1e-10;
const ARMIJO: f64 = 1e-4;
/// Newton decrement below which the estimate is final.
const DECREMENT_TOL: f64 = 1e-20;

pub(crate) struct Polished {
    pub estimate: CMatrix,
    pub steps: usize,
    pub converged: bool,
}

/// Index pairs `(i, l)`, `i < l`, in the order used for the off-diagonal
/// coordinates.
fn pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|i| (i + 1..d).map(move |l| (i, l))).collect()
}

/// `⟨φ|B_k|φ⟩` for an orthonormal basis `B_k` of traceless Hermitian
/// matrices: generalized Gell-Mann diagonal elements, then symmetric and
/// antisymmetric off-diagonal pairs.
fn coordinates(phi: &[C64], pairs: &[(usize, usize)]) -> Vec<f64> {
    let d = phi.len();
    let mut out = Vec::with_capacity(d * d - 1);
    let mut partial = 0.0;
    for m in 1..d {
        partial += phi[m - 1].norm_sqr();
        let mf = m as f64;
        out.push((partial - mf * phi[m].norm_sqr()) / (mf * (mf + 1.0)).sqrt());
    }
    let s2 = std::f64::consts::SQRT_2;
    for &(i, l) in pairs {
        let z = phi[i].conj() * phi[l];
        out.push(s2 * z.re);
        out.push(s2 * z.im);
    }
    out
}

/// `Σ_k t_k B_k`.
fn assemble(t: &DVector<f64>, d: usize, pairs: &[(usize, usize)]) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for k in 1..d {
        let kf = k as f64;
        let c = t[k - 1] / (kf * (kf + 1.0)).sqrt();
        for i in 0..k {
            m[(i, i)] += C64::new(c, 0.0);
        }
        m[(k, k)] -= C64::new(kf * c, 0.0);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (n, &(i, l)) in pairs.iter().enumerate() {
        let (a, b) = (t[d - 1 + 2 * n] * h, t[d + 2 * n] * h);
        m[(i, l)] += C64::new(a, -b);
        m[(l, i)] += C64::new(a, b);
    }
    m
}

/// Damped Newton ascent on `Σ w log p` over unit-trace Hermitian matrices,
/// started from the positive definite `x`. Returns `None` when `x` is on or
/// near the boundary or the problem is too large.
pub(crate) fn polish(data: &TomographyDataset, x: &CMatrix) -> Option<Polished> {
    let d = data.dim();
    let n = d * d - 1;
    let total = data.total_counts();
    if n == 0 || n > MAX_PARAMS || total <= 0.0 {
        return None;
    }
    if eigh(x).0.last().copied().unwrap_or(0.0) < MIN_EIGENVALUE {
        return None;
    }
    let prs = pairs(d);
    let z = data.packed_view();
    let rows: Vec<f64> = z
        .column_iter()
        .flat_map(|col| {
            let phi: Vec<C64> = (0..d).map(|i| C64::new(col[i], col[i + d])).collect();
            coordinates(&phi, &prs)
        })
        .collect();
    let a = DMatrix::from_row_slice(data.num_active(), n, &rows);
    let w: Vec<f64> = data.active_counts().iter().map(|c| c / total).collect();

    let mut x = x.clone();
    let mut steps = 0;
    let mut converged = false;
    for _ in 0..MAX_STEPS {
        let p = active_probabilities(data, &x);
        if p.iter().any(|&v| v <= 0.0) {
            break;
        }
        let s1 = DVector::from_iterator(p.len(), w.iter().zip(&p).map(|(w, p)| w / p));
        let grad = a.transpose() * &s1;
        let mut weighted = a.clone();
        for (mut row, (wj, pj)) in weighted.row_iter_mut().zip(w.iter().zip(&p)) {
            row *= (wj / (pj * pj)).sqrt();
        }
        let hess = weighted.transpose() * &weighted;
        let Some(chol) = hess.cholesky() else { break };
        let dir = chol.solve(&grad);
        let decrement = grad.dot(&dir);
        if !(decrement.is_finite()) || decrement < DECREMENT_TOL {
            converged = decrement.is_finite();
            break;
        }
        let dp = &a * &dir;
        let delta = assemble(&dir, d, &prs);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let feasible = p.iter().zip(dp.iter()).all(|(p, q)| p + alpha * q > 0.0);
            if feasible {
                let candidate = &x + delta.scale(alpha);
                if eigh(&candidate).0.last().copied().unwrap_or(0.0) > 0.0 {
                    let gain: f64 =
                        w.iter().zip(p.iter().zip(dp.iter())).map(|(w, (p, q))| w * (alpha * q / p).ln_1p()).sum();
                    if gain >= ARMIJO * alpha * decrement {
                        x = candidate;
                        accepted = true;
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            // rounding dominates the predicted gain
            converged = decrement < 1e-12;
            break;
        }
        steps += 1;
    }
    Some(Polished { estimate: x, steps, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_match_assembled_basis() {
        let d = 4;
        let prs = pairs(d);
        let phi: Vec<C64> = (0..d).map(|i| C64::new(0.3 * i as f64 - 0.4, 0.2 + 0.1 * i as f64)).collect();
        let coords = coordinates(&phi, &prs);
        let v = CMatrix::from_fn(d, 1, |i, _| phi[i]);
        for k in 0..d * d - 1 {
            let mut t = DVector::zeros(d * d - 1);
            t[k] = 1.0;
            let b = assemble(&t, d, &prs);
            assert!(b.trace().norm() < 1e-14);
            assert!((b.norm() - 1.0).abs() < 1e-14, "basis element {k} is not normalized");
            let expect = (v.adjoint() * &b * &v)[(0, 0)];
            assert!((expect.re - coords[k]).abs() < 1e-14 && expect.im.abs() < 1e-14);
        }
    }
}
