//! Seeded random generation: Ginibre matrices, Haar unitaries, Haar pure
//! states, random bases completed around a fixed vector and Bures-distributed
//! mixed states.
//!
//! Every generator draws from an [`RngStream`], a ChaCha20 generator keyed by
//! a 64-bit seed and a 64-bit stream id. Distinct streams under one seed are
//! statistically independent, so each tomography run (and each purpose inside
//! a run) gets its own stream and results do not depend on scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, TomoError};
use crate::quantum::{CMatrix, CVector, DensityMatrix, ProjectiveBasis, StateVector, C64};

/// Reproducible random stream identified by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent child stream, derived deterministically from this one.
    pub fn fork(&mut self) -> RngStream {
        let seed = self.rng.next_u64();
        RngStream::new(seed, self.stream)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `n × m` matrix with independent standard normal real and imaginary parts.
pub fn ginibre<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> CMatrix {
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut out = CMatrix::zeros(n, m);
    for c in 0..m {
        for r in 0..n {
            out[(r, c)] = complex_normal(rng);
        }
    }
    out
}

/// Unitary factor of a QR decomposition with the phases of `R`'s diagonal
/// moved into `Q`, so that `R` has a positive diagonal.
fn unitary_from_qr(g: CMatrix) -> CMatrix {
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Haar-distributed `n × n` unitary.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    unitary_from_qr(ginibre(n, n, rng))
}

/// Haar-random basis of dimension `n`.
pub fn haar_basis<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ProjectiveBasis {
    ProjectiveBasis::from_trusted(haar_unitary(n, rng), None)
}

/// Pure state distributed as the first column of a Haar unitary.
pub fn haar_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    let v = CVector::from_fn(dim, |_, _| complex_normal(rng));
    StateVector::new(v).expect("a Gaussian vector is nonzero with probability one")
}

/// Random orthonormal basis whose first element is exactly `phi`; the other
/// elements are Haar-uniform on the orthogonal complement.
pub fn basis_containing<R: Rng + ?Sized>(phi: &StateVector, rng: &mut R) -> Result<ProjectiveBasis> {
    let d = phi.dim();
    if phi.amplitudes().norm() == 0.0 {
        return Err(TomoError::ZeroVector);
    }
    let mut g = ginibre(d, d, rng);
    g.set_column(0, phi.amplitudes());
    let mut q = unitary_from_qr(g);
    q.set_column(0, phi.amplitudes());
    Ok(ProjectiveBasis::from_trusted(q, None))
}

/// Mixed state of rank `rank` from the Bures-induced ensemble,
/// `ρ ∝ (1 + U) G G† (1 + U†)` with Haar `U` and `D × R` Ginibre `G`.
pub fn bures_random_state<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(TomoError::InvalidRank { rank, dim });
    }
    let u = haar_unitary(dim, rng);
    let g = ginibre(dim, rank, rng);
    let a = (CMatrix::identity(dim, dim) + u) * g;
    DensityMatrix::from_numerical(&(&a * a.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::linalg::unitarity_residual;

    fn assert_within_se(samples: &[f64], expected: f64, n_se: f64) {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!((mean - expected).abs() < n_se * se, "mean {mean} vs expected {expected} (se {se})");
    }

    #[test]
    fn ginibre_moments() {
        let mut rng = RngStream::new(1, 0);
        let draws: Vec<C64> = (0..100_000).map(|_| ginibre(1, 1, &mut rng)[(0, 0)]).collect();
        let re: Vec<f64> = draws.iter().map(|z| z.re).collect();
        let im: Vec<f64> = draws.iter().map(|z| z.im).collect();
        assert_within_se(&re, 0.0, 5.0);
        assert_within_se(&im, 0.0, 5.0);
        // variance of Re: E[x²] = 1; SE from the sample of x²
        let sq: Vec<f64> = re.iter().map(|x| x * x).collect();
        assert_within_se(&sq, 1.0, 5.0);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let a = ginibre(3, 2, &mut RngStream::new(42, 7));
        let b = ginibre(3, 2, &mut RngStream::new(42, 7));
        let c = ginibre(3, 2, &mut RngStream::new(42, 8));
        assert_eq!(a, b);
        assert_ne!(a, c);
        let s1 = haar_pure_state(5, &mut RngStream::new(3, 0));
        let s2 = haar_pure_state(5, &mut RngStream::new(3, 0));
        assert_eq!(s1, s2);
    }

    #[test]
    fn haar_phase_is_uniform() {
        let mut rng = RngStream::new(2, 0);
        let draws: Vec<C64> = (0..100_000).map(|_| haar_unitary(1, &mut rng)[(0, 0)]).collect();
        let re: Vec<f64> = draws.iter().map(|z| z.re).collect();
        let im: Vec<f64> = draws.iter().map(|z| z.im).collect();
        assert_within_se(&re, 0.0, 5.0);
        assert_within_se(&im, 0.0, 5.0);
        assert!(draws.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn haar_first_entry_weight() {
        let mut rng = RngStream::new(3, 0);
        let w: Vec<f64> = (0..10_000).map(|_| haar_unitary(4, &mut rng)[(0, 0)].norm_sqr()).collect();
        assert_within_se(&w, 0.25, 5.0);
    }

    #[test]
    fn haar_unitarity() {
        let mut rng = RngStream::new(4, 0);
        for _ in 0..100 {
            assert!(unitarity_residual(&haar_unitary(9, &mut rng)) < 1e-12);
        }
    }

    #[test]
    fn haar_left_invariance_of_first_entry() {
        // V·U must have the same |(VU)_11|² statistics as U for a fixed unitary V
        let v = haar_unitary(4, &mut RngStream::new(99, 0));
        let mut rng = RngStream::new(5, 0);
        let w: Vec<f64> = (0..10_000).map(|_| (&v * haar_unitary(4, &mut rng))[(0, 0)].norm_sqr()).collect();
        assert_within_se(&w, 0.25, 5.0);
    }

    #[test]
    fn haar_pure_state_amplitude() {
        let mut rng = RngStream::new(6, 0);
        let w: Vec<f64> = (0..10_000)
            .map(|_| {
                let s = haar_pure_state(9, &mut rng);
                assert!((s.amplitudes().norm() - 1.0).abs() < 1e-12);
                s.amplitudes()[0].norm_sqr()
            })
            .collect();
        assert_within_se(&w, 1.0 / 9.0, 5.0);
    }

    #[test]
    fn basis_containing_e1() {
        let e1 = StateVector::basis(3, 0);
        let b = basis_containing(&e1, &mut RngStream::new(7, 0)).unwrap();
        assert_eq!(b.unitary().column(0), e1.amplitudes().column(0));
        assert!(b.orthonormality_residual() < 1e-12);
        for k in 1..3 {
            assert!(b.unitary()[(0, k)].norm() < 1e-12);
        }
    }

    #[test]
    fn basis_containing_gram() {
        let mut rng = RngStream::new(8, 0);
        for _ in 0..100 {
            let phi = haar_pure_state(6, &mut rng);
            let b = basis_containing(&phi, &mut rng).unwrap();
            assert!(b.orthonormality_residual() < 1e-10);
            assert_eq!(b.unitary().column(0), phi.amplitudes().column(0));
        }
    }

    #[test]
    fn bures_states_are_valid() {
        let mut rng = RngStream::new(9, 0);
        for _ in 0..1000 {
            let rho = bures_random_state(9, 9, &mut rng).unwrap();
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
            assert!(rho.eigenvalues()[8] >= -1e-12);
        }
        for r in 1..=3 {
            let rho = bures_random_state(5, r, &mut rng).unwrap();
            assert_eq!(rho.rank(), r);
        }
    }

    #[test]
    fn rank_one_bures_is_pure() {
        let mut rng = RngStream::new(10, 0);
        for _ in 0..100 {
            let rho = bures_random_state(4, 1, &mut rng).unwrap();
            assert!((rho.purity() - 1.0).abs() < 1e-12);
        }
    }

    /// Independent re-implementation of the Bures sampler: Haar unitary by
    /// Gram–Schmidt of a Ginibre matrix, purity from the normalized
    /// eigenvalues of `A A†` computed in closed form for 2 × 2.
    fn brute_force_bures_purity(rng: &mut RngStream) -> f64 {
        let g = ginibre(2, 2, rng);
        let mut u = CMatrix::zeros(2, 2);
        for j in 0..2 {
            let mut v = g.column(j).into_owned();
            for k in 0..j {
                let uk = u.column(k).into_owned();
                let proj = uk.dotc(&v);
                v -= uk * proj;
            }
            let n = v.norm();
            u.set_column(j, &(v / C64::new(n, 0.0)));
        }
        let gg = ginibre(2, 2, rng);
        let mut a = u;
        a[(0, 0)] += C64::new(1.0, 0.0);
        a[(1, 1)] += C64::new(1.0, 0.0);
        let a = a * gg;
        let m = &a * a.adjoint();
        let tr = m.trace().re;
        let m = m / C64::new(tr, 0.0);
        m.iter().map(|z| z.norm_sqr()).sum()
    }

    #[test]
    fn bures_mean_purity_matches_brute_force() {
        let n = 100_000;
        let mut rng = RngStream::new(11, 0);
        let ours: Vec<f64> = (0..n).map(|_| bures_random_state(2, 2, &mut rng).unwrap().purity()).collect();
        let mut rng = RngStream::new(11, 1);
        let oracle: Vec<f64> = (0..n).map(|_| brute_force_bures_purity(&mut rng)).collect();
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        let var = |x: &[f64], m: f64| x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0);
        let (m1, m2) = (mean(&ours), mean(&oracle));
        let se = ((var(&ours, m1) + var(&oracle, m2)) / n as f64).sqrt();
        assert!((m1 - m2).abs() < 5.0 * se, "{m1} vs {m2} (se {se})");
    }
}
