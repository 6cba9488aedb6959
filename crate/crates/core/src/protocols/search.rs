//! Search for a product vector orthogonal to a set of bipartite vectors.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::quantum::{BipartiteStructure, CMatrix, CVector, StateVector, C64};
use crate::random::haar_pure_state;

/// Largest number of generic vectors a product vector can always be made
/// orthogonal to: `Σ d_i − l`.
pub fn k_max(split: &BipartiteStructure) -> usize {
    split.factor_dims().iter().sum::<usize>() - split.num_factors()
}

/// Maximal dimension of a subspace containing no product vector:
/// `D − Σ d_i + l − 1`.
pub fn entangled_subspace_dim(split: &BipartiteStructure) -> usize {
    split.total_dim() + split.num_factors() - split.factor_dims().iter().sum::<usize>() - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Largest accepted overlap `|⟨φ_A φ_B|ψ_k⟩|` after normalization.
    pub tolerance: f64,
    /// Number of random seeds tried before giving up.
    pub restarts: usize,
    /// Quasi-Newton iterations per seed.
    pub max_iterations: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { tolerance: 1e-8, restarts: 50, max_iterations: 400 }
    }
}

/// The target function
/// `f = Σ_k |⟨φ_A φ_B|ψ_k⟩|² + a + 1/a + b + 1/b − 4`
/// with `a = ⟨φ_A|φ_A⟩`, `b = ⟨φ_B|φ_B⟩`, and its gradient with respect to
/// the real and imaginary parts of both factors.
#[derive(Debug, Clone)]
pub struct OrthogonalityObjective {
    da: usize,
    db: usize,
    /// Each target reshaped to a `d_A × d_B` matrix.
    targets: Vec<CMatrix>,
}

impl OrthogonalityObjective {
    pub fn new(targets: &[StateVector], da: usize, db: usize) -> Result<Self> {
        let targets = targets
            .iter()
            .map(|psi| {
                if psi.dim() != da * db {
                    return Err(TomoError::DimensionMismatch { expected: da * db, found: psi.dim() });
                }
                let v = psi.amplitudes();
                Ok(CMatrix::from_fn(da, db, |i, j| v[i * db + j]))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { da, db, targets })
    }

    pub fn num_params(&self) -> usize {
        2 * (self.da + self.db)
    }

    /// Packs `(φ_A, φ_B)` as `[Re φ_A, Im φ_A, Re φ_B, Im φ_B]`.
    pub fn pack(&self, a: &CVector, b: &CVector) -> DVector<f64> {
        let mut x = DVector::zeros(self.num_params());
        for i in 0..self.da {
            x[i] = a[i].re;
            x[self.da + i] = a[i].im;
        }
        let off = 2 * self.da;
        for j in 0..self.db {
            x[off + j] = b[j].re;
            x[off + self.db + j] = b[j].im;
        }
        x
    }

    pub fn unpack(&self, x: &DVector<f64>) -> (CVector, CVector) {
        let off = 2 * self.da;
        let a = CVector::from_fn(self.da, |i, _| C64::new(x[i], x[self.da + i]));
        let b = CVector::from_fn(self.db, |j, _| C64::new(x[off + j], x[off + self.db + j]));
        (a, b)
    }

    /// Overlaps `s_k = φ_A† Ψ_k φ̄_B`.
    pub fn overlaps(&self, a: &CVector, b: &CVector) -> Vec<C64> {
        let bc = b.map(|z| z.conj());
        self.targets.iter().map(|t| a.dotc(&(t * &bc))).collect()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.value_gradient(x).0
    }

    pub fn value_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let (a, b) = self.unpack(x);
        let na = a.norm_squared();
        let nb = b.norm_squared();
        let ac = a.map(|z| z.conj());
        let bc = b.map(|z| z.conj());
        let mut ga = a.scale(1.0 - 1.0 / (na * na));
        let mut gb = b.scale(1.0 - 1.0 / (nb * nb));
        let mut value = (na - 1.0).powi(2) / na + (nb - 1.0).powi(2) / nb;
        for t in &self.targets {
            let tb = t * &bc;
            let s = a.dotc(&tb);
            value += s.norm_sqr();
            ga.axpy(s.conj(), &tb, C64::new(1.0, 0.0));
            gb.axpy(s.conj(), &(t.transpose() * &ac), C64::new(1.0, 0.0));
        }
        // df/dRe z + i df/dIm z = 2 df/dz̄.
        let grad = self.pack(&ga, &gb).scale(2.0);
        (value, grad)
    }
}

/// Minimizes `f` by BFGS with an Armijo backtracking line search.
/// Returns the final point and value.
pub(crate) fn bfgs<F>(f: F, x0: DVector<f64>, max_iterations: usize, target: f64) -> (DVector<f64>, f64)
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut h = DMatrix::<f64>::identity(n, n);
    for _ in 0..max_iterations {
        if fx <= target || g.norm() < 1e-300 {
            break;
        }
        let mut p = -(&h * &g);
        let mut slope = g.dot(&p);
        if slope >= 0.0 {
            h.fill_with_identity();
            p = -g.clone();
            slope = -g.norm_squared();
        }
        let mut t = 1.0;
        let (x_new, f_new, g_new) = loop {
            let cand = &x + p.scale(t);
            let (fc, gc) = f(&cand);
            if fc <= fx + 1e-4 * t * slope || t < 1e-20 {
                break (cand, fc, gc);
            }
            t *= 0.5;
        };
        if f_new >= fx {
            break;
        }
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ, expanded.
            h += (&s * s.transpose()).scale(rho * (1.0 + rho * yhy))
                - (&hy * s.transpose() + &s * hy.transpose()).scale(rho);
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    (x, fx)
}

/// Outcome of a successful search.
#[derive(Debug, Clone)]
pub struct FactorizedSolution {
    pub phi_a: StateVector,
    pub phi_b: StateVector,
    /// Largest overlap with the targets after normalization.
    pub residual: f64,
    /// Number of seeds used, including the successful one.
    pub attempts: usize,
}

/// Finds unit vectors `φ_A`, `φ_B` with `|⟨φ_A ⊗ φ_B|ψ_k⟩| < tolerance` for
/// every target, restarting from fresh Haar-random seeds whenever the
/// minimization stalls above zero.
pub fn find_factorized_orthogonal<R: Rng + ?Sized>(
    targets: &[StateVector],
    split: &BipartiteStructure,
    config: &SearchConfig,
    rng: &mut R,
) -> Result<FactorizedSolution> {
    let (da, db) = split.bipartite_dims()?;
    let limit = k_max(split);
    if targets.len() > limit {
        return Err(TomoError::TooManyConstraints { k: targets.len(), k_max: limit });
    }
    let objective = OrthogonalityObjective::new(targets, da, db)?;
    // Overlaps of order √f are accepted once f is well below tolerance².
    let target = 1e-6 * config.tolerance * config.tolerance;
    let mut best = f64::INFINITY;
    for attempt in 1..=config.restarts.max(1) {
        let a0 = haar_pure_state(da, rng);
        let b0 = haar_pure_state(db, rng);
        let x0 = objective.pack(a0.amplitudes(), b0.amplitudes());
        let (x, _) = bfgs(|x| objective.value_gradient(x), x0, config.max_iterations, target);
        let (a, b) = objective.unpack(&x);
        let (Ok(phi_a), Ok(phi_b)) = (StateVector::new(a), StateVector::new(b)) else {
            continue;
        };
        let residual =
            objective.overlaps(phi_a.amplitudes(), phi_b.amplitudes()).iter().map(|s| s.norm()).fold(0.0, f64::max);
        if residual < config.tolerance {
            return Ok(FactorizedSolution { phi_a, phi_b, residual, attempts: attempt });
        }
        log::debug!("orthogonal search seed {attempt} stalled at residual {residual:e}");
        best = best.min(residual);
    }
    Err(TomoError::SearchExhausted { attempts: config.restarts.max(1), best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::linalg::kron_vec;
    use crate::random::RngStream;

    #[test]
    fn k_max_and_entangled_dim() {
        let s33 = BipartiteStructure::symmetric(3).unwrap();
        assert_eq!((k_max(&s33), entangled_subspace_dim(&s33)), (4, 4));
        assert_eq!(k_max(&BipartiteStructure::symmetric(6).unwrap()), 10);
        for l in 1..=5 {
            assert_eq!(k_max(&BipartiteStructure::new(vec![2; l]).unwrap()), l);
        }
    }

    #[test]
    fn objective_vanishes_on_exact_solution() {
        let s = C64::new(0.5f64.sqrt(), 0.0);
        let bell = StateVector::from_vec(vec![s, C64::default(), C64::default(), s]).unwrap();
        let obj = OrthogonalityObjective::new(&[bell], 2, 2).unwrap();
        let e0 = StateVector::basis(2, 0);
        let e1 = StateVector::basis(2, 1);
        let x = obj.pack(e0.amplitudes(), e1.amplitudes());
        assert_eq!(obj.value(&x), 0.0);
    }

    #[test]
    fn overlaps_match_kronecker_inner_products() {
        let mut rng = RngStream::new(20, 0);
        let targets: Vec<StateVector> = (0..3).map(|_| haar_pure_state(6, &mut rng)).collect();
        let obj = OrthogonalityObjective::new(&targets, 2, 3).unwrap();
        let a = haar_pure_state(2, &mut rng);
        let b = haar_pure_state(3, &mut rng);
        let prod = kron_vec(a.amplitudes(), b.amplitudes());
        for (s, t) in obj.overlaps(a.amplitudes(), b.amplitudes()).iter().zip(&targets) {
            assert!((s - prod.dotc(t.amplitudes())).norm() < 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngStream::new(21, 0);
        let targets: Vec<StateVector> = (0..4).map(|_| haar_pure_state(9, &mut rng)).collect();
        let obj = OrthogonalityObjective::new(&targets, 3, 3).unwrap();
        let x = DVector::from_fn(obj.num_params(), |_, _| rng.random_range(-1.0..1.0));
        let (_, g) = obj.value_gradient(&x);
        let h = 1e-6;
        for i in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn bfgs_minimizes_rosenbrock() {
        let f = |x: &DVector<f64>| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = DVector::from_vec(vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]);
            (v, g)
        };
        let (x, v) = bfgs(f, DVector::from_vec(vec![-1.2, 1.0]), 500, 1e-20);
        assert!(v < 1e-12, "{v}");
        assert!((x[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn finds_orthogonal_product_vectors() {
        let mut rng = RngStream::new(22, 0);
        let split = BipartiteStructure::symmetric(3).unwrap();
        for k in 1..=4 {
            let targets: Vec<StateVector> = (0..k).map(|_| haar_pure_state(9, &mut rng)).collect();
            let sol = find_factorized_orthogonal(&targets, &split, &SearchConfig::default(), &mut rng).unwrap();
            let prod = kron_vec(sol.phi_a.amplitudes(), sol.phi_b.amplitudes());
            for t in &targets {
                assert!(prod.dotc(t.amplitudes()).norm() < 1e-8);
            }
            assert!((sol.phi_a.amplitudes().norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_too_many_targets() {
        let mut rng = RngStream::new(23, 0);
        let split = BipartiteStructure::symmetric(2).unwrap();
        let targets: Vec<StateVector> = (0..3).map(|_| haar_pure_state(4, &mut rng)).collect();
        assert!(matches!(
            find_factorized_orthogonal(&targets, &split, &SearchConfig::default(), &mut rng),
            Err(TomoError::TooManyConstraints { k: 3, k_max: 2 })
        ));
    }
}
