//! Accelerated projected gradient ascent with function-value restart.

use serde::{Deserialize, Serialize};

use super::newton;
use super::simplex::project_matrix;
use super::{active_probabilities, weighted_projector_sum, LikelihoodModel, TomographyDataset};
use crate::error::{Result, TomoError};
use crate::quantum::linalg::{eigh, from_spectrum, real_inner};
use crate::quantum::{CMatrix, DensityMatrix, C64};
use crate::random::{ginibre, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleConfig {
    /// Estimator rank `R_e`.
    pub rank: usize,
    /// Stop once the gradient-mapping norm of the count-normalized
    /// log-likelihood falls below this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Probability floor `ε`.
    pub floor: f64,
}

impl MleConfig {
    pub fn new(rank: usize) -> Self {
        Self { rank, tolerance: 1e-8, max_iterations: 5000, floor: super::DEFAULT_FLOOR }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.rank == 0 || self.rank > dim {
            return Err(TomoError::InvalidRank { rank: self.rank, dim });
        }
        if !(self.tolerance > 0.0) {
            return Err(TomoError::InvalidArgument(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.floor > 0.0 && self.floor <= 1e-6) {
            return Err(TomoError::InvalidArgument(format!("probability floor {} outside (0, 1e-6]", self.floor)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MleOutcome {
    pub estimate: DensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub restarts: usize,
    /// `false` when the iteration cap was hit first.
    pub converged: bool,
    /// Count-normalized log-likelihood after every accepted step, starting
    /// with the initial point.
    pub objective_trace: Vec<f64>,
}

const STEP_GROWTH: f64 = 1.25;
const REFRESH_EVERY: usize = 50;
const COLD_START_TOLERANCE: f64 = 1e-6;

struct Objective<'a> {
    data: &'a TomographyDataset,
    weights: Vec<f64>,
    floor: f64,
}

impl Objective<'_> {
    fn probabilities(&self, rho: &CMatrix) -> Vec<f64> {
        active_probabilities(self.data, rho)
    }

    /// `Σ w log p − log Tr ρ`, which agrees with the normalized
    /// log-likelihood on unit-trace matrices and is insensitive to rounding
    /// of the trace.
    fn value(&self, probs: &[f64], trace: f64) -> f64 {
        self.weights.iter().zip(probs).map(|(w, p)| w * p.max(self.floor).ln()).sum::<f64>() - trace.ln()
    }

    /// `value(base + delta) − value(base)` evaluated through `log1p` of the
    /// relative changes, so that tiny steps keep full precision.
    fn increment(&self, base: &[f64], delta: &[f64], trace: f64, trace_delta: f64) -> f64 {
        let floor = self.floor;
        let data_term: f64 = self
            .weights
            .iter()
            .zip(base.iter().zip(delta))
            .map(|(w, (&a, &d))| {
                let b = a + d;
                if a > floor && b > floor {
                    w * (d / a).ln_1p()
                } else {
                    w * (b.max(floor).ln() - a.max(floor).ln())
                }
            })
            .sum();
        data_term - (trace_delta / trace).ln_1p()
    }

    /// Gradient `Σ (w/p) M − I / Tr ρ` of `value`. Near an interior optimum
    /// it tends to zero, which keeps rounding in the projected step small.
    fn gradient(&self, probs: &[f64], trace: f64) -> CMatrix {
        let s: Vec<f64> = self.weights.iter().zip(probs).map(|(w, p)| w / p.max(self.floor)).collect();
        let mut g = weighted_projector_sum(self.data, &s);
        for i in 0..g.nrows() {
            g[(i, i)] -= C64::new(1.0 / trace, 0.0);
        }
        g
    }

    fn infeasible(&self, probs: &[f64]) -> bool {
        probs.iter().any(|&p| p <= self.floor)
    }
}

/// An observed outcome counts as unsupported when its probability is below
/// this fraction of its share of the counts.
const SUPPORT_RATIO: f64 = 1e-3;
const SUPPORT_MIX: [f64; 3] = [1e-2, 1e-1, 0.5];
const SUPPORT_TILT: [f64; 4] = [1e-2, 1e-1, 0.5, 2.0];

/// Moves `start` off the boundary when it gives (almost) zero probability to
/// observed outcomes.
///
/// First the projectors onto those outcomes are mixed in. A low-rank start
/// whose range is orthogonal to them is unaffected by mixing, so as a second
/// resort its eigenvectors are tilted by a fixed pseudo-random matrix.
fn restore_support(data: &TomographyDataset, start: CMatrix, rank: usize) -> CMatrix {
    let total = data.total_counts();
    if data.num_active() == 0 || total <= 0.0 {
        return start;
    }
    let counts = data.active_counts();
    let unsupported = |rho: &CMatrix| -> Vec<f64> {
        active_probabilities(data, rho)
            .iter()
            .zip(counts)
            .map(|(p, n)| if *p < SUPPORT_RATIO * n / total { 1.0 } else { 0.0 })
            .collect()
    };
    let supported = |rho: &CMatrix| unsupported(rho).iter().all(|&u| u == 0.0);
    let mask = unsupported(&start);
    let m: f64 = mask.iter().sum();
    if m == 0.0 {
        return start;
    }
    let missing = weighted_projector_sum(data, &mask).unscale(m);
    for eps in SUPPORT_MIX {
        let mixed = project_matrix(&(start.scale(1.0 - eps) + missing.scale(eps)), rank);
        if supported(&mixed) {
            return mixed;
        }
    }

    let d = start.nrows();
    let (values, vectors) = eigh(&start);
    let tilt = ginibre(d, rank, &mut RngStream::new(0, 0));
    let top = vectors.columns(0, rank).into_owned();
    let mut candidate = start;
    for delta in SUPPORT_TILT {
        let q = (&top + tilt.scale(delta)).qr().q();
        candidate = from_spectrum(&values[..rank], &q);
        if supported(&candidate) {
            break;
        }
    }
    candidate
}

/// Maximizes the log-likelihood over density matrices of rank at most
/// `config.rank`, starting from `warm_start` (projected first) or from the
/// maximally mixed state.
pub fn apg_estimate(
    data: &TomographyDataset,
    config: &MleConfig,
    warm_start: Option<&DensityMatrix>,
) -> Result<MleOutcome> {
    let dim = data.dim();
    config.validate(dim)?;
    let start = match warm_start {
        Some(w) if w.dim() != dim => return Err(TomoError::DimensionMismatch { expected: dim, found: w.dim() }),
        Some(w) => project_matrix(w.matrix(), config.rank),
        None if config.rank < dim => {
            // the rank-constrained problem is not convex; start from the
            // full-rank optimum instead of an arbitrary boundary point
            let full = MleConfig { rank: dim, tolerance: config.tolerance.max(COLD_START_TOLERANCE), ..*config };
            project_matrix(apg_estimate(data, &full, None)?.estimate.matrix(), config.rank)
        }
        None => DensityMatrix::maximally_mixed(dim).matrix().clone(),
    };
    let start = restore_support(data, start, config.rank);

    let total = data.total_counts();
    let finish = |x: CMatrix, f: f64, iterations, restarts, converged, trace| {
        let log_likelihood = if total > 0.0 {
            let mut l = f * total;
            if data.model() == LikelihoodModel::Poisson {
                l += data.poisson_offset(x.trace().re);
            }
            l
        } else {
            0.0
        };
        MleOutcome {
            estimate: DensityMatrix::from_trusted(x),
            log_likelihood,
            iterations,
            restarts,
            converged,
            objective_trace: trace,
        }
    };
    if data.num_active() == 0 {
        return Ok(finish(start, 0.0, 0, 0, true, vec![0.0]));
    }

    let obj =
        Objective { data, weights: data.active_counts().iter().map(|n| n / total).collect(), floor: config.floor };

    let tr = |m: &CMatrix| m.trace().re;
    let mut x = start;
    let mut px = obj.probabilities(&x);
    let mut fx = obj.value(&px, tr(&x));
    let mut x_prev: CMatrix;
    let mut px_prev: Vec<f64>;
    let mut trace = vec![fx];

    // Extrapolated point y with probabilities px + dy.
    let mut y = x.clone();
    let mut dy = vec![0.0; px.len()];
    let mut dtr_y = 0.0;
    let mut py = px.clone();
    let mut grad = obj.gradient(&py, tr(&y));
    let mut y_is_x = true;
    let mut theta = 1.0f64;
    let mut step = 1.0f64;
    let mut restarts = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let tr_y = tr(&y);
        // Backtracking on the quadratic lower model around y.
        let (z, pd, diff) = loop {
            let z = project_matrix(&(&y + grad.scale(step)), config.rank);
            let d = &z - &y;
            let pd = obj.probabilities(&d);
            let gain = obj.increment(&py, &pd, tr_y, tr(&d));
            let model = real_inner(&grad, &d) - d.norm_squared() / (2.0 * step);
            if gain >= model - 1e-12 * model.abs() || step < 1e-30 {
                break (z, pd, d);
            }
            step *= 0.5;
        };
        let mapping_norm = diff.norm() / step;
        let delta: Vec<f64> = dy.iter().zip(&pd).map(|(a, b)| a + b).collect();
        let gain = obj.increment(&px, &delta, tr(&x), dtr_y + tr(&diff));

        if gain < 0.0 {
            if y_is_x {
                // No ascent possible at working precision.
                converged = mapping_norm < config.tolerance.sqrt();
                break;
            }
            restarts += 1;
            theta = 1.0;
            y = x.clone();
            dy.iter_mut().for_each(|v| *v = 0.0);
            dtr_y = 0.0;
            py = px.clone();
            grad = obj.gradient(&py, tr(&y));
            y_is_x = true;
            continue;
        }

        let pz: Vec<f64> = px.iter().zip(&delta).map(|(a, b)| a + b).collect();
        x_prev = std::mem::replace(&mut x, z);
        px_prev = std::mem::replace(&mut px, pz);
        fx += gain;
        if iterations % REFRESH_EVERY == 0 {
            px = obj.probabilities(&x);
        }
        trace.push(fx);
        if mapping_norm < config.tolerance {
            converged = true;
            break;
        }

        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = (theta - 1.0) / theta_next;
        theta = theta_next;
        dy = px.iter().zip(&px_prev).map(|(a, b)| beta * (a - b)).collect();
        py = px.iter().zip(&dy).map(|(a, b)| a + b).collect();
        if !obj.infeasible(&py) {
            let momentum = (&x - &x_prev).scale(beta);
            dtr_y = tr(&momentum);
            y = &x + momentum;
            y_is_x = beta == 0.0;
        } else {
            theta = 1.0;
            y = x.clone();
            dy.iter_mut().for_each(|v| *v = 0.0);
            dtr_y = 0.0;
            py = px.clone();
            y_is_x = true;
        }
        grad = obj.gradient(&py, tr(&y));
        step *= STEP_GROWTH;
    }

    if config.rank == dim && data.model() == LikelihoodModel::Multinomial {
        if let Some(polished) = newton::polish(data, &x) {
            if polished.steps > 0 {
                x = polished.estimate;
                trace.push(obj.value(&obj.probabilities(&x), tr(&x)));
            }
            converged |= polished.converged;
        }
    }
    if !converged {
        log::warn!(
            "APG stopped at the iteration cap ({}) before reaching tolerance {:e}",
            config.max_iterations,
            config.tolerance
        );
    }
    let final_value = obj.value(&obj.probabilities(&x), tr(&x));
    Ok(finish(x, final_value, iterations, restarts, converged, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mle::log_likelihood;
    use crate::quantum::{born_probabilities, fidelity, ProjectiveBasis};
    use crate::random::{bures_random_state, haar_basis, haar_pure_state, RngStream};

    fn noiseless(rho: &DensityMatrix, bases: usize, block: f64, rng: &mut RngStream) -> TomographyDataset {
        let d = rho.dim();
        let mut data = TomographyDataset::new(d, LikelihoodModel::Multinomial);
        for k in 0..bases {
            let basis = if k == 0 { ProjectiveBasis::computational(d) } else { haar_basis(d, rng) };
            let p = born_probabilities(rho, &basis).unwrap();
            data.push(basis, p.iter().map(|p| p * block).collect(), block).unwrap();
        }
        data
    }

    #[test]
    fn point_mass_record() {
        let mut data = TomographyDataset::new(3, LikelihoodModel::Multinomial);
        data.push(ProjectiveBasis::computational(3), vec![1000.0, 0.0, 0.0], 1000.0).unwrap();
        let out = apg_estimate(&data, &MleConfig::new(1), None).unwrap();
        assert!((out.estimate.matrix()[(0, 0)].re - 1.0).abs() < 1e-8);
        assert_eq!(out.estimate.rank(), 1);
    }

    #[test]
    fn recovers_state_from_noiseless_data() {
        let mut rng = RngStream::new(10, 0);
        for d in [2, 3, 4, 5] {
            for rank in [1, d] {
                let rho = bures_random_state(d, rank, &mut rng).unwrap();
                let data = noiseless(&rho, d + 1, 1e6, &mut rng);
                let cfg = MleConfig::new(d).with_tolerance(1e-12).with_max_iterations(100_000);
                let out = apg_estimate(&data, &cfg, None).unwrap();
                let infid = 1.0 - fidelity(&rho, &out.estimate).unwrap();
                assert!(infid < 1e-6, "d {d} rank {rank}: {infid} after {} its", out.iterations);
            }
        }
    }

    #[test]
    fn objective_trace_is_monotone() {
        let mut rng = RngStream::new(11, 0);
        let psi = haar_pure_state(4, &mut rng);
        let data = noiseless(&psi.projector(), 5, 1e3, &mut rng);
        let out = apg_estimate(&data, &MleConfig::new(4), None).unwrap();
        for w in out.objective_trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
        let start = log_likelihood(&DensityMatrix::maximally_mixed(4), &data, 1e-12).unwrap();
        assert!(out.log_likelihood >= start);
    }

    #[test]
    fn warm_start_at_optimum_is_fixed_point() {
        let mut rng = RngStream::new(12, 0);
        let rho = bures_random_state(3, 3, &mut rng).unwrap();
        let data = noiseless(&rho, 4, 1e4, &mut rng);
        let tight = MleConfig::new(3).with_tolerance(1e-13).with_max_iterations(100_000);
        let first = apg_estimate(&data, &tight, None).unwrap();
        let again = apg_estimate(&data, &MleConfig::new(3), Some(&first.estimate)).unwrap();
        assert!(again.iterations <= 2, "{}", again.iterations);
        let diff = crate::quantum::linalg::max_abs_diff(first.estimate.matrix(), again.estimate.matrix());
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn rank_constraint_respected() {
        let mut rng = RngStream::new(13, 0);
        let rho = bures_random_state(4, 4, &mut rng).unwrap();
        let data = noiseless(&rho, 5, 1e4, &mut rng);
        for r in 1..=3 {
            let out = apg_estimate(&data, &MleConfig::new(r), None).unwrap();
            assert!(out.estimate.rank() <= r);
            assert!((out.estimate.matrix().trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_and_multinomial_agree() {
        let mut rng = RngStream::new(14, 0);
        let rho = bures_random_state(3, 3, &mut rng).unwrap();
        let mut multi = TomographyDataset::new(3, LikelihoodModel::Multinomial);
        let mut pois = TomographyDataset::new(3, LikelihoodModel::Poisson);
        for _ in 0..5 {
            let basis = haar_basis(3, &mut rng);
            let p = born_probabilities(&rho, &basis).unwrap();
            let counts: Vec<f64> = p.iter().map(|p| (p * 200.0).round()).collect();
            let block = counts.iter().sum::<f64>();
            multi.push(basis.clone(), counts.clone(), block).unwrap();
            pois.push(basis, counts, block).unwrap();
        }
        let cfg = MleConfig::new(3).with_tolerance(1e-10);
        let a = apg_estimate(&multi, &cfg, None).unwrap();
        let b = apg_estimate(&pois, &cfg, None).unwrap();
        let db2 = crate::quantum::bures_distance_sq(&a.estimate, &b.estimate).unwrap();
        assert!(db2 < 1e-6, "{db2}");
    }

    #[test]
    fn invalid_configs() {
        let data = TomographyDataset::new(3, LikelihoodModel::Multinomial);
        assert!(matches!(apg_estimate(&data, &MleConfig::new(4), None), Err(TomoError::InvalidRank { .. })));
        assert!(apg_estimate(&data, &MleConfig::new(0), None).is_err());
        let mut cfg = MleConfig::new(2);
        cfg.floor = 1e-3;
        assert!(apg_estimate(&data, &cfg, None).is_err());
    }
}
