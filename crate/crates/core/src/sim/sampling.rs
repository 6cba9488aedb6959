//! Outcome sampling for one measured basis.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::error::{Result, TomoError};
use crate::mle::LikelihoodModel;

const SUM_TOL: f64 = 1e-10;

/// Draws outcome counts for probabilities `probs` and block size `block`.
///
/// Multinomial draws use sequential conditional binomials and always sum to
/// `block`; Poisson draws are independent with means `p_γ · block`.
pub fn sample_outcomes<R: Rng + ?Sized>(
    probs: &[f64],
    block: u64,
    model: LikelihoodModel,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if block == 0 {
        return Err(TomoError::InvalidArgument("block size must be at least 1".into()));
    }
    if probs.is_empty() {
        return Err(TomoError::InvalidProbabilities("empty probability vector".into()));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < -SUM_TOL) {
        return Err(TomoError::InvalidProbabilities(format!("entry {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(TomoError::InvalidProbabilities(format!("sum {total} != 1")));
    }
    let probs: Vec<f64> = probs.iter().map(|p| p.max(0.0)).collect();
    match model {
        LikelihoodModel::Multinomial => {
            let mut counts = vec![0; probs.len()];
            let mut remaining = block;
            let mut mass: f64 = probs.iter().sum();
            for (k, &p) in probs.iter().enumerate() {
                if remaining == 0 {
                    break;
                }
                if k + 1 == probs.len() {
                    counts[k] = remaining;
                    break;
                }
                let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
                let n = Binomial::new(remaining, q).expect("q lies in [0, 1]").sample(rng);
                counts[k] = n;
                remaining -= n;
                mass -= p;
            }
            Ok(counts)
        }
        LikelihoodModel::Poisson => Ok(probs
            .iter()
            .map(|&p| {
                let mean = p * block as f64;
                if mean > 0.0 {
                    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
                } else {
                    0
                }
            })
            .collect()),
    }
}
