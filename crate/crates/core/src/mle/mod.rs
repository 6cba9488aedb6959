//! Maximum-likelihood reconstruction of density matrices.
//!
//! The likelihood is evaluated with real matrix products: every measured
//! basis vector with a nonzero count is stored as a column `[Re φ; Im φ]` of
//! a packed matrix `Z`, so that `p_j = z_jᵀ E(ρ) z_j` with `E` the real
//! embedding of `ρ`, and the gradient `Σ_j s_j |φ_j⟩⟨φ_j|` is read off the
//! blocks of `Z diag(s) Zᵀ`.

mod apg;
mod io;
mod newton;
mod simplex;

use nalgebra::{DMatrix, DMatrixView};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::quantum::{real_embed_matrix, CMatrix, DensityMatrix, ProjectiveBasis, C64};

pub use apg::{apg_estimate, MleConfig, MleOutcome};
pub use io::{read_dataset, write_dataset};
pub use simplex::{project_density, simplex_project};

/// Default floor applied to probabilities inside logarithms and denominators.
pub const DEFAULT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LikelihoodModel {
    #[default]
    Multinomial,
    Poisson,
}

impl std::fmt::Display for LikelihoodModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Multinomial => "multinomial",
            Self::Poisson => "poisson",
        })
    }
}

impl std::str::FromStr for LikelihoodModel {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multinomial" => Ok(Self::Multinomial),
            "poisson" => Ok(Self::Poisson),
            other => Err(TomoError::Parse(format!("unknown likelihood model `{other}`"))),
        }
    }
}

/// One measured basis with its outcome counts.
#[derive(Debug, Clone)]
pub struct Record {
    pub basis: ProjectiveBasis,
    /// Counts per basis element. Non-integer values are accepted so that
    /// exact expected frequencies can be fed in directly.
    pub counts: Vec<f64>,
    /// Number of repetitions `b` (the Poisson rate scale).
    pub block: f64,
}

/// Accumulated measurement records.
#[derive(Debug, Clone)]
pub struct TomographyDataset {
    dim: usize,
    model: LikelihoodModel,
    records: Vec<Record>,
    packed: Vec<f64>,
    packed_counts: Vec<f64>,
    total_counts: f64,
    total_block: f64,
    poisson_constant: f64,
}

impl TomographyDataset {
    pub fn new(dim: usize, model: LikelihoodModel) -> Self {
        Self {
            dim,
            model,
            records: Vec::new(),
            packed: Vec::new(),
            packed_counts: Vec::new(),
            total_counts: 0.0,
            total_block: 0.0,
            poisson_constant: 0.0,
        }
    }

    pub fn push(&mut self, basis: ProjectiveBasis, counts: Vec<f64>, block: f64) -> Result<()> {
        if basis.dim() != self.dim {
            return Err(TomoError::DimensionMismatch { expected: self.dim, found: basis.dim() });
        }
        if counts.len() != self.dim {
            return Err(TomoError::DimensionMismatch { expected: self.dim, found: counts.len() });
        }
        if let Some(c) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(TomoError::InvalidArgument(format!("invalid count {c}")));
        }
        if !(block.is_finite() && block > 0.0) {
            return Err(TomoError::InvalidArgument(format!("block size must be positive, got {block}")));
        }
        let u = basis.unitary();
        for (k, &n) in counts.iter().enumerate() {
            if n == 0.0 {
                continue;
            }
            let col = u.column(k);
            self.packed.extend(col.iter().map(|z| z.re));
            self.packed.extend(col.iter().map(|z| z.im));
            self.packed_counts.push(n);
            self.total_counts += n;
            self.poisson_constant += n * block.ln();
        }
        self.total_block += block;
        self.records.push(Record { basis, counts, block });
        Ok(())
    }

    /// Appends integer counts with block size equal to their sum.
    pub fn push_counts(&mut self, basis: ProjectiveBasis, counts: &[u64]) -> Result<()> {
        let block = counts.iter().sum::<u64>() as f64;
        self.push(basis, counts.iter().map(|&c| c as f64).collect(), block)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model(&self) -> LikelihoodModel {
        self.model
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `N = Σ n`.
    pub fn total_counts(&self) -> f64 {
        self.total_counts
    }

    /// Number of basis elements with a nonzero count.
    pub(crate) fn num_active(&self) -> usize {
        self.packed_counts.len()
    }

    pub(crate) fn packed_view(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.packed, 2 * self.dim, self.packed_counts.len())
    }

    pub(crate) fn active_counts(&self) -> &[f64] {
        &self.packed_counts
    }

    /// Terms of the Poisson log-likelihood that do not depend on `ρ`
    /// beyond its trace: `Σ n log b − Tr ρ Σ b`.
    pub(crate) fn poisson_offset(&self, trace: f64) -> f64 {
        self.poisson_constant - trace * self.total_block
    }

    pub(crate) fn total_block(&self) -> f64 {
        self.total_block
    }
}

/// Born probabilities of all active elements for a Hermitian `ρ`.
pub(crate) fn active_probabilities(data: &TomographyDataset, rho: &CMatrix) -> Vec<f64> {
    let z = data.packed_view();
    let e = real_embed_matrix(rho);
    let t = &e * &z;
    z.column_iter().zip(t.column_iter()).map(|(a, b)| a.dot(&b)).collect()
}

/// `Σ_j s_j |φ_j⟩⟨φ_j|` over active elements.
pub(crate) fn weighted_projector_sum(data: &TomographyDataset, s: &[f64]) -> CMatrix {
    let d = data.dim();
    let z = data.packed_view();
    let mut w = z.into_owned();
    for (mut col, &sj) in w.column_iter_mut().zip(s) {
        col *= sj;
    }
    let k: DMatrix<f64> = &w * z.transpose();
    CMatrix::from_fn(d, d, |i, j| C64::new(k[(i, j)] + k[(i + d, j + d)], k[(i + d, j)] - k[(i, j + d)]))
}

fn floored_log_sum(counts: &[f64], probs: &[f64], floor: f64) -> f64 {
    counts.iter().zip(probs).map(|(n, p)| n * p.max(floor).ln()).sum()
}

/// Log-likelihood of `rho` (multinomial: `Σ n log p`, Poisson:
/// `Σ [n log(p b) − p b]`), with probabilities floored at `floor`.
pub fn log_likelihood(rho: &DensityMatrix, data: &TomographyDataset, floor: f64) -> Result<f64> {
    Ok(log_likelihood_gradient(rho, data, floor)?.0)
}

/// Log-likelihood together with its matrix gradient `Σ (n/p) M`
/// (minus `Σ b I` for the Poisson model).
pub fn log_likelihood_gradient(rho: &DensityMatrix, data: &TomographyDataset, floor: f64) -> Result<(f64, CMatrix)> {
    if rho.dim() != data.dim() {
        return Err(TomoError::DimensionMismatch { expected: data.dim(), found: rho.dim() });
    }
    let probs = active_probabilities(data, rho.matrix());
    let counts = data.active_counts();
    let mut value = floored_log_sum(counts, &probs, floor);
    let s: Vec<f64> = counts.iter().zip(&probs).map(|(n, p)| n / p.max(floor)).collect();
    let mut grad = weighted_projector_sum(data, &s);
    if data.model() == LikelihoodModel::Poisson {
        value += data.poisson_offset(rho.matrix().trace().re);
        for i in 0..data.dim() {
            grad[(i, i)] -= C64::new(data.total_block(), 0.0);
        }
    }
    Ok((value, grad))
}
