//! Measurement-selection strategies and the block-size schedule.

mod mub;
mod search;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::quantum::{tensor_basis, BipartiteStructure, CMatrix, DensityMatrix, ProjectiveBasis};
use crate::random::{basis_containing, haar_basis, RngStream};

pub use mub::{mub_set, mub_supported, GaloisField};
pub use search::{
    entangled_subspace_dim, find_factorized_orthogonal, k_max, FactorizedSolution, OrthogonalityObjective, SearchConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    /// Tensor products of two Haar-random factor bases.
    Fr,
    /// Haar-random bases of the whole space.
    Gr,
    /// Estimator eigenbasis followed by `D` general random bases.
    Eigen,
    /// Mutually unbiased bases aligned to the estimator eigenbasis.
    Amub,
    /// Factorized bases containing a product vector orthogonal to the
    /// leading estimator eigenvectors.
    Fo,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [Self::Fr, Self::Gr, Self::Eigen, Self::Amub, Self::Fo];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fr => "fr",
            Self::Gr => "gr",
            Self::Eigen => "eigen",
            Self::Amub => "amub",
            Self::Fo => "fo",
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, Self::Eigen | Self::Amub | Self::Fo)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| TomoError::Parse(format!("unknown protocol `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub floor: u64,
    pub divisor: u64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { floor: 100, divisor: 30 }
    }
}

/// `max(floor, ⌊N / divisor⌋)`.
pub fn block_size(n_so_far: u64, config: &ScheduleConfig) -> u64 {
    config.floor.max(n_so_far / config.divisor.max(1))
}

/// Details of the most recent proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProposalInfo {
    /// Number of eigenvectors the FO product vector was made orthogonal to.
    pub k: Option<usize>,
    /// The FO search failed and an FR basis was used instead.
    pub fell_back: bool,
}

/// Mutable state of one measurement-selection sequence.
#[derive(Debug, Clone)]
pub struct ProtocolState {
    kind: ProtocolKind,
    split: BipartiteStructure,
    estimator: DensityMatrix,
    position: usize,
    k_max: usize,
    rng: RngStream,
    search: SearchConfig,
    mubs: Vec<ProjectiveBasis>,
    alignment: Option<CMatrix>,
    fo_failures: usize,
    last: ProposalInfo,
}

impl ProtocolState {
    /// Starts at cycle position 0 with the maximally mixed estimator.
    pub fn new(kind: ProtocolKind, split: BipartiteStructure, rng: RngStream) -> Result<Self> {
        if matches!(kind, ProtocolKind::Fr | ProtocolKind::Fo) {
            split.bipartite_dims()?;
        }
        let dim = split.total_dim();
        let mubs = if kind == ProtocolKind::Amub { mub_set(dim)? } else { Vec::new() };
        Ok(Self {
            kind,
            k_max: k_max(&split),
            estimator: DensityMatrix::maximally_mixed(dim),
            split,
            position: 0,
            rng,
            search: SearchConfig::default(),
            mubs,
            alignment: None,
            fo_failures: 0,
            last: ProposalInfo::default(),
        })
    }

    pub fn with_search(mut self, search: SearchConfig) -> Self {
        self.search = search;
        self
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.split.total_dim()
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Index of the next basis within the current `D + 1`-basis cycle.
    pub fn cycle_position(&self) -> usize {
        self.position
    }

    pub fn fo_failures(&self) -> usize {
        self.fo_failures
    }

    pub fn last_proposal(&self) -> ProposalInfo {
        self.last
    }

    pub fn estimator(&self) -> &DensityMatrix {
        &self.estimator
    }

    pub fn update_estimator(&mut self, estimator: DensityMatrix) -> Result<()> {
        if estimator.dim() != self.dim() {
            return Err(TomoError::DimensionMismatch { expected: self.dim(), found: estimator.dim() });
        }
        self.estimator = estimator;
        Ok(())
    }

    /// Next basis to measure; advances the cycle position.
    pub fn propose_basis(&mut self) -> Result<ProjectiveBasis> {
        let dim = self.dim();
        self.last = ProposalInfo::default();
        let basis = match self.kind {
            ProtocolKind::Fr => self.factorized_random()?,
            ProtocolKind::Gr => haar_basis(dim, &mut self.rng),
            ProtocolKind::Eigen if self.position == 0 => {
                ProjectiveBasis::from_unitary(self.estimator.spectrum().vectors)?
            }
            ProtocolKind::Eigen => haar_basis(dim, &mut self.rng),
            ProtocolKind::Amub => {
                if self.position == 0 || self.alignment.is_none() {
                    self.alignment = Some(self.estimator.spectrum().vectors);
                }
                let v = self.alignment.as_ref().expect("alignment set above");
                self.mubs[self.position].rotated(v)?
            }
            ProtocolKind::Fo => self.estimator_orthogonal()?,
        };
        self.position = (self.position + 1) % (dim + 1);
        Ok(basis)
    }

    fn factorized_random(&mut self) -> Result<ProjectiveBasis> {
        let (da, db) = self.split.bipartite_dims()?;
        let a = haar_basis(da, &mut self.rng);
        let b = haar_basis(db, &mut self.rng);
        Ok(tensor_basis(&a, &b))
    }

    fn estimator_orthogonal(&mut self) -> Result<ProjectiveBasis> {
        let k = self.rng.random_range(1..=self.k_max.min(self.dim()));
        let spectrum = self.estimator.spectrum();
        let targets: Vec<_> = (0..k).map(|i| spectrum.vector(i)).collect();
        match find_factorized_orthogonal(&targets, &self.split, &self.search, &mut self.rng) {
            Ok(sol) => {
                let a = basis_containing(&sol.phi_a, &mut self.rng)?;
                let b = basis_containing(&sol.phi_b, &mut self.rng)?;
                self.last = ProposalInfo { k: Some(k), fell_back: false };
                Ok(tensor_basis(&a, &b))
            }
            Err(TomoError::SearchExhausted { attempts, best }) => {
                log::warn!(
                    "orthogonal search failed for K = {k} after {attempts} seeds (best residual {best:e}); using a factorized random basis"
                );
                self.fo_failures += 1;
                self.last = ProposalInfo { k: Some(k), fell_back: true };
                self.factorized_random()
            }
            Err(e) => Err(e),
        }
    }
}
