//! Single tomography runs and multi-run campaigns.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::sampling::sample_outcomes;
use super::states::{true_state, TrueStateSpec};
use crate::error::{Result, TomoError};
use crate::mle::{apg_estimate, LikelihoodModel, MleConfig, TomographyDataset};
use crate::protocols::{block_size, ProtocolKind, ProtocolState, ScheduleConfig, SearchConfig};
use crate::quantum::{born_probabilities, bures_distance_sq, BipartiteStructure, DensityMatrix};
use crate::random::RngStream;

/// Stream ids inside a run: `(run_id << 8) | purpose`.
pub const STREAM_STATE: u64 = 0;
pub const STREAM_PROTOCOL: u64 = 1;
pub const STREAM_SAMPLING: u64 = 2;

pub fn stream_id(run_id: u64, purpose: u64) -> u64 {
    (run_id << 8) | purpose
}

/// What each recorded estimate is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMode {
    #[default]
    TrueState,
    /// The estimate after all `N_total` counts; the trajectory is truncated
    /// at `N_total / 6`.
    FinalEstimate,
}

impl fmt::Display for ReferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TrueState => "true-state",
            Self::FinalEstimate => "final-estimate",
        })
    }
}

impl FromStr for ReferenceMode {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true-state" => Ok(Self::TrueState),
            "final-estimate" => Ok(Self::FinalEstimate),
            other => Err(TomoError::Parse(format!("unknown reference mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub protocol: ProtocolKind,
    /// Estimator rank `R_e`.
    pub estimator_rank: usize,
    pub n_total: u64,
    pub schedule: ScheduleConfig,
    pub model: LikelihoodModel,
    pub reference: ReferenceMode,
    pub mle_tolerance: f64,
    pub mle_max_iterations: usize,
    pub search: SearchConfig,
}

impl RunConfig {
    pub fn new(protocol: ProtocolKind, estimator_rank: usize, n_total: u64) -> Self {
        let mle = MleConfig::new(estimator_rank);
        Self {
            protocol,
            estimator_rank,
            n_total,
            schedule: ScheduleConfig::default(),
            model: LikelihoodModel::Multinomial,
            reference: ReferenceMode::TrueState,
            mle_tolerance: mle.tolerance,
            mle_max_iterations: mle.max_iterations,
            search: SearchConfig::default(),
        }
    }

    pub fn mle_config(&self) -> MleConfig {
        MleConfig::new(self.estimator_rank)
            .with_tolerance(self.mle_tolerance)
            .with_max_iterations(self.mle_max_iterations)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        self.mle_config().validate(dim)?;
        if self.n_total == 0 {
            return Err(TomoError::InvalidArgument("n_total must be positive".into()));
        }
        if self.schedule.floor == 0 || self.schedule.divisor == 0 {
            return Err(TomoError::InvalidArgument("schedule floor and divisor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// 0-based index of the measured basis.
    pub basis_index: usize,
    /// Cumulative counts after this basis.
    pub n: u64,
    pub d_b2: f64,
}

#[derive(Debug, Clone)]
pub struct RunTrajectory {
    pub points: Vec<TrajectoryPoint>,
    pub protocol: ProtocolKind,
    pub estimator_rank: usize,
    pub reference: ReferenceMode,
    pub seed: u64,
    pub run_id: u64,
    pub true_state: DensityMatrix,
    pub final_estimate: DensityMatrix,
    /// FO proposals that fell back to a factorized random basis.
    pub fo_failures: usize,
    /// Estimation calls that stopped at the iteration cap.
    pub mle_unconverged: usize,
}

impl RunTrajectory {
    /// `(N, d_B²)` pairs.
    pub fn series(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.n as f64, p.d_b2)).collect()
    }
}

/// Runs one adaptive tomography experiment on the state described by `spec`.
///
/// The true state is drawn from stream `(run_id, 0)` of `spec.seed`, the
/// protocol from stream 1 and the outcomes from stream 2.
pub fn run_tomography(spec: &TrueStateSpec, config: &RunConfig, run_id: u64) -> Result<RunTrajectory> {
    let mut rng = RngStream::new(spec.seed, stream_id(run_id, STREAM_STATE));
    let truth = true_state(spec, &mut rng)?;
    run_with_state(truth, &spec.split, config, spec.seed, run_id)
}

/// Like [`run_tomography`] with an explicit true state.
pub fn run_with_state(
    truth: DensityMatrix,
    split: &BipartiteStructure,
    config: &RunConfig,
    seed: u64,
    run_id: u64,
) -> Result<RunTrajectory> {
    let dim = split.total_dim();
    if truth.dim() != dim {
        return Err(TomoError::DimensionMismatch { expected: dim, found: truth.dim() });
    }
    config.validate(dim)?;
    let mle = config.mle_config();
    let mut protocol =
        ProtocolState::new(config.protocol, split.clone(), RngStream::new(seed, stream_id(run_id, STREAM_PROTOCOL)))?
            .with_search(config.search);
    let mut sampler = RngStream::new(seed, stream_id(run_id, STREAM_SAMPLING));
    let mut data = TomographyDataset::new(dim, config.model);

    let keep_estimates = config.reference == ReferenceMode::FinalEstimate;
    let mut estimates = Vec::new();
    let mut points = Vec::new();
    let mut estimate: Option<DensityMatrix> = None;
    let mut mle_unconverged = 0;
    let mut n: u64 = 0;
    let mut block = config.schedule.floor;
    let mut basis_index = 0;
    while n < config.n_total {
        if protocol.cycle_position() == 0 {
            block = block_size(n, &config.schedule);
        }
        let basis = protocol.propose_basis()?;
        let probs = born_probabilities(&truth, &basis)?;
        let counts = sample_outcomes(&probs, block, config.model, &mut sampler)?;
        let observed: u64 = counts.iter().sum();
        data.push(basis, counts.iter().map(|&c| c as f64).collect(), block as f64)?;
        let index = basis_index;
        basis_index += 1;
        if observed == 0 {
            continue;
        }
        n += observed;

        let outcome = apg_estimate(&data, &mle, estimate.as_ref())?;
        if !outcome.converged {
            mle_unconverged += 1;
            log::debug!("run {run_id}: estimation hit the iteration cap at N = {n}");
        }
        protocol.update_estimator(outcome.estimate.clone())?;
        let d_b2 = if keep_estimates { 0.0 } else { bures_distance_sq(&outcome.estimate, &truth)? };
        if keep_estimates {
            estimates.push(outcome.estimate.clone());
        }
        points.push(TrajectoryPoint { basis_index: index, n, d_b2 });
        estimate = Some(outcome.estimate);
    }
    let final_estimate = estimate.ok_or_else(|| TomoError::InsufficientData("no counts were registered".into()))?;
    if keep_estimates {
        let cutoff = config.n_total / 6;
        let mut kept = Vec::new();
        for (p, e) in points.iter().zip(&estimates) {
            if p.n > cutoff {
                break;
            }
            kept.push(TrajectoryPoint { d_b2: bures_distance_sq(e, &final_estimate)?, ..*p });
        }
        points = kept;
    }
    Ok(RunTrajectory {
        points,
        protocol: config.protocol,
        estimator_rank: config.estimator_rank,
        reference: config.reference,
        seed,
        run_id,
        true_state: truth,
        final_estimate,
        fo_failures: protocol.fo_failures(),
        mle_unconverged,
    })
}

/// Runs `run_ids` on up to `jobs` worker threads. Results come back in
/// `run_ids` order regardless of scheduling.
pub fn run_campaign(
    spec: &TrueStateSpec,
    config: &RunConfig,
    run_ids: &[u64],
    jobs: usize,
) -> Result<Vec<RunTrajectory>> {
    config.validate(spec.dim())?;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunTrajectory>>>> = Mutex::new(vec![None; run_ids.len()]);
    let workers = jobs.clamp(1, run_ids.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&run_id) = run_ids.get(i) else { break };
                let result = run_tomography(spec, config, run_id);
                slots.lock().expect("worker panicked")[i] = Some(result);
            });
        }
    });
    slots.into_inner().expect("worker panicked").into_iter().map(|r| r.expect("every run id was processed")).collect()
}
