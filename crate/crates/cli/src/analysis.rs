//! Averaging, fitting and threshold crossings shared by `simulate` and `fit`,
//! so both report identical numbers for the same trajectories.

use qtomo::sim::{average_series, fit_power_law, log_grid, reach_n, AveragedPoint, AveragedTrajectory, PowerLawFit};
use qtomo::TomoError;
use serde::Serialize;

/// Grid density used for averaging.
pub const GRID_PER_DECADE: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitBlock {
    #[serde(flatten)]
    pub fit: PowerLawFit,
    pub n_min: f64,
    pub n_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReachEntry {
    pub threshold: f64,
    /// `None` when the averaged curve never gets this low.
    pub n: Option<f64>,
}

/// Mean curve of several runs, or the single run itself with zero spread.
pub fn average(series: &[Vec<(f64, f64)>]) -> Result<AveragedTrajectory, TomoError> {
    match series {
        [] => Err(TomoError::InsufficientData("no trajectories".into())),
        [one] => Ok(AveragedTrajectory {
            points: one.iter().map(|&(n, mean)| AveragedPoint { n, mean, std_err: 0.0 }).collect(),
            runs: 1,
        }),
        many => {
            let lo = many.iter().filter_map(|s| s.first()).map(|p| p.0).fold(0.0, f64::max);
            let hi = many.iter().filter_map(|s| s.last()).map(|p| p.0).fold(f64::INFINITY, f64::min);
            if many.iter().any(Vec::is_empty) || lo > hi {
                return Err(TomoError::InsufficientData("runs share no common N range".into()));
            }
            average_series(many, &log_grid(lo, hi, GRID_PER_DECADE))
        }
    }
}

pub fn fit(traj: &AveragedTrajectory, range: (f64, f64)) -> Result<FitBlock, TomoError> {
    let fit = fit_power_law(traj, range)?;
    Ok(FitBlock { fit, n_min: range.0, n_max: range.1 })
}

pub fn reach(traj: &AveragedTrajectory, thresholds: &[f64]) -> Result<Vec<ReachEntry>, TomoError> {
    thresholds
        .iter()
        .map(|&threshold| match reach_n(traj, threshold) {
            Ok(n) => Ok(ReachEntry { threshold, n: Some(n) }),
            Err(TomoError::Unreachable { .. }) => Ok(ReachEntry { threshold, n: None }),
            Err(e) => Err(e),
        })
        .collect()
}
