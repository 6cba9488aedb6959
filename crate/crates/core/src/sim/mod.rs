//! End-to-end tomography simulation: true states, outcome sampling, run
//! loops, trajectory averaging and power-law fits.

mod analysis;
mod run;
mod sampling;
mod states;

pub use analysis::{
    average_series, average_trajectories, common_range, fit_power_law, fit_power_law_points, interpolate, log_grid,
    reach_n, reach_n_points, AveragedPoint, AveragedTrajectory, PowerLawFit,
};
pub use run::{
    run_campaign, run_tomography, run_with_state, stream_id, ReferenceMode, RunConfig, RunTrajectory, TrajectoryPoint,
    STREAM_PROTOCOL, STREAM_SAMPLING, STREAM_STATE,
};
pub use sampling::sample_outcomes;
pub use states::{
    adjust_purity, appendix_eigenvalues, appendix_eigenvectors, appendix_printed_eigenvectors, appendix_state,
    gram_schmidt, purity_weight, true_state, TrueStateKind, TrueStateSpec, APPENDIX_DIM,
};
