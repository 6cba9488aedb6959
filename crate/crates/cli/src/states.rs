//! The `states` subcommand: metrics of the configured true state.

use qtomo::quantum::state_metrics;
use qtomo::sim::{stream_id, true_state, STREAM_STATE};
use qtomo::RngStream;
use serde::Serialize;

use crate::config::{format_split, resolve_state, RawConfig};
use crate::error::CliResult;

#[derive(Debug, Clone, Serialize)]
pub struct MatrixParts {
    pub real: Vec<Vec<f64>>,
    pub imag: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateReport {
    pub state: String,
    pub split: String,
    pub dim: usize,
    pub seed: u64,
    pub run_id: u64,
    pub purity: f64,
    pub negativity: f64,
    pub rank: usize,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Row-major density matrix, included on request.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixParts>,
}

/// Builds the state `simulate` would use for `run_id`.
pub fn states(raw: &RawConfig, run_id: u64, with_matrix: bool) -> CliResult<StateReport> {
    let spec = resolve_state(raw)?;
    let rho = true_state(&spec, &mut RngStream::new(spec.seed, stream_id(run_id, STREAM_STATE)))?;
    let metrics = state_metrics(&rho, &spec.split)?;
    let d = rho.dim();
    let m = rho.matrix();
    let matrix = with_matrix.then(|| MatrixParts {
        real: (0..d).map(|i| (0..d).map(|j| m[(i, j)].re).collect()).collect(),
        imag: (0..d).map(|i| (0..d).map(|j| m[(i, j)].im).collect()).collect(),
    });
    Ok(StateReport {
        state: spec.kind.to_string(),
        split: format_split(&spec.split),
        dim: d,
        seed: spec.seed,
        run_id,
        purity: metrics.purity,
        negativity: metrics.negativity,
        rank: rho.rank(),
        eigenvalues: rho.eigenvalues(),
        matrix,
    })
}
