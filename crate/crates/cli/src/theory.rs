//! The `theory` subcommand: Fisher-information predictions for a fixed
//! protocol at the true state.

use qtomo::fisher::{dof, fisher_information, gill_massar_coefficient, infidelity_moments};
use qtomo::protocols::{ProtocolKind, ProtocolState};
use qtomo::sim::{stream_id, true_state, STREAM_PROTOCOL, STREAM_STATE};
use qtomo::{RngStream, TomoError};
use serde::Serialize;

use crate::config::{check_protocols, format_split, parse_protocols, resolve_estimator_rank, resolve_state, RawConfig};
use crate::error::{CliError, CliResult};
use crate::output::build_version;

const DEFAULT_N: u64 = 100_000;

#[derive(Debug, Clone, Serialize)]
pub struct TheoryReport {
    pub version: String,
    pub state: String,
    pub split: String,
    pub dim: usize,
    pub seed: u64,
    pub run_id: u64,
    pub protocol: ProtocolKind,
    pub bases: usize,
    pub n_total: f64,
    /// Estimator rank `R`.
    pub rank: usize,
    pub nu: usize,
    /// Singular values of the Fisher matrix, descending.
    pub sigma: Vec<f64>,
    /// `None` when a singular value inside the summation range vanishes.
    pub mean_infid: Option<f64>,
    pub std_infid: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gm_coefficient: Option<f64>,
}

/// Evaluates the infidelity law for `bases` bases of the configured protocol
/// with `N / bases` counts each. The true state is the one `simulate` uses
/// for `run_id`; adaptive protocols see the true state as their estimator.
pub fn theory(raw: &RawConfig, bases: Option<usize>, run_id: u64) -> CliResult<TheoryReport> {
    let spec = resolve_state(raw)?;
    let dim = spec.dim();
    let protocol = match raw.get("protocols") {
        None => ProtocolKind::Gr,
        Some(v) => match parse_protocols(v)?.as_slice() {
            &[one] => one,
            _ => return Err(CliError::key("protocols", "theory takes a single protocol")),
        },
    };
    check_protocols(&[protocol], &spec.split)?;
    let rank = if raw.contains("rank") { resolve_estimator_rank(raw, &spec)? } else { spec.rank() };
    let n_total = match raw.get("n_total") {
        Some(v) => v
            .parse::<f64>()
            .ok()
            .filter(|n| n.is_finite() && *n > 0.0)
            .ok_or_else(|| CliError::key("n_total", format!("`{v}` is not a positive number")))?,
        None => DEFAULT_N as f64,
    };
    let bases = bases.unwrap_or(2 * (dim + 1));
    if bases == 0 {
        return Err(CliError::Input("--bases must be at least 1".into()));
    }
    let nu = dof(rank, dim).map_err(|e| CliError::key("rank", e))?;

    let truth = true_state(&spec, &mut RngStream::new(spec.seed, stream_id(run_id, STREAM_STATE)))?;
    let rng = RngStream::new(spec.seed, stream_id(run_id, STREAM_PROTOCOL));
    let mut state = ProtocolState::new(protocol, spec.split.clone(), rng)?;
    state.update_estimator(truth.clone())?;
    let block = n_total / bases as f64;
    let measured = (0..bases).map(|_| Ok((state.propose_basis()?, block))).collect::<Result<Vec<_>, TomoError>>()?;
    let h = fisher_information(&truth, rank, &measured).map_err(|e| match e {
        TomoError::RankTooSmall { .. } => CliError::key("rank", e),
        other => other.into(),
    })?;
    let (mean_infid, std_infid, warning) = match infidelity_moments(&h, &nu) {
        Ok(m) => (Some(m.mean), Some(m.stdev), None),
        Err(e @ TomoError::ZeroSingularValues { .. }) => (None, None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    Ok(TheoryReport {
        version: build_version(),
        state: spec.kind.to_string(),
        split: format_split(&spec.split),
        dim,
        seed: spec.seed,
        run_id,
        protocol,
        bases,
        n_total,
        rank,
        nu: nu.nu,
        sigma: h.singular_values().to_vec(),
        mean_infid,
        std_infid,
        warning,
        gm_coefficient: gill_massar_coefficient(dim, spec.kind.is_pure()),
    })
}
