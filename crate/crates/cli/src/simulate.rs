//! The `simulate` subcommand: Monte-Carlo campaigns over several protocols.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qtomo::fisher::gill_massar_coefficient;
use qtomo::protocols::ProtocolKind;
use qtomo::sim::{
    run_campaign, stream_id, AveragedPoint, RunTrajectory, STREAM_PROTOCOL, STREAM_SAMPLING, STREAM_STATE,
};
use serde::Serialize;

use crate::analysis::{self, FitBlock, ReachEntry};
use crate::config::CampaignConfig;
use crate::error::{CliError, CliResult};
use crate::output::{build_version, write_json};

pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
/// Resolved configuration in config-file syntax; `--config` accepts it.
pub const RESOLVED_FILE: &str = "config.resolved";

pub fn trajectory_file(protocol: ProtocolKind) -> String {
    format!("trajectories_{protocol}.csv")
}

#[derive(Serialize)]
struct Row {
    run_id: u64,
    basis_index: usize,
    #[serde(rename = "N")]
    n: u64,
    d_b2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolSummary {
    pub protocol: ProtocolKind,
    pub trajectories: String,
    pub runs: usize,
    /// `None` when the fit range holds too few points; see `fit_error`.
    pub fit: Option<FitBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    pub reach_n: Vec<ReachEntry>,
    /// FO proposals that fell back to a random factorized basis, summed over
    /// runs.
    pub fo_failures: usize,
    /// Estimation calls that hit the iteration cap, summed over runs.
    pub mle_unconverged: usize,
    pub averaged: Vec<AveragedPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub dim: usize,
    /// Coefficient `k` of the `k/N` reference line, when one is quoted for
    /// this dimension and purity class.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gm_coefficient: Option<f64>,
    pub protocols: Vec<ProtocolSummary>,
}

#[derive(Serialize)]
struct RunSeeds {
    run_id: u64,
    state_stream: u64,
    protocol_stream: u64,
    sampling_stream: u64,
}

#[derive(Serialize)]
struct Manifest {
    version: String,
    seed: u64,
    config_file: &'static str,
    config: BTreeMap<String, String>,
    files: Vec<String>,
    runs: Vec<RunSeeds>,
}

fn write_trajectories(path: &Path, runs: &[RunTrajectory]) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    for run in runs {
        for p in &run.points {
            writer
                .serialize(Row { run_id: run.run_id, basis_index: p.basis_index, n: p.n, d_b2: p.d_b2 })
                .map_err(|e| CliError::io(path, e))?;
        }
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

fn summarize(config: &CampaignConfig, protocol: ProtocolKind, runs: &[RunTrajectory]) -> CliResult<ProtocolSummary> {
    let series: Vec<_> = runs.iter().map(RunTrajectory::series).collect();
    let averaged = analysis::average(&series)?;
    let (fit, fit_error) = match analysis::fit(&averaged, config.fit_range) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ProtocolSummary {
        protocol,
        trajectories: trajectory_file(protocol),
        runs: runs.len(),
        fit,
        fit_error,
        reach_n: analysis::reach(&averaged, &config.thresholds)?,
        fo_failures: runs.iter().map(|r| r.fo_failures).sum(),
        mle_unconverged: runs.iter().map(|r| r.mle_unconverged).sum(),
        averaged: averaged.points,
    })
}

/// Runs every configured protocol on the same true states and writes the
/// trajectory CSVs, the summary, the manifest and the resolved config into
/// `config.out`.
pub fn simulate(config: &CampaignConfig) -> CliResult<Summary> {
    let out: &PathBuf = &config.out;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let spec = config.state_spec();
    let run_ids: Vec<u64> = (0..config.runs as u64).collect();
    let mut protocols = Vec::with_capacity(config.protocols.len());
    for &protocol in &config.protocols {
        log::info!("running {} x {protocol} on {} with {} workers", config.runs, config.state, config.jobs);
        let runs = run_campaign(&spec, &config.run_config(protocol), &run_ids, config.jobs)?;
        write_trajectories(&out.join(trajectory_file(protocol)), &runs)?;
        protocols.push(summarize(config, protocol, &runs)?);
    }

    let entries = config.entries();
    let version = build_version();
    let summary = Summary {
        version: version.clone(),
        config: entries.clone(),
        dim: config.dim(),
        gm_coefficient: gill_massar_coefficient(config.dim(), config.state.is_pure()),
        protocols,
    };
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    let resolved = out.join(RESOLVED_FILE);
    std::fs::write(&resolved, config.to_file_text()).map_err(|e| CliError::io(&resolved, e))?;

    let mut files: Vec<String> = config.protocols.iter().map(|&p| trajectory_file(p)).collect();
    files.extend([SUMMARY_FILE.to_string(), RESOLVED_FILE.to_string()]);
    let manifest = Manifest {
        version,
        seed: config.seed,
        config_file: RESOLVED_FILE,
        config: entries,
        files,
        runs: run_ids
            .iter()
            .map(|&run_id| RunSeeds {
                run_id,
                state_stream: stream_id(run_id, STREAM_STATE),
                protocol_stream: stream_id(run_id, STREAM_PROTOCOL),
                sampling_stream: stream_id(run_id, STREAM_SAMPLING),
            })
            .collect(),
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(summary)
}
