//! The `fit` subcommand: power-law fit of a trajectory CSV.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::analysis::{self, FitBlock, ReachEntry};
use crate::error::{CliError, CliResult};
use crate::output::build_version;

pub const DEFAULT_FIT_MIN: f64 = 1e3;

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub version: String,
    pub input: String,
    pub runs: usize,
    pub fit: FitBlock,
    pub reach_n: Vec<ReachEntry>,
}

/// `(N, d_B²)` series per run id, read from a CSV with at least the columns
/// `run_id`, `N` and `d_b2`.
pub fn read_trajectories(path: &Path) -> CliResult<BTreeMap<u64, Vec<(f64, f64)>>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let headers = reader.headers().map_err(|e| CliError::io(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Input(format!("{}: missing column `{name}`", path.display())))
    };
    let (run_col, n_col, d_col) = (column("run_id")?, column("N")?, column("d_b2")?);
    let mut runs: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::io(path, e))?;
        let field = |col: usize, name: &str| {
            record
                .get(col)
                .map(str::trim)
                .ok_or_else(|| CliError::Input(format!("{}: line {line}: missing `{name}`", path.display())))
        };
        let bad = |name: &str, value: &str| {
            CliError::Input(format!("{}: line {line}: `{name}` value `{value}` is malformed", path.display()))
        };
        let run_text = field(run_col, "run_id")?;
        let run_id: u64 = run_text.parse().map_err(|_| bad("run_id", run_text))?;
        let n_text = field(n_col, "N")?;
        let n: f64 = n_text.parse().ok().filter(|n: &f64| n.is_finite() && *n > 0.0).ok_or_else(|| bad("N", n_text))?;
        let d_text = field(d_col, "d_b2")?;
        let d: f64 =
            d_text.parse().ok().filter(|d: &f64| d.is_finite() && *d >= 0.0).ok_or_else(|| bad("d_b2", d_text))?;
        let series = runs.entry(run_id).or_default();
        if series.last().is_some_and(|&(prev, _)| prev >= n) {
            return Err(CliError::Input(format!(
                "{}: line {line}: N must increase within run {run_id}",
                path.display()
            )));
        }
        series.push((n, d));
    }
    if runs.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(runs)
}

/// Fits the run average over `[min, max]`; `max` defaults to the largest `N`
/// in the file.
pub fn fit_csv(path: &Path, min: Option<f64>, max: Option<f64>, thresholds: &[f64]) -> CliResult<FitReport> {
    let runs = read_trajectories(path)?;
    let series: Vec<_> = runs.into_values().collect();
    let largest = series.iter().filter_map(|s| s.last()).map(|p| p.0).fold(0.0, f64::max);
    let range = (min.unwrap_or(DEFAULT_FIT_MIN), max.unwrap_or(largest));
    if !(range.0 > 0.0 && range.0 < range.1) {
        return Err(CliError::Input(format!("fit range [{}, {}] is empty", range.0, range.1)));
    }
    let input_error = |e: qtomo::TomoError| CliError::Input(format!("{}: {e}", path.display()));
    let averaged = analysis::average(&series).map_err(input_error)?;
    let fit = analysis::fit(&averaged, range).map_err(input_error)?;
    let reach_n = analysis::reach(&averaged, thresholds).map_err(input_error)?;
    Ok(FitReport { version: build_version(), input: path.display().to_string(), runs: series.len(), fit, reach_n })
}
