//! Trajectory aggregation, power-law fits and threshold crossings.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};

use super::RunTrajectory;

/// Relative slack when comparing `N` values against range endpoints.
const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedPoint {
    pub n: f64,
    pub mean: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedTrajectory {
    pub points: Vec<AveragedPoint>,
    pub runs: usize,
}

impl AveragedTrajectory {
    /// Mean value at `n`, interpolated log-log between grid points.
    pub fn value_at(&self, n: f64) -> Result<f64> {
        let series: Vec<(f64, f64)> = self.points.iter().map(|p| (p.n, p.mean)).collect();
        interpolate(&series, n)
    }

    pub fn series(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.n, p.mean)).collect()
    }
}

/// `c N^a` with standard errors from the log-log regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub c: f64,
    pub dc: f64,
    pub a: f64,
    pub da: f64,
    /// Number of points inside the fit range.
    pub points: usize,
}

/// Grid of `per_decade` logarithmically spaced points per decade inside
/// `[lo, hi]`, always including both endpoints.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    if !(lo > 0.0 && hi >= lo) {
        return Vec::new();
    }
    let pd = per_decade.max(1) as f64;
    let first = (lo.log10() * pd).ceil() as i64;
    let last = (hi.log10() * pd).floor() as i64;
    let mut grid = vec![lo];
    for k in first..=last {
        let x = 10f64.powf(k as f64 / pd);
        if x > lo * (1.0 + RANGE_SLACK) && x < hi * (1.0 - RANGE_SLACK) {
            grid.push(x);
        }
    }
    if hi > lo {
        grid.push(hi);
    }
    grid
}

/// Value of a piecewise power law through `series` (sorted by `x`) at `x`.
/// Falls back to linear interpolation when a bracketing value is not
/// positive.
pub fn interpolate(series: &[(f64, f64)], x: f64) -> Result<f64> {
    let (first, last) = match (series.first(), series.last()) {
        (Some(f), Some(l)) => (f.0, l.0),
        _ => return Err(TomoError::InsufficientData("empty trajectory".into())),
    };
    if x < first * (1.0 - RANGE_SLACK) || x > last * (1.0 + RANGE_SLACK) {
        return Err(TomoError::InvalidArgument(format!("N = {x} outside the data range [{first}, {last}]")));
    }
    let j = series.partition_point(|p| p.0 < x);
    if j < series.len() && (series[j].0 - x).abs() <= RANGE_SLACK * x {
        return Ok(series[j].1);
    }
    if j == 0 {
        return Ok(series[0].1);
    }
    if j == series.len() {
        return Ok(series[j - 1].1);
    }
    let (x0, y0) = series[j - 1];
    let (x1, y1) = series[j];
    if y0 > 0.0 && y1 > 0.0 {
        let t = (x / x0).ln() / (x1 / x0).ln();
        Ok((y0.ln() + t * (y1 / y0).ln()).exp())
    } else {
        let t = (x - x0) / (x1 - x0);
        Ok(y0 + t * (y1 - y0))
    }
}

/// Largest `[lo, hi]` covered by every run.
pub fn common_range(runs: &[RunTrajectory]) -> Option<(f64, f64)> {
    let lo = runs.iter().map(|r| r.points.first().map(|p| p.n as f64)).try_fold(0.0f64, |m, x| x.map(|x| m.max(x)))?;
    let hi =
        runs.iter().map(|r| r.points.last().map(|p| p.n as f64)).try_fold(f64::INFINITY, |m, x| x.map(|x| m.min(x)))?;
    (lo <= hi && !runs.is_empty()).then_some((lo, hi))
}

/// Mean and standard error across series after interpolating each onto
/// `grid`.
pub fn average_series(series: &[Vec<(f64, f64)>], grid: &[f64]) -> Result<AveragedTrajectory> {
    if series.len() < 2 {
        return Err(TomoError::InsufficientData(format!("averaging needs at least 2 runs, got {}", series.len())));
    }
    let m = series.len() as f64;
    let mut points = Vec::with_capacity(grid.len());
    for &n in grid {
        let values = series.iter().map(|s| interpolate(s, n)).collect::<Result<Vec<_>>>()?;
        let mean = values.iter().sum::<f64>() / m;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        points.push(AveragedPoint { n, mean, std_err: (var / m).sqrt() });
    }
    Ok(AveragedTrajectory { points, runs: series.len() })
}

/// Averages the `d_B²` trajectories of `runs` on `grid`.
pub fn average_trajectories(runs: &[RunTrajectory], grid: &[f64]) -> Result<AveragedTrajectory> {
    let series: Vec<_> = runs.iter().map(RunTrajectory::series).collect();
    average_series(&series, grid)
}

/// Least-squares fit of `ln y = ln c + a ln N` over points with `N` in
/// `range`.
pub fn fit_power_law_points(series: &[(f64, f64)], range: (f64, f64)) -> Result<PowerLawFit> {
    let (lo, hi) = range;
    let inside: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(n, _)| n >= lo * (1.0 - RANGE_SLACK) && n <= hi * (1.0 + RANGE_SLACK))
        .collect();
    if inside.len() < 3 {
        return Err(TomoError::InsufficientData(format!(
            "power-law fit needs at least 3 points in [{lo}, {hi}], found {}",
            inside.len()
        )));
    }
    if let Some(&(n, y)) = inside.iter().find(|&&(n, y)| !(y > 0.0) || !(n > 0.0)) {
        return Err(TomoError::InvalidArgument(format!("nonpositive value {y} at N = {n} in fit range")));
    }
    let k = inside.len() as f64;
    let xs: Vec<f64> = inside.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = inside.iter().map(|p| p.1.ln()).collect();
    let xm = xs.iter().sum::<f64>() / k;
    let ym = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(TomoError::InsufficientData("all fit points share one N".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let a = sxy / sxx;
    let intercept = ym - a * xm;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - a * x).powi(2)).sum();
    let s2 = ssr / (k - 2.0);
    let da = (s2 / sxx).sqrt();
    let dintercept = (s2 * (1.0 / k + xm * xm / sxx)).sqrt();
    let c = intercept.exp();
    Ok(PowerLawFit { c, dc: c * dintercept, a, da, points: inside.len() })
}

pub fn fit_power_law(traj: &AveragedTrajectory, range: (f64, f64)) -> Result<PowerLawFit> {
    fit_power_law_points(&traj.series(), range)
}

/// First `N` at which `series` drops to `threshold`, interpolated log-log
/// between the bracketing points.
pub fn reach_n_points(series: &[(f64, f64)], threshold: f64) -> Result<f64> {
    let j = series.iter().position(|&(_, y)| y <= threshold).ok_or(TomoError::Unreachable { threshold })?;
    if j == 0 {
        return Ok(series[0].0);
    }
    let (x0, y0) = series[j - 1];
    let (x1, y1) = series[j];
    if y1 > 0.0 && y0 > y1 {
        let t = (threshold / y0).ln() / (y1 / y0).ln();
        Ok((x0.ln() + t * (x1 / x0).ln()).exp())
    } else {
        let t = (y0 - threshold) / (y0 - y1);
        Ok(x0 + t * (x1 - x0))
    }
}

pub fn reach_n(traj: &AveragedTrajectory, threshold: f64) -> Result<f64> {
    reach_n_points(&traj.series(), threshold)
}
