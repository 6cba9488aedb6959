//! Flat `key = value` campaign configuration with dotted keys.
//!
//! Files hold one entry per line; `#` starts a comment. Command-line flags
//! are applied on top of the file through [`RawConfig::set`], so every
//! setting has exactly one spelling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qtomo::mle::LikelihoodModel;
use qtomo::protocols::{mub_supported, ProtocolKind, ScheduleConfig, SearchConfig};
use qtomo::sim::{ReferenceMode, RunConfig, TrueStateKind, TrueStateSpec};
use qtomo::BipartiteStructure;

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "QTOMO_OUT";
const DEFAULT_OUT: &str = "qtomo-out";

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "dim",
    "split",
    "state",
    "protocols",
    "rank",
    "n_total",
    "runs",
    "seed",
    "jobs",
    "out",
    "schedule.floor",
    "schedule.divisor",
    "fit.min",
    "fit.max",
    "reach.thresholds",
    "reference",
    "model",
    "mle.tolerance",
    "mle.max_iterations",
    "search.tolerance",
    "search.restarts",
    "search.max_iterations",
];

/// Unvalidated key-value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            if raw.entries.contains_key(key) {
                return Err(CliError::key(key, format!("duplicate entry on line {}", i + 1)));
            }
            raw.set(key, value.trim())?;
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        if !KEYS.contains(&key) {
            return Err(CliError::key(key, "unknown key"));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> CliResult<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("override `{pair}` is not of the form key=value")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }
}

/// Estimator rank setting before the dimension is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RankSetting {
    Full,
    Fixed(usize),
}

/// A validated campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub split: BipartiteStructure,
    pub state: TrueStateKind,
    pub protocols: Vec<ProtocolKind>,
    /// Estimator rank `R_e`.
    pub rank: usize,
    pub n_total: u64,
    pub runs: usize,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
    pub schedule: ScheduleConfig,
    pub fit_range: (f64, f64),
    pub thresholds: Vec<f64>,
    pub reference: ReferenceMode,
    pub model: LikelihoodModel,
    pub mle_tolerance: f64,
    pub mle_max_iterations: usize,
    pub search: SearchConfig,
}

fn parse_f64(key: &str, value: &str) -> CliResult<f64> {
    let x: f64 = value.parse().map_err(|_| CliError::key(key, format!("`{value}` is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::key(key, format!("`{value}` is not finite")));
    }
    Ok(x)
}

fn parse_positive(key: &str, value: &str) -> CliResult<f64> {
    let x = parse_f64(key, value)?;
    if x <= 0.0 {
        return Err(CliError::key(key, format!("must be positive, got {value}")));
    }
    Ok(x)
}

/// Nonnegative integer; scientific notation such as `1e5` is accepted.
fn parse_count(key: &str, value: &str) -> CliResult<u64> {
    if let Ok(n) = value.parse::<u64>() {
        return Ok(n);
    }
    let x = parse_f64(key, value)?;
    if x < 0.0 || x.fract() != 0.0 || x > 2f64.powi(53) {
        return Err(CliError::key(key, format!("`{value}` is not a nonnegative integer")));
    }
    Ok(x as u64)
}

fn parse_positive_count(key: &str, value: &str) -> CliResult<u64> {
    let n = parse_count(key, value)?;
    if n == 0 {
        return Err(CliError::key(key, "must be at least 1"));
    }
    Ok(n)
}

fn parse_split(value: &str) -> CliResult<BipartiteStructure> {
    let dims = value
        .split(['x', 'X', ',', '*'])
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::key("split", format!("`{value}` is not a list of factor dimensions like 3x3")))?;
    BipartiteStructure::new(dims).map_err(|e| CliError::key("split", e))
}

/// Resolves `split` and `dim`; a bare `dim` means two equal factors.
pub fn resolve_split(raw: &RawConfig) -> CliResult<BipartiteStructure> {
    let split = raw.get("split").map(parse_split).transpose()?;
    let dim = raw.get("dim").map(|v| parse_positive_count("dim", v)).transpose()?;
    match (split, dim) {
        (Some(s), Some(d)) if s.total_dim() as u64 != d => Err(CliError::key(
            "dim",
            format!("D = {d} disagrees with split {} (D = {})", format_split(&s), s.total_dim()),
        )),
        (Some(s), _) => Ok(s),
        (None, Some(d)) => BipartiteStructure::square(d as usize).map_err(|e| CliError::key("dim", e)),
        (None, None) => Ok(BipartiteStructure::symmetric(3).expect("valid split")),
    }
}

pub fn format_split(split: &BipartiteStructure) -> String {
    split.factor_dims().iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

pub fn parse_protocols(value: &str) -> CliResult<Vec<ProtocolKind>> {
    let mut out = Vec::new();
    for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let kind: ProtocolKind = name.parse().map_err(|e| CliError::key("protocols", e))?;
        if out.contains(&kind) {
            return Err(CliError::key("protocols", format!("`{name}` listed twice")));
        }
        out.push(kind);
    }
    if out.is_empty() {
        return Err(CliError::key("protocols", "no protocol given"));
    }
    Ok(out)
}

/// Rejects protocols that cannot run on `split`.
pub fn check_protocols(protocols: &[ProtocolKind], split: &BipartiteStructure) -> CliResult<()> {
    for &p in protocols {
        if p == ProtocolKind::Amub && !mub_supported(split.total_dim()) {
            return Err(CliError::key(
                "protocols",
                format!("amub needs a prime-power dimension, D = {}", split.total_dim()),
            ));
        }
        if matches!(p, ProtocolKind::Fr | ProtocolKind::Fo) && split.num_factors() != 2 {
            return Err(CliError::key("protocols", format!("{p} needs a two-factor split")));
        }
    }
    Ok(())
}

fn resolve_rank(raw: &RawConfig, dim: usize) -> CliResult<usize> {
    let setting = match raw.get("rank") {
        None => RankSetting::Full,
        Some(v) if v.eq_ignore_ascii_case("full") => RankSetting::Full,
        Some(v) => RankSetting::Fixed(parse_count("rank", v)? as usize),
    };
    match setting {
        RankSetting::Full => Ok(dim),
        RankSetting::Fixed(0) => Err(CliError::key("rank", "R_e must be at least 1")),
        RankSetting::Fixed(r) if r > dim => Err(CliError::key("rank", format!("R_e = {r} exceeds D = {dim}"))),
        RankSetting::Fixed(r) => Ok(r),
    }
}

/// True-state spec from `state`, `split`/`dim` and `seed`.
pub fn resolve_state(raw: &RawConfig) -> CliResult<TrueStateSpec> {
    let split = resolve_split(raw)?;
    let kind: TrueStateKind = raw.get("state").unwrap_or("haar-pure").parse().map_err(|e| CliError::key("state", e))?;
    let seed = raw.get("seed").map(|v| parse_count("seed", v)).transpose()?.unwrap_or(0);
    TrueStateSpec::new(kind, split, seed).map_err(|e| CliError::key("state", e))
}

/// Estimator rank for `spec`; defaults to full rank.
pub fn resolve_estimator_rank(raw: &RawConfig, spec: &TrueStateSpec) -> CliResult<usize> {
    resolve_rank(raw, spec.dim())
}

impl CampaignConfig {
    pub fn from_raw(raw: &RawConfig) -> CliResult<Self> {
        let spec = resolve_state(raw)?;
        let dim = spec.dim();
        let protocols = parse_protocols(raw.get("protocols").unwrap_or("fo,fr"))?;
        check_protocols(&protocols, &spec.split)?;
        let rank = resolve_rank(raw, dim)?;
        let get = |key: &str| raw.get(key);
        let n_total = get("n_total").map(|v| parse_positive_count("n_total", v)).transpose()?.unwrap_or(100_000);
        let runs = get("runs").map(|v| parse_positive_count("runs", v)).transpose()?.unwrap_or(10) as usize;
        let jobs = match get("jobs") {
            Some(v) => parse_positive_count("jobs", v)? as usize,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let out = match get("out") {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            Some(_) => return Err(CliError::key("out", "empty path")),
            None => std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from),
        };
        let defaults = ScheduleConfig::default();
        let schedule = ScheduleConfig {
            floor: get("schedule.floor")
                .map(|v| parse_positive_count("schedule.floor", v))
                .transpose()?
                .unwrap_or(defaults.floor),
            divisor: get("schedule.divisor")
                .map(|v| parse_positive_count("schedule.divisor", v))
                .transpose()?
                .unwrap_or(defaults.divisor),
        };
        let fit_min = get("fit.min").map(|v| parse_positive("fit.min", v)).transpose()?.unwrap_or(1e3);
        let fit_max = get("fit.max").map(|v| parse_positive("fit.max", v)).transpose()?.unwrap_or(n_total as f64);
        if fit_min >= fit_max {
            return Err(CliError::key("fit.min", format!("range [{fit_min}, {fit_max}] is empty")));
        }
        let thresholds = get("reach.thresholds")
            .unwrap_or("1e-2,1e-3")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|v| parse_positive("reach.thresholds", v))
            .collect::<CliResult<Vec<_>>>()?;
        let reference: ReferenceMode =
            get("reference").unwrap_or("true-state").parse().map_err(|e| CliError::key("reference", e))?;
        let model: LikelihoodModel =
            get("model").unwrap_or("multinomial").parse().map_err(|e| CliError::key("model", e))?;
        let base = RunConfig::new(ProtocolKind::Fr, rank, n_total);
        let mle_tolerance =
            get("mle.tolerance").map(|v| parse_positive("mle.tolerance", v)).transpose()?.unwrap_or(base.mle_tolerance);
        let mle_max_iterations = get("mle.max_iterations")
            .map(|v| parse_positive_count("mle.max_iterations", v))
            .transpose()?
            .map_or(base.mle_max_iterations, |n| n as usize);
        let search = SearchConfig {
            tolerance: get("search.tolerance")
                .map(|v| parse_positive("search.tolerance", v))
                .transpose()?
                .unwrap_or(base.search.tolerance),
            restarts: get("search.restarts")
                .map(|v| parse_positive_count("search.restarts", v))
                .transpose()?
                .map_or(base.search.restarts, |n| n as usize),
            max_iterations: get("search.max_iterations")
                .map(|v| parse_positive_count("search.max_iterations", v))
                .transpose()?
                .map_or(base.search.max_iterations, |n| n as usize),
        };
        let config = Self {
            split: spec.split,
            state: spec.kind,
            protocols,
            rank,
            n_total,
            runs,
            seed: spec.seed,
            jobs,
            out,
            schedule,
            fit_range: (fit_min, fit_max),
            thresholds,
            reference,
            model,
            mle_tolerance,
            mle_max_iterations,
            search,
        };
        for &protocol in &config.protocols {
            config
                .run_config(protocol)
                .validate(dim)
                .map_err(|e| CliError::Input(format!("invalid configuration: {e}")))?;
        }
        Ok(config)
    }

    pub fn dim(&self) -> usize {
        self.split.total_dim()
    }

    pub fn state_spec(&self) -> TrueStateSpec {
        TrueStateSpec { kind: self.state, split: self.split.clone(), seed: self.seed }
    }

    pub fn run_config(&self, protocol: ProtocolKind) -> RunConfig {
        RunConfig {
            protocol,
            estimator_rank: self.rank,
            n_total: self.n_total,
            schedule: self.schedule,
            model: self.model,
            reference: self.reference,
            mle_tolerance: self.mle_tolerance,
            mle_max_iterations: self.mle_max_iterations,
            search: self.search,
        }
    }

    /// Fully resolved settings; feeding them back through [`RawConfig`]
    /// reproduces this configuration.
    pub fn entries(&self) -> BTreeMap<String, String> {
        let join = |items: Vec<String>| items.join(",");
        let pairs = [
            ("split", format_split(&self.split)),
            ("dim", self.dim().to_string()),
            ("state", self.state.to_string()),
            ("protocols", join(self.protocols.iter().map(|p| p.to_string()).collect())),
            ("rank", self.rank.to_string()),
            ("n_total", self.n_total.to_string()),
            ("runs", self.runs.to_string()),
            ("seed", self.seed.to_string()),
            ("jobs", self.jobs.to_string()),
            ("out", self.out.display().to_string()),
            ("schedule.floor", self.schedule.floor.to_string()),
            ("schedule.divisor", self.schedule.divisor.to_string()),
            ("fit.min", format!("{:e}", self.fit_range.0)),
            ("fit.max", format!("{:e}", self.fit_range.1)),
            ("reach.thresholds", join(self.thresholds.iter().map(|t| format!("{t:e}")).collect())),
            ("reference", self.reference.to_string()),
            ("model", self.model.to_string()),
            ("mle.tolerance", format!("{:e}", self.mle_tolerance)),
            ("mle.max_iterations", self.mle_max_iterations.to_string()),
            ("search.tolerance", format!("{:e}", self.search.tolerance)),
            ("search.restarts", self.search.restarts.to_string()),
            ("search.max_iterations", self.search.max_iterations.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// The resolved settings in config-file syntax.
    pub fn to_file_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
