//! Library of true states: random ensembles, nominal laboratory states and
//! the fixed nine-dimensional family of prescribed rank.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::quantum::{BipartiteStructure, CMatrix, DensityMatrix, StateVector, C64};
use crate::random::{bures_random_state, haar_pure_state, RngStream};

const EIGENVECTOR_TABLE: &str = include_str!("../../data/appendix_eigenvectors.txt");
const EIGENVALUE_TABLE: &str = include_str!("../../data/appendix_eigenvalues.txt");

/// Dimension of the fixed-rank family.
pub const APPENDIX_DIM: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum TrueStateKind {
    HaarPure,
    /// Bures-random state of the given rank.
    BuresMixed(usize),
    /// Member of the fixed nine-dimensional family with `R_s` nonzero
    /// eigenvalues.
    AppendixRank(usize),
    /// `|e₁⟩ ⊗ |e₁⟩`.
    GaussianNominal,
    /// `(|e₂⟩ ⊗ |e₁⟩ + |e₁⟩ ⊗ |e₂⟩)/√2`.
    BellNominal,
}

impl TrueStateKind {
    /// `true` for kinds that are pure by construction.
    pub fn is_pure(self) -> bool {
        matches!(self, Self::HaarPure | Self::GaussianNominal | Self::BellNominal)
            || matches!(self, Self::BuresMixed(1))
    }

    /// Draws a fresh state for every run.
    pub fn is_random(self) -> bool {
        matches!(self, Self::HaarPure | Self::BuresMixed(_))
    }
}

impl fmt::Display for TrueStateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::HaarPure => f.write_str("haar-pure"),
            Self::BuresMixed(r) => write!(f, "bures-mixed:{r}"),
            Self::AppendixRank(r) => write!(f, "appendix-rank:{r}"),
            Self::GaussianNominal => f.write_str("gaussian-nominal"),
            Self::BellNominal => f.write_str("bell-nominal"),
        }
    }
}

impl FromStr for TrueStateKind {
    type Err = TomoError;

    /// Accepts `haar-pure`, `bures-mixed:R`, `appendix-rank:R`,
    /// `gaussian-nominal` and `bell-nominal`; `bures-mixed` alone means full
    /// rank and is stored as rank 0 until resolved against a dimension.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s.as_str(), None),
        };
        let rank = |a: Option<&str>| -> Result<usize> {
            let a = a.ok_or_else(|| TomoError::Parse(format!("`{name}` needs a rank, e.g. `{name}:2`")))?;
            a.trim().parse().map_err(|_| TomoError::Parse(format!("invalid rank `{a}` in `{s}`")))
        };
        match name {
            "haar-pure" if arg.is_none() => Ok(Self::HaarPure),
            "bures-mixed" => Ok(Self::BuresMixed(if arg.is_some() { rank(arg)? } else { 0 })),
            "appendix-rank" => Ok(Self::AppendixRank(rank(arg)?)),
            "gaussian-nominal" if arg.is_none() => Ok(Self::GaussianNominal),
            "bell-nominal" if arg.is_none() => Ok(Self::BellNominal),
            _ => Err(TomoError::Parse(format!("unknown true-state kind `{s}`"))),
        }
    }
}

impl From<TrueStateKind> for String {
    fn from(k: TrueStateKind) -> Self {
        k.to_string()
    }
}

impl TryFrom<String> for TrueStateKind {
    type Error = TomoError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrueStateSpec {
    pub kind: TrueStateKind,
    pub split: BipartiteStructure,
    pub seed: u64,
}

impl TrueStateSpec {
    /// Checks that the kind is available in this dimension and resolves a
    /// rank-less `bures-mixed` to full rank.
    pub fn new(kind: TrueStateKind, split: BipartiteStructure, seed: u64) -> Result<Self> {
        let dim = split.total_dim();
        let kind = match kind {
            TrueStateKind::BuresMixed(0) => TrueStateKind::BuresMixed(dim),
            k => k,
        };
        match kind {
            TrueStateKind::BuresMixed(r) if r > dim => {
                return Err(TomoError::InvalidRank { rank: r, dim });
            }
            TrueStateKind::AppendixRank(r) => {
                if dim != APPENDIX_DIM {
                    return Err(TomoError::UnsupportedState(format!(
                        "{kind} is defined only for D = {APPENDIX_DIM}, not D = {dim}"
                    )));
                }
                if !(2..=APPENDIX_DIM).contains(&r) {
                    return Err(TomoError::UnsupportedState(format!("{kind}: rank must be in 2..=9")));
                }
            }
            TrueStateKind::GaussianNominal | TrueStateKind::BellNominal => {
                let (da, db) = split.bipartite_dims()?;
                if kind == TrueStateKind::BellNominal && (da < 2 || db < 2) {
                    return Err(TomoError::UnsupportedState(format!("{kind} needs both factors of dimension ≥ 2")));
                }
            }
            _ => {}
        }
        Ok(Self { kind, split, seed })
    }

    pub fn dim(&self) -> usize {
        self.split.total_dim()
    }

    /// Nominal rank of the state.
    pub fn rank(&self) -> usize {
        match self.kind {
            TrueStateKind::HaarPure | TrueStateKind::GaussianNominal | TrueStateKind::BellNominal => 1,
            TrueStateKind::BuresMixed(r) | TrueStateKind::AppendixRank(r) => r,
        }
    }
}

/// Builds the state described by `spec`. Random kinds draw from `rng`; the
/// others ignore it.
pub fn true_state(spec: &TrueStateSpec, rng: &mut RngStream) -> Result<DensityMatrix> {
    let dim = spec.dim();
    match spec.kind {
        TrueStateKind::HaarPure => Ok(haar_pure_state(dim, rng).projector()),
        TrueStateKind::BuresMixed(r) => bures_random_state(dim, r.max(1), rng),
        TrueStateKind::AppendixRank(r) => {
            if dim != APPENDIX_DIM {
                return Err(TomoError::UnsupportedState(format!("appendix-rank at D = {dim}")));
            }
            appendix_state(r)
        }
        TrueStateKind::GaussianNominal => Ok(StateVector::basis(dim, 0).projector()),
        TrueStateKind::BellNominal => {
            let (_, db) = spec.split.bipartite_dims()?;
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let mut amps = vec![C64::new(0.0, 0.0); dim];
            amps[db] = C64::new(s, 0.0);
            amps[1] = C64::new(s, 0.0);
            Ok(StateVector::from_vec(amps)?.projector())
        }
    }
}

fn parse_rows(table: &str) -> Result<Vec<Vec<f64>>> {
    table
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| TomoError::Parse(format!("bad number `{t}` in data table"))))
                .collect()
        })
        .collect()
}

/// The eigenvector matrix exactly as tabulated (five decimals).
pub fn appendix_printed_eigenvectors() -> Result<CMatrix> {
    let rows = parse_rows(EIGENVECTOR_TABLE)?;
    let n = APPENDIX_DIM;
    if rows.len() != 2 * n || rows.iter().any(|r| r.len() != n) {
        return Err(TomoError::Parse("eigenvector table must hold two 9x9 blocks".into()));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], rows[n + i][j])))
}

/// Gram–Schmidt on the columns of `m`, in column order.
pub fn gram_schmidt(m: &CMatrix) -> Result<CMatrix> {
    let mut q = m.clone();
    for j in 0..q.ncols() {
        let mut v = q.column(j).into_owned();
        for k in 0..j {
            let e = q.column(k).into_owned();
            let overlap = e.dotc(&v);
            v -= e * overlap;
        }
        let norm = v.norm();
        if norm < 1e-12 {
            return Err(TomoError::ZeroVector);
        }
        q.set_column(j, &v.unscale(norm));
    }
    Ok(q)
}

/// The tabulated eigenvector matrix made exactly unitary.
pub fn appendix_eigenvectors() -> Result<CMatrix> {
    gram_schmidt(&appendix_printed_eigenvectors()?)
}

/// Tabulated eigenvalues for `R_s ∈ 2..=9`, renormalized to unit sum.
pub fn appendix_eigenvalues(rank: usize) -> Result<Vec<f64>> {
    let rows = parse_rows(EIGENVALUE_TABLE)?;
    let row = rows
        .iter()
        .find(|r| r.first().map(|&x| x as usize) == Some(rank))
        .ok_or_else(|| TomoError::UnsupportedState(format!("no tabulated eigenvalues for rank {rank}")))?;
    let values = &row[1..];
    if values.len() != APPENDIX_DIM {
        return Err(TomoError::Parse(format!("eigenvalue row for rank {rank} has {} entries", values.len())));
    }
    let total: f64 = values.iter().sum();
    Ok(values.iter().map(|v| v / total).collect())
}

/// `U Λ_{R_s} U†` from the tabulated family.
pub fn appendix_state(rank: usize) -> Result<DensityMatrix> {
    let values = appendix_eigenvalues(rank)?;
    DensityMatrix::from_spectrum(&values, &appendix_eigenvectors()?)
}

/// Weight `μ ∈ [0, 1]` for which `(1 − μ)ρ + μ|ψ₁⟩⟨ψ₁|` has purity `target`,
/// with `|ψ₁⟩` the leading eigenvector of `ρ`.
pub fn purity_weight(rho: &DensityMatrix, target: f64) -> Result<f64> {
    let lambda1 = rho.eigenvalues()[0];
    let p = rho.purity();
    if !(target <= 1.0 + 1e-12) || target < p - 1e-12 {
        return Err(TomoError::NoRoot { target });
    }
    // Tr ρ_μ² = a μ² + b μ + c, increasing on [0, 1]
    let a = p - 2.0 * lambda1 + 1.0;
    let b = 2.0 * (lambda1 - p);
    let c = p - target;
    let disc = (b * b - 4.0 * a * c).max(0.0);
    let denom = b + disc.sqrt();
    if denom <= 0.0 {
        return Ok(0.0);
    }
    let mu = -2.0 * c / denom;
    if !(-1e-12..=1.0 + 1e-12).contains(&mu) {
        return Err(TomoError::NoRoot { target });
    }
    Ok(mu.clamp(0.0, 1.0))
}

/// Raises the purity of `rho` to `target` by mixing in its leading
/// eigenprojector.
pub fn adjust_purity(rho: &DensityMatrix, target: f64) -> Result<DensityMatrix> {
    let mu = purity_weight(rho, target)?;
    let spectrum = rho.spectrum();
    let mut values = spectrum.values.clone();
    for v in values.iter_mut() {
        *v *= 1.0 - mu;
    }
    values[0] += mu;
    DensityMatrix::from_spectrum(&values, &spectrum.vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{linalg::max_abs_diff, linalg::unitarity_residual, state_metrics};

    fn split(d: usize) -> BipartiteStructure {
        BipartiteStructure::symmetric(d).unwrap()
    }

    #[test]
    fn kind_round_trip() {
        for s in ["haar-pure", "bures-mixed:4", "appendix-rank:3", "gaussian-nominal", "bell-nominal"] {
            assert_eq!(s.parse::<TrueStateKind>().unwrap().to_string(), s);
        }
        assert_eq!("bures-mixed".parse::<TrueStateKind>().unwrap(), TrueStateKind::BuresMixed(0));
        assert!("appendix-rank".parse::<TrueStateKind>().is_err());
        assert!("wigner".parse::<TrueStateKind>().is_err());
    }

    #[test]
    fn spec_validation() {
        let s = TrueStateSpec::new(TrueStateKind::BuresMixed(0), split(3), 1).unwrap();
        assert_eq!(s.kind, TrueStateKind::BuresMixed(9));
        assert!(TrueStateSpec::new(TrueStateKind::AppendixRank(3), split(2), 1).is_err());
        assert!(TrueStateSpec::new(TrueStateKind::AppendixRank(1), split(3), 1).is_err());
        assert!(TrueStateSpec::new(TrueStateKind::BuresMixed(10), split(3), 1).is_err());
    }

    #[test]
    fn printed_matrix_is_nearly_unitary() {
        let printed = appendix_printed_eigenvectors().unwrap();
        let u = appendix_eigenvectors().unwrap();
        assert!(unitarity_residual(&u) < 1e-12);
        assert!(max_abs_diff(&u, &printed) < 5e-4);
        assert!(unitarity_residual(&printed) < 1e-3);
    }

    #[test]
    fn appendix_family_purity_and_rank() {
        for r in 2..=9 {
            let rho = appendix_state(r).unwrap();
            assert!((rho.purity() - 0.90).abs() < 1e-3, "rank {r}: {}", rho.purity());
            assert_eq!(rho.rank(), r);
        }
        let ev = appendix_state(2).unwrap().eigenvalues();
        assert!((ev[0] - 0.94721).abs() < 1e-4);
        assert!((ev[1] - 0.052786).abs() < 1e-4);
        assert!(ev[2..].iter().all(|v| v.abs() < 1e-12));
    }

    /// Undoes the purity boost of the full-rank row to recover a fiducial
    /// spectrum of purity 0.74, then regenerates every row by truncation,
    /// renormalization and boosting back to 0.90.
    #[test]
    fn family_follows_from_one_fiducial() {
        let top = appendix_eigenvalues(9).unwrap();
        let fiducial_for = |mu: f64| -> Vec<f64> {
            let mut v: Vec<f64> = top.iter().map(|x| x / (1.0 - mu)).collect();
            v[0] = (top[0] - mu) / (1.0 - mu);
            v
        };
        let purity = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        let (mut lo, mut hi) = (0.0, top[0] - 1e-9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if purity(&fiducial_for(mid)) > 0.74 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let fiducial = fiducial_for(0.5 * (lo + hi));
        let u = appendix_eigenvectors().unwrap();
        for r in 2..=9 {
            let mut v = fiducial.clone();
            for x in v.iter_mut().skip(r) {
                *x = 0.0;
            }
            let rho = DensityMatrix::from_spectrum(&v, &u).unwrap();
            let adjusted = adjust_purity(&rho, 0.90).unwrap();
            assert!((adjusted.purity() - 0.90).abs() < 1e-10);
            let got = adjusted.eigenvalues();
            let want = appendix_eigenvalues(r).unwrap();
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-4, "rank {r}: {got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn adjust_purity_edge_cases() {
        let mut rng = RngStream::new(3, 0);
        let rho = bures_random_state(4, 4, &mut rng).unwrap();
        let same = adjust_purity(&rho, rho.purity()).unwrap();
        assert!(max_abs_diff(same.matrix(), rho.matrix()) < 1e-12);
        assert_eq!(purity_weight(&rho, rho.purity()).unwrap(), 0.0);

        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((purity_weight(&mixed, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let pure = adjust_purity(&mixed, 1.0).unwrap();
        assert!((pure.purity() - 1.0).abs() < 1e-12);

        for target in [0.5, 0.8, 0.99] {
            let rho = bures_random_state(5, 5, &mut rng).unwrap();
            if target < rho.purity() {
                assert!(adjust_purity(&rho, target).is_err());
                continue;
            }
            let out = adjust_purity(&rho, target).unwrap();
            assert!((out.purity() - target).abs() < 1e-10);
        }
        assert!(adjust_purity(&mixed, 1.5).is_err());
    }

    #[test]
    fn nominal_states() {
        let sp = split(3);
        let mut rng = RngStream::new(0, 0);
        let g =
            true_state(&TrueStateSpec::new(TrueStateKind::GaussianNominal, sp.clone(), 0).unwrap(), &mut rng).unwrap();
        let m = state_metrics(&g, &sp).unwrap();
        assert!((m.purity - 1.0).abs() < 1e-12);
        assert!(m.negativity < 1e-12);
        assert!((g.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);

        let b = true_state(&TrueStateSpec::new(TrueStateKind::BellNominal, sp.clone(), 0).unwrap(), &mut rng).unwrap();
        assert!((b.matrix()[(1, 3)].re - 0.5).abs() < 1e-12);
        assert!((state_metrics(&b, &sp).unwrap().negativity - 0.5).abs() < 1e-10);
    }

    #[test]
    fn random_kinds_depend_on_stream_only() {
        let spec = TrueStateSpec::new(TrueStateKind::BuresMixed(3), split(2), 5).unwrap();
        let a = true_state(&spec, &mut RngStream::new(5, 1)).unwrap();
        let b = true_state(&spec, &mut RngStream::new(5, 1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rank(), 3);
    }
}
