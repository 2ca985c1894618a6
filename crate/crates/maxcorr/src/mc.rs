//! Reproducible parallel Monte Carlo experiments.
//!
//! A configuration names a law, matrix shape, replication count, master
//! seed, and a statistic mode. Replication `r` always draws from substream
//! `(seed, r)` and results are collected in replication order, so a report
//! is a pure function of its configuration no matter how many worker
//! threads run — the basis for the byte-identical-output guarantee.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corr::{
    largest_offdiag, standardize_columns, test_statistic, CorrError, DataMatrix, DEFAULT_BLOCK,
};
use crate::dist::{DistributionSpec, RandomStream};
use crate::lemmas::{
    disjoint_pair_max, levy_terms, max_vs_single_product, mean_product_stat,
    pair_self_normalized, symmetrized_ratio, LemmaError, PairSample,
};
use crate::limit;
use crate::numeric::sum;

#[derive(Debug, Error, PartialEq)]
pub enum McError {
    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),
    #[error("replication {rep}: column {col} is degenerate (zero variance)")]
    DegenerateColumn { rep: usize, col: usize },
    #[error("replication {rep} failed: {detail}")]
    ReplicationFailed { rep: usize, detail: String },
    #[error("empty input")]
    EmptyInput,
}

/// Which lemma statistic a `lemma` run estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaStat {
    /// Self-normalized cross sum; auxiliary value: none.
    SelfNormalized,
    /// Mean-product statistic; auxiliary value: none.
    MeanProduct,
    /// Symmetrization ratio; auxiliary value: none.
    SymmetrizedRatio,
    /// Max normalized product; auxiliary value: first-entry version.
    MaxVsSingle,
    /// Symmetrized max term; auxiliary value: absolute sum of terms.
    Levy,
    /// Disjoint-pair coherence; auxiliary value: full coherence.
    DisjointMax,
}

impl std::str::FromStr for LemmaStat {
    type Err = McError;

    fn from_str(s: &str) -> Result<Self, McError> {
        Ok(match s {
            "self-normalized" => Self::SelfNormalized,
            "mean-product" => Self::MeanProduct,
            "symmetrized-ratio" => Self::SymmetrizedRatio,
            "max-vs-single" => Self::MaxVsSingle,
            "levy" => Self::Levy,
            "disjoint-max" => Self::DisjointMax,
            other => {
                return Err(McError::InvalidConfig(format!("unknown lemma statistic '{other}'")))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum McMode {
    /// Centered coherence statistic `T = n L^2 - a(p)` per replication.
    TestStat,
    /// Law-of-the-logarithm statistic `sqrt(n / log n) L` per replication.
    WeakLaw,
    /// A named pair statistic with a tail-curve threshold grid.
    Lemma { stat: LemmaStat, thresholds: Vec<f64> },
}

/// Full description of one experiment.
///
/// `threads` controls the worker pool (0 = library default) and is excluded
/// from serialization: it cannot influence results, and reports must be
/// byte-identical across thread counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McConfig {
    pub dist: DistributionSpec,
    pub n: usize,
    pub p: usize,
    pub reps: usize,
    pub seed: u64,
    pub mode: McMode,
    #[serde(skip)]
    pub threads: usize,
}

impl McConfig {
    fn validate(&self) -> Result<(), McError> {
        if self.n < 3 {
            return Err(McError::InvalidConfig(format!("n must be >= 3, got {}", self.n)));
        }
        if self.p < 2 {
            return Err(McError::InvalidConfig(format!("p must be >= 2, got {}", self.p)));
        }
        if self.reps < 1 {
            return Err(McError::InvalidConfig("reps must be >= 1".into()));
        }
        if let McMode::Lemma { thresholds, .. } = &self.mode {
            if !thresholds.windows(2).all(|w| w[0] < w[1]) {
                return Err(McError::InvalidConfig(
                    "lemma thresholds must be strictly ascending".into(),
                ));
            }
        }
        Ok(())
    }

    /// The shape ratio the limit theory assumes bounded: `n / p`.
    pub fn shape_ratio(&self) -> f64 {
        self.n as f64 / self.p as f64
    }

    /// True when `n/p` leaves `[1/10, 10]`, outside which the asymptotic
    /// regime is a stretch.
    pub fn shape_warning(&self) -> bool {
        !(0.1..=10.0).contains(&self.shape_ratio())
    }
}

/// One point of a lemma tail curve: `n * P(stat > threshold)` with its
/// binomial standard error (also scaled by `n`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCurvePoint {
    pub threshold: f64,
    pub value: f64,
    pub std_error: f64,
}

/// Order-statistics summary of the replication values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub max: f64,
}

/// Everything a run produces. Serialized form is deterministic: timing
/// fields are volatile and therefore skipped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McReport {
    pub config: McConfig,
    pub shape_ratio: f64,
    pub shape_warning: bool,
    /// Primary statistic, one entry per replication, in replication order.
    pub values: Vec<f64>,
    /// Mode-dependent secondary statistic (see [`LemmaStat`]), same order.
    pub aux_values: Option<Vec<f64>>,
    /// Primary values sorted ascending (the empirical distribution).
    pub sorted_values: Vec<f64>,
    pub summary: Summary,
    /// Kolmogorov-Smirnov distance to the limit law; test-stat mode only.
    pub ks_to_limit: Option<f64>,
    /// Lemma modes only: the configured threshold grid evaluated.
    pub tail_curves: Option<Vec<TailCurvePoint>>,
    #[serde(skip)]
    pub wall_seconds: f64,
    #[serde(skip)]
    pub reps_per_second: f64,
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Runs every replication of `cfg` and assembles the report.
pub fn run_replications(cfg: &McConfig) -> Result<McReport, McError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| McError::InvalidConfig(format!("thread pool: {e}")))?;

    let started = Instant::now();
    let outcomes: Vec<Result<(f64, Option<f64>), McError>> =
        pool.install(|| (0..cfg.reps).into_par_iter().map(|r| replicate(cfg, r)).collect());
    let wall = started.elapsed().as_secs_f64();

    // Index order is already deterministic; surface the earliest failure.
    let mut values = Vec::with_capacity(cfg.reps);
    let mut aux = Vec::with_capacity(cfg.reps);
    for outcome in outcomes {
        let (v, a) = outcome?;
        values.push(v);
        if let Some(a) = a {
            aux.push(a);
        }
    }
    let aux_values = if aux.is_empty() { None } else { Some(aux) };

    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let summary = summarize(&sorted, &values);

    let ks_to_limit = match cfg.mode {
        McMode::TestStat => Some(ks_statistic(&values, limit::cdf)?),
        _ => None,
    };
    let tail_curves = match &cfg.mode {
        McMode::Lemma { thresholds, .. } if !thresholds.is_empty() => {
            Some(tail_curve(&values, cfg.n, thresholds)?)
        }
        _ => None,
    };

    Ok(McReport {
        config: cfg.clone(),
        shape_ratio: cfg.shape_ratio(),
        shape_warning: cfg.shape_warning(),
        values,
        aux_values,
        sorted_values: sorted,
        summary,
        ks_to_limit,
        tail_curves,
        wall_seconds: wall,
        reps_per_second: cfg.reps as f64 / wall.max(1e-12),
    })
}

/// One replication on its own substream.
fn replicate(cfg: &McConfig, rep: usize) -> Result<(f64, Option<f64>), McError> {
    let mut stream = RandomStream::substream(cfg.seed, rep as u64);
    let corr_err = |e: CorrError| match e {
        CorrError::DegenerateColumn(col) => McError::DegenerateColumn { rep, col },
        other => McError::ReplicationFailed { rep, detail: other.to_string() },
    };
    let lemma_err = |e: LemmaError| match e {
        LemmaError::Corr(CorrError::DegenerateColumn(col)) => {
            McError::DegenerateColumn { rep, col }
        }
        other => McError::ReplicationFailed { rep, detail: other.to_string() },
    };

    match &cfg.mode {
        McMode::TestStat | McMode::WeakLaw => {
            let draws: Vec<f64> = cfg.dist.sample(&mut stream, cfg.n * cfg.p);
            let m = DataMatrix::new(cfg.n, cfg.p, draws).map_err(corr_err)?;
            let z = standardize_columns(&m).map_err(corr_err)?;
            let (l, _) = largest_offdiag(&z, DEFAULT_BLOCK).map_err(corr_err)?;
            let ts = test_statistic(cfg.n, l, cfg.p).map_err(corr_err)?;
            match cfg.mode {
                McMode::TestStat => Ok((ts.t, None)),
                _ => Ok((ts.weak_law, None)),
            }
        }
        McMode::Lemma { stat, .. } => match stat {
            LemmaStat::SelfNormalized => {
                let s = draw_pair(cfg, &mut stream, false).map_err(lemma_err)?;
                Ok((pair_self_normalized(&s).map_err(lemma_err)?, None))
            }
            LemmaStat::MeanProduct => {
                let s = draw_pair(cfg, &mut stream, false).map_err(lemma_err)?;
                Ok((mean_product_stat(&s).map_err(lemma_err)?, None))
            }
            LemmaStat::SymmetrizedRatio => {
                let s = draw_pair(cfg, &mut stream, true).map_err(lemma_err)?;
                Ok((symmetrized_ratio(&s).map_err(lemma_err)?, None))
            }
            LemmaStat::MaxVsSingle => {
                let s = draw_pair(cfg, &mut stream, false).map_err(lemma_err)?;
                let (max_stat, single) = max_vs_single_product(&s).map_err(lemma_err)?;
                Ok((max_stat, Some(single)))
            }
            LemmaStat::Levy => {
                let s = draw_pair(cfg, &mut stream, true).map_err(lemma_err)?;
                let (max_v, sum_v) = levy_terms(&s).map_err(lemma_err)?;
                Ok((max_v, Some(sum_v)))
            }
            LemmaStat::DisjointMax => {
                let draws: Vec<f64> = cfg.dist.sample(&mut stream, cfg.n * cfg.p);
                let m = DataMatrix::new(cfg.n, cfg.p, draws).map_err(corr_err)?;
                let d = disjoint_pair_max(&m).map_err(lemma_err)?;
                let z = standardize_columns(&m).map_err(corr_err)?;
                let (l, _) = largest_offdiag(&z, DEFAULT_BLOCK).map_err(corr_err)?;
                Ok((d, Some(l)))
            }
        },
    }
}

/// Pair-statistic input: two fresh columns, plus independent copies when
/// the statistic symmetrizes. Copies are drawn from the same substream,
/// never recycled from other columns.
fn draw_pair(
    cfg: &McConfig,
    stream: &mut RandomStream,
    with_copies: bool,
) -> Result<PairSample<f64>, LemmaError> {
    let x1 = cfg.dist.sample(stream, cfg.n);
    let x2 = cfg.dist.sample(stream, cfg.n);
    if with_copies {
        let x1p = cfg.dist.sample(stream, cfg.n);
        let x2p = cfg.dist.sample(stream, cfg.n);
        PairSample::with_copies(x1, x2, x1p, x2p)
    } else {
        PairSample::new(x1, x2)
    }
}

fn summarize(sorted: &[f64], values: &[f64]) -> Summary {
    Summary {
        mean: sum(values) / values.len() as f64,
        min: sorted[0],
        q05: quantile_sorted(sorted, 0.05),
        q25: quantile_sorted(sorted, 0.25),
        median: quantile_sorted(sorted, 0.5),
        q75: quantile_sorted(sorted, 0.75),
        q95: quantile_sorted(sorted, 0.95),
        max: sorted[sorted.len() - 1],
    }
}

/// Linear-interpolation quantile on presorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let m = sorted.len();
    if m == 1 {
        return sorted[0];
    }
    let h = q * (m - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= m {
        return sorted[m - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

// ---------------------------------------------------------------------------
// Empirical-distribution utilities
// ---------------------------------------------------------------------------

/// Fraction of values `<= t` (right-continuous empirical CDF).
pub fn ecdf(values: &[f64], t: f64) -> Result<f64, McError> {
    if values.is_empty() {
        return Err(McError::EmptyInput);
    }
    let count = values.iter().filter(|v| **v <= t).count();
    Ok(count as f64 / values.len() as f64)
}

/// Exact Kolmogorov-Smirnov distance between the sample and a reference
/// CDF: `max_i max(i/m - F(v_(i)), F(v_(i)) - (i-1)/m)`.
///
/// The order-statistics form is exact for a continuous monotone `F`. For a
/// step reference — e.g. an empirical CDF compared against itself — the
/// formula resolves the gap at each jump from the left, so the self
/// distance is `1/m`, not 0.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> Result<f64, McError> {
    if values.is_empty() {
        return Err(McError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, v) in sorted.iter().enumerate() {
        let f = cdf(*v);
        let upper = (i + 1) as f64 / m - f;
        let lower = f - i as f64 / m;
        d = d.max(upper).max(lower);
    }
    Ok(d)
}

/// `n * P(stat > threshold)` for each threshold, with binomial standard
/// errors; thresholds must be ascending.
pub fn tail_curve(
    values: &[f64],
    n: usize,
    thresholds: &[f64],
) -> Result<Vec<TailCurvePoint>, McError> {
    if values.is_empty() {
        return Err(McError::EmptyInput);
    }
    if !thresholds.windows(2).all(|w| w[0] < w[1]) {
        return Err(McError::InvalidConfig("thresholds must be strictly ascending".into()));
    }
    let r = values.len() as f64;
    let nf = n as f64;
    Ok(thresholds
        .iter()
        .map(|&a| {
            let hits = values.iter().filter(|v| **v > a).count() as f64;
            let phat = hits / r;
            TailCurvePoint {
                threshold: a,
                value: nf * phat,
                std_error: nf * (phat * (1.0 - phat) / r).sqrt(),
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
