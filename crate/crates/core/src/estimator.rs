//! Plug-in mutual information between symbols at lag `d`.
//!
//! Pairs `(s[t], s[t + d])` are pooled over every sequence of a corpus and
//! never cross a sequence boundary. MI is reported in nats.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TokenMode};
use crate::error::{Error, Result};
use crate::math::{ceil, ln, powf, round};

/// Alphabets whose dense joint table would exceed this many cells are
/// counted sparsely.
pub const DENSE_JOINT_LIMIT: usize = 1 << 24;

/// Lags up to this value are always sampled individually.
pub const DENSE_LAG_PREFIX: usize = 64;

/// Log-spaced samples per decade above the dense prefix.
pub const LAGS_PER_DECADE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasCorrection {
    #[default]
    None,
    MillerMadow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub bias_correction: BiasCorrection,
    /// Lags with fewer pairs are dropped from the curve.
    pub min_pair_count: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            bias_correction: BiasCorrection::None,
            min_pair_count: 1000,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_pair_count == 0 {
            return Err(Error::InvalidConfig("min_pair_count must be at least 1"));
        }
        Ok(())
    }
}

/// Strictly increasing positive lags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct LagGrid(Vec<usize>);

impl LagGrid {
    pub fn new(lags: Vec<usize>) -> Result<Self> {
        if lags.is_empty() {
            return Err(Error::InvalidLagGrid("grid is empty"));
        }
        if lags[0] == 0 {
            return Err(Error::InvalidLagGrid("lags must be positive"));
        }
        if lags.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidLagGrid("lags must be strictly increasing"));
        }
        Ok(LagGrid(lags))
    }

    pub fn lags(&self) -> &[usize] {
        &self.0
    }

    pub fn max_lag(&self) -> usize {
        *self.0.last().expect("grid is nonempty")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<usize>> for LagGrid {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        LagGrid::new(v)
    }
}

impl From<LagGrid> for Vec<usize> {
    fn from(g: LagGrid) -> Self {
        g.0
    }
}

/// Every lag in `1..=min(64, max_lag)`, then about 32 log-spaced lags per
/// decade up to `max_lag`, which is always included.
pub fn default_lag_grid(max_lag: usize) -> Result<LagGrid> {
    if max_lag == 0 {
        return Err(Error::InvalidLagGrid("max_lag must be at least 1"));
    }
    let mut lags: Vec<usize> = (1..=max_lag.min(DENSE_LAG_PREFIX)).collect();
    if max_lag > DENSE_LAG_PREFIX {
        let per_decade = LAGS_PER_DECADE as f64;
        let first = ceil(per_decade * libm::log10(DENSE_LAG_PREFIX as f64)) as i64;
        let mut k = first;
        loop {
            let v = round(powf(10.0, k as f64 / per_decade)) as usize;
            if v > max_lag {
                break;
            }
            if v > *lags.last().unwrap() {
                lags.push(v);
            }
            k += 1;
        }
        if *lags.last().unwrap() != max_lag {
            lags.push(max_lag);
        }
    }
    LagGrid::new(lags)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Joint {
    Dense(Vec<u64>),
    Sparse(BTreeMap<(u32, u32), u64>),
}

/// Empirical joint counts of symbol pairs at one lag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCounts {
    lag: usize,
    alphabet_size: usize,
    total_pairs: u64,
    joint: Joint,
}

impl PairCounts {
    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn total_pairs(&self) -> u64 {
        self.total_pairs
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.joint, Joint::Sparse(_))
    }

    pub fn get(&self, x: u32, y: u32) -> u64 {
        match &self.joint {
            Joint::Dense(c) => c[x as usize * self.alphabet_size + y as usize],
            Joint::Sparse(m) => m.get(&(x, y)).copied().unwrap_or(0),
        }
    }

    /// Nonzero cells in row-major `(x, y)` order.
    pub fn iter(&self) -> impl Iterator<Item = ((u32, u32), u64)> + '_ {
        let k = self.alphabet_size;
        let (dense, sparse) = match &self.joint {
            Joint::Dense(c) => (Some(c), None),
            Joint::Sparse(m) => (None, Some(m)),
        };
        let dense_iter = dense.into_iter().flat_map(move |c| {
            c.iter()
                .enumerate()
                .filter(|(_, &n)| n > 0)
                .map(move |(i, &n)| (((i / k) as u32, (i % k) as u32), n))
        });
        let sparse_iter = sparse
            .into_iter()
            .flat_map(|m| m.iter().map(|(&xy, &n)| (xy, n)));
        dense_iter.chain(sparse_iter)
    }

    /// Row and column sums of the joint table.
    pub fn marginals(&self) -> (Vec<u64>, Vec<u64>) {
        let mut px = vec![0u64; self.alphabet_size];
        let mut py = vec![0u64; self.alphabet_size];
        for ((x, y), n) in self.iter() {
            px[x as usize] += n;
            py[y as usize] += n;
        }
        (px, py)
    }
}

/// Counts `(s[t], s[t + lag])` over every sequence.
pub fn count_pairs(corpus: &Corpus, lag: usize) -> Result<PairCounts> {
    if lag == 0 {
        return Err(Error::InvalidLagGrid("lags must be positive"));
    }
    let k = corpus.alphabet_size();
    let mut total = 0u64;
    let joint = if k
        .checked_mul(k)
        .is_some_and(|cells| cells <= DENSE_JOINT_LIMIT)
    {
        let mut counts = vec![0u64; k * k];
        for seq in corpus.sequences() {
            if seq.len() <= lag {
                continue;
            }
            total += (seq.len() - lag) as u64;
            for (a, b) in seq.iter().zip(&seq[lag..]) {
                counts[a.index() * k + b.index()] += 1;
            }
        }
        Joint::Dense(counts)
    } else {
        let mut counts = BTreeMap::new();
        for seq in corpus.sequences() {
            if seq.len() <= lag {
                continue;
            }
            total += (seq.len() - lag) as u64;
            for (a, b) in seq.iter().zip(&seq[lag..]) {
                *counts.entry((a.0, b.0)).or_insert(0u64) += 1;
            }
        }
        Joint::Sparse(counts)
    };
    if total == 0 {
        return Err(Error::EmptyLag { lag });
    }
    Ok(PairCounts {
        lag,
        alphabet_size: k,
        total_pairs: total,
        joint,
    })
}

/// Mutual information of the empirical joint distribution, in nats.
pub fn mi_from_counts(counts: &PairCounts, config: &EstimatorConfig) -> Result<f64> {
    if counts.total_pairs == 0 {
        return Err(Error::EmptyLag { lag: counts.lag });
    }
    let n = counts.total_pairs as f64;
    let ln_n = ln(n);
    let (px, py) = counts.marginals();
    let mut sum = 0.0;
    let mut joint_support = 0usize;
    for ((x, y), c) in counts.iter() {
        let c = c as f64;
        sum += c * (ln(c) + ln_n - ln(px[x as usize] as f64) - ln(py[y as usize] as f64));
        joint_support += 1;
    }
    let plug_in = (sum / n).max(0.0);
    Ok(match config.bias_correction {
        BiasCorrection::None => plug_in,
        BiasCorrection::MillerMadow => {
            let kx = px.iter().filter(|&&c| c > 0).count() as f64;
            let ky = py.iter().filter(|&&c| c > 0).count() as f64;
            let kxy = joint_support as f64;
            // each entropy gains (support - 1) / 2N
            (plug_in + (kx + ky - kxy - 1.0) / (2.0 * n)).max(0.0)
        }
    })
}

/// Expected plug-in MI of independent symbols, `(K - 1)^2 / 2N`.
pub fn plug_in_bias_floor(alphabet_size: usize, pairs: u64) -> f64 {
    let k = alphabet_size.saturating_sub(1) as f64;
    k * k / (2.0 * pairs as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lag: usize,
    pub mi: f64,
    pub pair_count: u64,
}

/// A lag left out of the curve because it had too few pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedLag {
    pub lag: usize,
    pub pair_count: u64,
}

/// What produced a curve. Echoed into every downstream output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub estimator: String,
    pub bias_correction: BiasCorrection,
    pub min_pair_count: u64,
    pub alphabet_size: Option<usize>,
    pub num_sequences: Option<usize>,
    pub mode: Option<TokenMode>,
    pub source: String,
}

impl CurveMeta {
    pub fn for_corpus(corpus: &Corpus, config: &EstimatorConfig) -> Self {
        CurveMeta {
            estimator: "plug_in".into(),
            bias_correction: config.bias_correction,
            min_pair_count: config.min_pair_count,
            alphabet_size: Some(corpus.alphabet_size()),
            num_sequences: Some(corpus.num_sequences()),
            mode: Some(corpus.mode()),
            source: corpus.source_meta().into(),
        }
    }

    /// Metadata for a curve whose provenance is unknown.
    pub fn unknown() -> Self {
        CurveMeta {
            estimator: "plug_in".into(),
            bias_correction: BiasCorrection::None,
            min_pair_count: 1,
            alphabet_size: None,
            num_sequences: None,
            mode: None,
            source: String::new(),
        }
    }
}

/// The dependency decay curve: MI against lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    points: Vec<CurvePoint>,
    dropped: Vec<DroppedLag>,
    meta: CurveMeta,
}

impl DecayCurve {
    pub fn new(points: Vec<CurvePoint>, meta: CurveMeta) -> Result<Self> {
        Self::with_dropped(points, Vec::new(), meta)
    }

    pub fn with_dropped(
        points: Vec<CurvePoint>,
        dropped: Vec<DroppedLag>,
        meta: CurveMeta,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCurve);
        }
        if points[0].lag == 0 {
            return Err(Error::InvalidLagGrid("lags must be positive"));
        }
        if points.windows(2).any(|w| w[0].lag >= w[1].lag) {
            return Err(Error::InvalidLagGrid("lags must be strictly increasing"));
        }
        if points
            .iter()
            .any(|p| p.mi.is_nan() || p.mi < 0.0 || !p.mi.is_finite())
        {
            return Err(Error::InvalidConfig(
                "MI values must be finite and non-negative",
            ));
        }
        Ok(DecayCurve {
            points,
            dropped,
            meta,
        })
    }

    /// Curve from bare `(lag, mi)` samples with unit pair counts; handy for
    /// synthetic curves.
    pub fn from_samples(samples: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let points = samples
            .into_iter()
            .map(|(lag, mi)| CurvePoint {
                lag,
                mi,
                pair_count: 1,
            })
            .collect();
        Self::new(points, CurveMeta::unknown())
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn dropped(&self) -> &[DroppedLag] {
        &self.dropped
    }

    pub fn meta(&self) -> &CurveMeta {
        &self.meta
    }

    pub fn max_lag(&self) -> usize {
        self.points.last().map_or(0, |p| p.lag)
    }

    pub fn mi_at(&self, lag: usize) -> Option<f64> {
        self.points
            .binary_search_by_key(&lag, |p| p.lag)
            .ok()
            .map(|i| self.points[i].mi)
    }

    /// Same lags and counts with every MI multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> DecayCurve {
        let mut out = self.clone();
        for p in &mut out.points {
            p.mi *= factor;
        }
        out
    }
}

/// Result of evaluating one lag, before the minimum-count filter is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagEstimate {
    pub lag: usize,
    pub pair_count: u64,
    /// `None` when the lag had fewer pairs than `min_pair_count`.
    pub mi: Option<f64>,
}

pub fn estimate_lag(corpus: &Corpus, lag: usize, config: &EstimatorConfig) -> Result<LagEstimate> {
    let counts = match count_pairs(corpus, lag) {
        Ok(c) => c,
        Err(Error::EmptyLag { .. }) => {
            return Ok(LagEstimate {
                lag,
                pair_count: 0,
                mi: None,
            })
        }
        Err(e) => return Err(e),
    };
    let mi = if counts.total_pairs >= config.min_pair_count {
        Some(mi_from_counts(&counts, config)?)
    } else {
        None
    };
    Ok(LagEstimate {
        lag,
        pair_count: counts.total_pairs,
        mi,
    })
}

/// Builds the curve from per-lag estimates, which must be in grid order.
pub fn assemble_curve(
    estimates: impl IntoIterator<Item = LagEstimate>,
    meta: CurveMeta,
) -> Result<DecayCurve> {
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for e in estimates {
        match e.mi {
            Some(mi) => points.push(CurvePoint {
                lag: e.lag,
                mi,
                pair_count: e.pair_count,
            }),
            None => dropped.push(DroppedLag {
                lag: e.lag,
                pair_count: e.pair_count,
            }),
        }
    }
    DecayCurve::with_dropped(points, dropped, meta)
}

/// Sequential decay curve over `grid`.
pub fn decay_curve(
    corpus: &Corpus,
    grid: &LagGrid,
    config: &EstimatorConfig,
) -> Result<DecayCurve> {
    config.validate()?;
    let estimates = grid
        .lags()
        .iter()
        .map(|&lag| estimate_lag(corpus, lag, config))
        .collect::<Result<Vec<_>>>()?;
    assemble_curve(estimates, CurveMeta::for_corpus(corpus, config))
}
