//! Decay-law fits and the four-way classifier.
//!
//! Power laws are straight lines in `(ln d, ln MI)`, exponentials are straight
//! lines in `(d, ln MI)`. Points with zero MI are left out of every log-space
//! fit and the number left out is reported on the fit.
//!
//! The break search of [`fit_broken_power_law`] weights each point by the
//! width of its cell in `ln d`, so a curve sampled densely at short lags and
//! log-spaced at long lags is fitted as it appears on a log-log plot rather
//! than being dominated by its densest stretch.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{plug_in_bias_floor, CurveMeta, CurvePoint, DecayCurve};
use crate::math::{exp, fit_line, ln, Line};

/// Tunable thresholds of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// A periodic peak must reach `(1 + prominence)` times the power-law baseline.
    pub prominence: f64,
    /// Allowed deviation of a peak spacing from the modal spacing.
    pub spacing_tolerance: usize,
    /// Shortest dense lag prefix periodicity detection will look at.
    pub min_dense_prefix: usize,
    /// Exponential wins when its r2 beats the power law's by this much.
    pub exponential_r2_margin: f64,
    /// Minimum relative SSE reduction for a broken power law.
    pub broken_improvement: f64,
    /// MI below this (nats) is treated as noise.
    pub noise_threshold: f64,
    /// Restricts the single power-law fit; `None` uses every usable lag.
    pub power_law_range: Option<(usize, usize)>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            prominence: 0.2,
            spacing_tolerance: 1,
            min_dense_prefix: 8,
            exponential_r2_margin: 0.05,
            broken_improvement: 0.15,
            noise_threshold: 1e-5,
            power_law_range: None,
        }
    }
}

/// `ln MI = log_intercept + slope * ln d` over `d_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    /// ln MI at d = 1.
    pub log_intercept: f64,
    pub r2: f64,
    pub d_range: (usize, usize),
    pub points_used: usize,
    pub zero_points_excluded: usize,
}

impl PowerLawFit {
    pub fn ln_mi_at(&self, d: f64) -> f64 {
        self.log_intercept + self.slope * ln(d)
    }

    pub fn mi_at(&self, d: f64) -> f64 {
        exp(self.ln_mi_at(d))
    }

    /// Lag at which the fitted line reaches `ln_mi`.
    pub fn lag_for_ln_mi(&self, ln_mi: f64) -> f64 {
        exp((ln_mi - self.log_intercept) / self.slope)
    }

    /// Unweighted residual sum of squares in log-log space over usable points.
    pub fn sse(&self, points: &[CurvePoint]) -> f64 {
        points
            .iter()
            .filter(|p| p.mi > 0.0)
            .map(|p| {
                let r = ln(p.mi) - self.ln_mi_at(p.lag as f64);
                r * r
            })
            .sum()
    }
}

/// `ln MI = log_intercept - rate * d` over `d_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub rate: f64,
    /// ln MI at d = 0.
    pub log_intercept: f64,
    pub r2: f64,
    pub d_range: (usize, usize),
    pub points_used: usize,
    pub zero_points_excluded: usize,
}

impl ExponentialFit {
    pub fn mi_at(&self, d: f64) -> f64 {
        exp(self.log_intercept - self.rate * d)
    }
}

/// Two power laws meeting at `break_d`. Both segments include the break lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrokenPowerLawFit {
    pub break_d: usize,
    pub left: PowerLawFit,
    pub right: PowerLawFit,
    /// `1 - SSE_broken / SSE_single`, both weighted the same way.
    pub improvement: f64,
}

impl BrokenPowerLawFit {
    /// Fitted ln MI of the piecewise model.
    pub fn ln_mi_at(&self, d: f64) -> f64 {
        if d <= self.break_d as f64 {
            self.left.ln_mi_at(d)
        } else {
            self.right.ln_mi_at(d)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicitySignature {
    pub period: usize,
    pub peak_lags: Vec<usize>,
    pub prominence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayClass {
    PowerLaw,
    BrokenPowerLaw,
    PowerLawPeriodic,
    Exponential,
}

impl DecayClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DecayClass::PowerLaw => "PowerLaw",
            DecayClass::BrokenPowerLaw => "BrokenPowerLaw",
            DecayClass::PowerLawPeriodic => "PowerLawPeriodic",
            DecayClass::Exponential => "Exponential",
        }
    }
}

impl core::fmt::Display for DecayClass {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A classified decay curve.
///
/// Only the fits belonging to `decay_class` are present: `power` for
/// `PowerLaw`, `broken` for `BrokenPowerLaw`, `power` and `periodicity` for
/// `PowerLawPeriodic`, `expo` for `Exponential`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedFit {
    pub decay_class: DecayClass,
    pub power: Option<PowerLawFit>,
    pub broken: Option<BrokenPowerLawFit>,
    pub expo: Option<ExponentialFit>,
    pub periodicity: Option<PeriodicitySignature>,
    pub noise_threshold: f64,
    pub noise_crossing_d: Option<usize>,
    /// Set when the plug-in bias floor at the relevant lag is above
    /// `noise_threshold`, so a crossing (or its absence) is not trustworthy.
    pub noise_crossing_low_confidence: bool,
    /// First lag of the decaying range used for the single-law fits.
    pub decay_onset_d: usize,
    pub max_sampled_lag: usize,
    pub curve_meta: CurveMeta,
}

impl ClassifiedFit {
    pub fn break_d(&self) -> Option<usize> {
        self.broken.as_ref().map(|b| b.break_d)
    }

    pub fn period(&self) -> Option<usize> {
        self.periodicity.as_ref().map(|p| p.period)
    }
}

struct LogPoints {
    lags: Vec<usize>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    zeros: usize,
}

fn log_points(points: &[CurvePoint], lo: usize, hi: usize, x_is_log: bool) -> LogPoints {
    let mut out = LogPoints {
        lags: Vec::new(),
        xs: Vec::new(),
        ys: Vec::new(),
        zeros: 0,
    };
    for p in points.iter().filter(|p| p.lag >= lo && p.lag <= hi) {
        if p.mi > 0.0 {
            out.lags.push(p.lag);
            out.xs.push(if x_is_log {
                ln(p.lag as f64)
            } else {
                p.lag as f64
            });
            out.ys.push(ln(p.mi));
        } else {
            out.zeros += 1;
        }
    }
    out
}

fn power_from_line(line: &Line, lp: &LogPoints) -> PowerLawFit {
    PowerLawFit {
        slope: line.slope,
        log_intercept: line.intercept,
        r2: line.r2,
        d_range: (lp.lags[0], *lp.lags.last().unwrap()),
        points_used: lp.lags.len(),
        zero_points_excluded: lp.zeros,
    }
}

/// Ordinary least squares of ln MI on ln d over lags in `range` (inclusive).
pub fn fit_power_law(curve: &DecayCurve, range: (usize, usize)) -> Result<PowerLawFit> {
    let lp = log_points(curve.points(), range.0, range.1, true);
    if lp.xs.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            found: lp.xs.len(),
        });
    }
    let line = fit_line(&lp.xs, &lp.ys, None).ok_or(Error::TooFewPoints {
        needed: 3,
        found: lp.xs.len(),
    })?;
    Ok(power_from_line(&line, &lp))
}

/// Least squares of ln MI on d over lags in `range` (inclusive). A fitted
/// rate that is not positive is reported as [`Error::NonDecaying`].
pub fn fit_exponential(curve: &DecayCurve, range: (usize, usize)) -> Result<ExponentialFit> {
    let lp = log_points(curve.points(), range.0, range.1, false);
    if lp.xs.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            found: lp.xs.len(),
        });
    }
    let line = fit_line(&lp.xs, &lp.ys, None).ok_or(Error::TooFewPoints {
        needed: 3,
        found: lp.xs.len(),
    })?;
    let rate = -line.slope;
    if rate.is_nan() || rate <= 0.0 {
        return Err(Error::NonDecaying { value: rate });
    }
    Ok(ExponentialFit {
        rate,
        log_intercept: line.intercept,
        r2: line.r2,
        d_range: (lp.lags[0], *lp.lags.last().unwrap()),
        points_used: lp.lags.len(),
        zero_points_excluded: lp.zeros,
    })
}

/// Width of each point's cell in `xs`, cells split at midpoints.
pub fn log_spacing_weights(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    match n {
        0 => Vec::new(),
        1 => alloc::vec![1.0],
        _ => (0..n)
            .map(|i| {
                let lo = if i == 0 {
                    xs[1] - xs[0]
                } else {
                    xs[i] - xs[i - 1]
                };
                let hi = if i == n - 1 {
                    xs[n - 1] - xs[n - 2]
                } else {
                    xs[i + 1] - xs[i]
                };
                (lo + hi) / 2.0
            })
            .collect(),
    }
}

/// Single-break power law over every usable lag of `curve`.
pub fn fit_broken_power_law(curve: &DecayCurve) -> Result<BrokenPowerLawFit> {
    fit_broken_in_range(curve, (1, usize::MAX))
}

pub(crate) fn fit_broken_in_range(
    curve: &DecayCurve,
    range: (usize, usize),
) -> Result<BrokenPowerLawFit> {
    let lp = log_points(curve.points(), range.0, range.1, true);
    let n = lp.xs.len();
    if n < 7 {
        return Err(Error::TooFewPoints {
            needed: 7,
            found: n,
        });
    }
    // The break is located with each point weighted by its share of the
    // ln d axis, so a dense run of small lags does not outvote the tail.
    let w = log_spacing_weights(&lp.xs);
    let mut best: Option<(f64, usize)> = None;
    for b in 2..=n - 3 {
        // both sides share point b
        let left = fit_line(&lp.xs[..=b], &lp.ys[..=b], Some(&w[..=b]));
        let right = fit_line(&lp.xs[b..], &lp.ys[b..], Some(&w[b..]));
        let (Some(left), Some(right)) = (left, right) else {
            continue;
        };
        let sse = left.sse + right.sse;
        if best.is_none_or(|(s, _)| sse < s - 1e-12) {
            best = Some((sse, b));
        }
    }
    let (_, b) = best.ok_or(Error::NoBreakCandidate)?;

    // segments and improvement are plain least squares
    let single = fit_line(&lp.xs, &lp.ys, None).ok_or(Error::NoBreakCandidate)?;
    let left = fit_line(&lp.xs[..=b], &lp.ys[..=b], None).ok_or(Error::NoBreakCandidate)?;
    let right = fit_line(&lp.xs[b..], &lp.ys[b..], None).ok_or(Error::NoBreakCandidate)?;
    // an exact single line leaves nothing to improve on
    let improvement = if single.r2 < 1.0 - 1e-12 {
        (1.0 - (left.sse + right.sse) / single.sse).max(0.0)
    } else {
        0.0
    };
    let seg = |line: &Line, lo: usize, hi: usize| PowerLawFit {
        slope: line.slope,
        log_intercept: line.intercept,
        r2: line.r2,
        d_range: (lp.lags[lo], lp.lags[hi]),
        points_used: hi - lo + 1,
        zero_points_excluded: 0,
    };
    let mut left_fit = seg(&left, 0, b);
    left_fit.zero_points_excluded = lp.zeros;
    Ok(BrokenPowerLawFit {
        break_d: lp.lags[b],
        left: left_fit,
        right: seg(&right, b, n - 1),
        improvement,
    })
}

/// Length `L` of the prefix with lags exactly `1, 2, ..., L`.
fn dense_prefix_len(points: &[CurvePoint]) -> usize {
    points
        .iter()
        .enumerate()
        .take_while(|(i, p)| p.lag == i + 1)
        .count()
}

/// Regularly spaced MI peaks on the dense lag prefix.
pub fn detect_periodicity(curve: &DecayCurve) -> Option<PeriodicitySignature> {
    detect_periodicity_with(curve, &FitConfig::default())
}

pub fn detect_periodicity_with(
    curve: &DecayCurve,
    config: &FitConfig,
) -> Option<PeriodicitySignature> {
    let len = dense_prefix_len(curve.points());
    if len < config.min_dense_prefix.max(3) {
        return None;
    }
    let prefix = &curve.points()[..len];
    let baseline = fit_power_law(curve, (1, len)).ok()?;
    let mut peaks = Vec::new();
    let gain = 1.0 + config.prominence;
    for i in 2..len - 2 {
        let mi = prefix[i].mi;
        let mut around = [
            prefix[i - 2].mi,
            prefix[i - 1].mi,
            prefix[i + 1].mi,
            prefix[i + 2].mi,
        ];
        around.sort_unstable_by(f64::total_cmp);
        let local = (around[1] + around[2]) / 2.0;
        if mi > prefix[i - 1].mi
            && mi > prefix[i + 1].mi
            && mi >= gain * baseline.mi_at(prefix[i].lag as f64)
            && mi >= gain * local
        {
            peaks.push(prefix[i].lag);
        }
    }
    if peaks.len() < 2 {
        return None;
    }
    let gaps: Vec<usize> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    let period = modal_value(&gaps);
    let tol = config.spacing_tolerance;
    if period < 2 || gaps.iter().any(|&g| g.abs_diff(period) > tol) {
        return None;
    }
    // peaks of a periodic process sit at multiples of the period
    let off_grid = |lag: usize| {
        let r = lag % period;
        r.min(period - r) > tol
    };
    if peaks.iter().any(|&l| off_grid(l)) {
        return None;
    }
    Some(PeriodicitySignature {
        period,
        peak_lags: peaks,
        prominence: config.prominence,
    })
}

// most frequent value; ties go to the smaller value
fn modal_value(values: &[usize]) -> usize {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mut best = (0, 0);
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        if j > best.1 {
            best = (sorted[i], j);
        }
        i += j;
    }
    best.0
}

/// Smallest sampled lag from which MI stays below `threshold`.
pub fn noise_crossing(curve: &DecayCurve, threshold: f64) -> Option<usize> {
    let points = curve.points();
    let tail = points.iter().rev().take_while(|p| p.mi < threshold).count();
    (tail > 0).then(|| points[points.len() - tail].lag)
}

/// Lag of the first maximum of the 5-point moving median of MI. The curve
/// is treated as decaying from there on.
pub fn decay_onset(curve: &DecayCurve) -> usize {
    let points = curve.points();
    let n = points.len();
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..n {
        let lo = i.saturating_sub(2);
        let hi = (i + 2).min(n - 1);
        let mut window: Vec<f64> = points[lo..=hi].iter().map(|p| p.mi).collect();
        window.sort_unstable_by(f64::total_cmp);
        let median = if window.len() % 2 == 1 {
            window[window.len() / 2]
        } else {
            (window[window.len() / 2 - 1] + window[window.len() / 2]) / 2.0
        };
        if median > best.1 {
            best = (i, median);
        }
    }
    points.get(best.0).map_or(1, |p| p.lag)
}

fn usable(points: &[CurvePoint], lo: usize, hi: usize) -> usize {
    points
        .iter()
        .filter(|p| p.lag >= lo && p.lag <= hi && p.mi > 0.0)
        .count()
}

/// Classifies with default thresholds.
pub fn classify(curve: &DecayCurve) -> Result<ClassifiedFit> {
    classify_with(curve, &FitConfig::default())
}

/// Decision procedure: periodic peaks first, then exponential versus power
/// law on the decaying range, then broken versus single power law.
pub fn classify_with(curve: &DecayCurve, config: &FitConfig) -> Result<ClassifiedFit> {
    let points = curve.points();
    let total_usable = usable(points, 1, usize::MAX);
    if total_usable < 7 {
        return Err(Error::TooFewPoints {
            needed: 7,
            found: total_usable,
        });
    }
    let max_lag = curve.max_lag();
    let noise_crossing_d = noise_crossing(curve, config.noise_threshold);
    let mut out = ClassifiedFit {
        decay_class: DecayClass::PowerLaw,
        power: None,
        broken: None,
        expo: None,
        periodicity: None,
        noise_threshold: config.noise_threshold,
        noise_crossing_d,
        noise_crossing_low_confidence: low_confidence(curve, noise_crossing_d, config),
        decay_onset_d: 1,
        max_sampled_lag: max_lag,
        curve_meta: curve.meta().clone(),
    };
    let power_range = config.power_law_range.unwrap_or((1, max_lag));

    if let Some(sig) = detect_periodicity_with(curve, config) {
        out.decay_class = DecayClass::PowerLawPeriodic;
        out.power = Some(fit_power_law(curve, power_range)?);
        out.periodicity = Some(sig);
        out.decay_onset_d = points[0].lag;
        return Ok(out);
    }

    let onset = decay_onset(curve);
    let range = if usable(points, onset, max_lag) >= 7 {
        (onset, max_lag)
    } else {
        (points[0].lag, max_lag)
    };
    out.decay_onset_d = range.0;
    let power_range = config.power_law_range.unwrap_or(range);
    let power = fit_power_law(curve, power_range)?;
    if let Ok(expo) = fit_exponential(curve, range) {
        if expo.r2 >= power.r2 + config.exponential_r2_margin {
            out.decay_class = DecayClass::Exponential;
            out.expo = Some(expo);
            return Ok(out);
        }
    }
    if let Ok(broken) = fit_broken_in_range(curve, range) {
        if broken.improvement >= config.broken_improvement
            && broken.left.slope < 0.0
            && broken.right.slope < 0.0
        {
            out.decay_class = DecayClass::BrokenPowerLaw;
            out.broken = Some(broken);
            return Ok(out);
        }
    }
    out.power = Some(power);
    Ok(out)
}

fn low_confidence(curve: &DecayCurve, crossing: Option<usize>, config: &FitConfig) -> bool {
    let Some(k) = curve.meta().alphabet_size else {
        return false;
    };
    let lag = crossing.unwrap_or(curve.max_lag());
    curve
        .points()
        .iter()
        .find(|p| p.lag == lag)
        .is_some_and(|p| plug_in_bias_floor(k, p.pair_count) > config.noise_threshold)
}
