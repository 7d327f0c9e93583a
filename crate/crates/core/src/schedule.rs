//! Dilation schedules and grid-search specifications.
//!
//! A curve-fitted schedule is read off the fitted decay model: `n` levels
//! equally spaced in ln MI between the model's value at lag 1 and at the
//! maximum dilation are drawn as horizontal lines, and each line's lag
//! intercept becomes one layer's dilation. Steep stretches of the curve are
//! crossed by many levels in a short lag span, which makes the dilations
//! dense there; shallow stretches spread them out.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{BrokenPowerLawFit, ClassifiedFit, DecayClass, PowerLawFit};
use crate::math::{abs, round};

pub const GRID_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleOrigin {
    Standard,
    CurveFitted,
}

/// Per-layer dilations: starts at 1, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DilationSchedule {
    pub dilations: Vec<usize>,
    pub origin: ScheduleOrigin,
    pub rationale: String,
}

impl DilationSchedule {
    pub fn new(
        dilations: Vec<usize>,
        origin: ScheduleOrigin,
        rationale: impl Into<String>,
    ) -> Result<Self> {
        if dilations.first() != Some(&1) {
            return Err(Error::InvalidConfig(
                "a schedule must start with dilation 1",
            ));
        }
        if dilations.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "dilations must be strictly increasing",
            ));
        }
        Ok(DilationSchedule {
            dilations,
            origin,
            rationale: rationale.into(),
        })
    }

    pub fn n_layers(&self) -> usize {
        self.dilations.len()
    }

    pub fn max_dilation(&self) -> usize {
        *self.dilations.last().expect("schedule is nonempty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub n_layers: usize,
    /// Must equal the threshold the fit's noise crossing was computed with.
    pub mi_threshold: f64,
    pub layer_sweep: Vec<usize>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            n_layers: 8,
            mi_threshold: 1e-5,
            layer_sweep: (4..=9).collect(),
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_layers == 0 {
            return Err(Error::InvalidConfig("n_layers must be at least 1"));
        }
        if self.mi_threshold.is_nan() || self.mi_threshold <= 0.0 {
            return Err(Error::InvalidConfig("mi_threshold must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxDilationSource {
    Period,
    NoiseCrossing,
    MaxSampledLag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxDilation {
    pub value: usize,
    pub source: MaxDilationSource,
    /// The curve never fell below the threshold; the true span is longer.
    pub lower_bound: bool,
}

/// The period for periodic curves, otherwise the noise crossing, otherwise
/// the longest sampled lag (flagged as a lower bound).
pub fn max_dilation(fit: &ClassifiedFit, config: &ScheduleConfig) -> Result<MaxDilation> {
    config.validate()?;
    if abs(config.mi_threshold - fit.noise_threshold) > 1e-12 * fit.noise_threshold {
        return Err(Error::InvalidConfig(
            "mi_threshold differs from the threshold the fit was computed with",
        ));
    }
    if fit.decay_class == DecayClass::PowerLawPeriodic {
        if let Some(period) = fit.period() {
            return Ok(MaxDilation {
                value: period,
                source: MaxDilationSource::Period,
                lower_bound: false,
            });
        }
    }
    Ok(match fit.noise_crossing_d {
        Some(d) => MaxDilation {
            value: d,
            source: MaxDilationSource::NoiseCrossing,
            lower_bound: false,
        },
        None => MaxDilation {
            value: fit.max_sampled_lag.max(1),
            source: MaxDilationSource::MaxSampledLag,
            lower_bound: true,
        },
    })
}

/// `1, 2, 4, ..., 2^(n_layers - 1)`.
pub fn standard_dilations(n_layers: usize) -> Result<DilationSchedule> {
    if n_layers == 0 {
        return Err(Error::InvalidConfig("n_layers must be at least 1"));
    }
    if n_layers > usize::BITS as usize - 1 {
        return Err(Error::InvalidConfig(
            "too many layers for power-of-two dilations",
        ));
    }
    DilationSchedule::new(
        (0..n_layers).map(|i| 1usize << i).collect(),
        ScheduleOrigin::Standard,
        format!("standard power-of-two progression, {n_layers} layers"),
    )
}

/// Powers of two below `cap`, closed by `cap` itself once the progression
/// would reach or pass it.
fn capped_standard(n_layers: usize, cap: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..n_layers.min(usize::BITS as usize - 1) {
        let v = 1usize << i;
        if v >= cap {
            out.push(cap);
            break;
        }
        out.push(v);
    }
    out
}

enum DecayModel<'a> {
    Single(&'a PowerLawFit),
    Broken(&'a BrokenPowerLawFit),
}

impl DecayModel<'_> {
    fn of(fit: &ClassifiedFit) -> Result<DecayModel<'_>> {
        let model = match (&fit.broken, &fit.power) {
            (Some(b), _) => DecayModel::Broken(b),
            (None, Some(p)) => DecayModel::Single(p),
            (None, None) => return Err(Error::NoPowerLawModel),
        };
        let slopes = match &model {
            DecayModel::Single(p) => [p.slope, p.slope],
            DecayModel::Broken(b) => [b.left.slope, b.right.slope],
        };
        if let Some(&s) = slopes.iter().find(|s| s.is_nan() || **s >= 0.0) {
            return Err(Error::NonDecaying { value: s });
        }
        Ok(model)
    }

    /// The two segments are fitted independently, so they need not meet at
    /// the break. The right one is shifted vertically to meet the left one,
    /// which keeps the model continuous and the level spacing free of a jump.
    fn right_shift(b: &BrokenPowerLawFit) -> f64 {
        let brk = b.break_d as f64;
        b.left.ln_mi_at(brk) - b.right.ln_mi_at(brk)
    }

    fn ln_mi(&self, d: f64) -> f64 {
        match self {
            DecayModel::Single(p) => p.ln_mi_at(d),
            DecayModel::Broken(b) if d <= b.break_d as f64 => b.left.ln_mi_at(d),
            DecayModel::Broken(b) => b.right.ln_mi_at(d) + Self::right_shift(b),
        }
    }

    /// Lag where the model reaches `level`.
    fn lag_for(&self, level: f64) -> f64 {
        match self {
            DecayModel::Single(p) => p.lag_for_ln_mi(level),
            DecayModel::Broken(b) => {
                let brk = b.break_d as f64;
                if level >= b.left.ln_mi_at(brk) {
                    b.left.lag_for_ln_mi(level)
                } else {
                    b.right.lag_for_ln_mi(level - Self::right_shift(b))
                }
            }
        }
    }
}

/// Forces `1 = v[0] < v[1] < ... < v[n-1] = d_max`, moving collisions up
/// to the next free integer. Requires `v.len() <= d_max`.
fn make_distinct(raw: &[usize], d_max: usize) -> Vec<usize> {
    let n = raw.len();
    let mut out = Vec::with_capacity(n);
    for (k, &v) in raw.iter().enumerate() {
        let floor = if k == 0 { 1 } else { out[k - 1] + 1 };
        out.push(v.clamp(1, d_max).max(floor));
    }
    if let Some(last) = out.last_mut() {
        *last = d_max;
    }
    for k in (0..n.saturating_sub(1)).rev() {
        out[k] = out[k].min(out[k + 1] - 1);
    }
    out
}

/// Horizontal-line intercept schedule with `n_layers` dilations in
/// `1..=d_max`, read off the fit's (possibly broken) power-law model.
pub fn intercept_dilations(
    fit: &ClassifiedFit,
    n_layers: usize,
    d_max: usize,
) -> Result<DilationSchedule> {
    if n_layers < 2 {
        return Err(Error::InvalidConfig(
            "intercept schedules need at least 2 layers",
        ));
    }
    if n_layers > d_max {
        return Err(Error::TooManyLayers { n_layers, d_max });
    }
    let model = DecayModel::of(fit)?;
    let top = model.ln_mi(1.0);
    let bottom = model.ln_mi(d_max as f64);
    let steps = (n_layers - 1) as f64;
    let raw: Vec<usize> = (0..n_layers)
        .map(|k| {
            let level = top + (bottom - top) * k as f64 / steps;
            let lag = model.lag_for(level).clamp(1.0, d_max as f64);
            round(lag) as usize
        })
        .collect();
    let kind = match model {
        DecayModel::Single(p) => format!("power law slope {:.4}", p.slope),
        DecayModel::Broken(b) => format!(
            "broken power law, break {} (slopes {:.4} / {:.4})",
            b.break_d, b.left.slope, b.right.slope
        ),
    };
    DilationSchedule::new(
        make_distinct(&raw, d_max),
        ScheduleOrigin::CurveFitted,
        format!("{n_layers} equidistant ln-MI levels intersected with the fitted {kind}, max dilation {d_max}"),
    )
}

/// The single schedule for `config.n_layers`: the capped standard progression
/// for exponential decay, otherwise the intercept schedule. One layer is `[1]`.
pub fn schedule_for(fit: &ClassifiedFit, config: &ScheduleConfig) -> Result<DilationSchedule> {
    let md = max_dilation(fit, config)?;
    let (n, cap) = (config.n_layers, md.value);
    if n > cap {
        return Err(Error::TooManyLayers {
            n_layers: n,
            d_max: cap,
        });
    }
    if n == 1 {
        return DilationSchedule::new(vec![1], ScheduleOrigin::Standard, "single layer");
    }
    if fit.decay_class == DecayClass::Exponential {
        return DilationSchedule::new(
            capped_standard(n, cap),
            ScheduleOrigin::Standard,
            format!("exponential decay: standard progression capped at max dilation {cap}"),
        );
    }
    intercept_dilations(fit, n, cap)
}

/// Consecutive dilations up to the break (or as many as fit), then the
/// power-of-two progression, capped at `d_max`.
fn dense_then_standard(n_layers: usize, break_d: usize, d_max: usize) -> Vec<usize> {
    let dense = break_d.min(n_layers - 1).min(d_max);
    let mut out: Vec<usize> = (1..=dense).collect();
    let mut next = (dense + 1).next_power_of_two();
    while out.len() < n_layers {
        if next >= d_max {
            if *out.last().unwrap() < d_max {
                out.push(d_max);
            }
            break;
        }
        out.push(next);
        next *= 2;
    }
    out
}

/// Powers of two for the first layers, then a few geometrically spaced
/// dilations out to `d_max`. `None` when the powers already reach `d_max`.
fn standard_then_sparse(n_layers: usize, d_max: usize) -> Option<Vec<usize>> {
    let sparse = (n_layers / 4).max(1);
    let standard = n_layers - sparse;
    if standard == 0 || standard >= usize::BITS as usize - 1 {
        return None;
    }
    let last = 1usize << (standard - 1);
    if last >= d_max {
        return None;
    }
    let mut out: Vec<usize> = (0..standard).map(|i| 1usize << i).collect();
    let ratio = libm::pow(d_max as f64 / last as f64, 1.0 / sparse as f64);
    for j in 1..=sparse {
        let v = round(last as f64 * libm::pow(ratio, j as f64)) as usize;
        out.push(v.max(*out.last().unwrap() + 1).min(d_max));
    }
    *out.last_mut().unwrap() = d_max;
    if out.windows(2).any(|w| w[0] >= w[1]) {
        return None;
    }
    Some(out)
}

/// A family of candidate schedules plus the fit that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchSpec {
    pub format_version: u32,
    pub dataset_meta: String,
    pub decay_class: DecayClass,
    pub max_dilation: MaxDilation,
    pub layer_sweep: Vec<usize>,
    pub schedules: Vec<DilationSchedule>,
    pub evidence: ClassifiedFit,
}

pub fn build_grid(fit: &ClassifiedFit, config: &ScheduleConfig) -> Result<GridSearchSpec> {
    if config.layer_sweep.is_empty() {
        return Err(Error::EmptyLayerSweep);
    }
    if config.layer_sweep.contains(&0) {
        return Err(Error::InvalidConfig("layer counts must be at least 1"));
    }
    let md = max_dilation(fit, config)?;
    let cap = md.value;
    let mut schedules: Vec<DilationSchedule> = Vec::new();
    let mut push = |s: DilationSchedule| {
        if !schedules.iter().any(|t| t.dilations == s.dilations) {
            schedules.push(s);
        }
    };

    if fit.decay_class == DecayClass::Exponential {
        for &n in &config.layer_sweep {
            push(DilationSchedule::new(
                capped_standard(n, cap),
                ScheduleOrigin::Standard,
                format!("standard progression capped at max dilation {cap}, {n} layers requested"),
            )?);
        }
    } else {
        for &n in &config.layer_sweep {
            push(standard_dilations(n)?);
        }
        for &n in &config.layer_sweep {
            if n < usize::BITS as usize && (1usize << (n - 1)) > cap {
                push(DilationSchedule::new(
                    capped_standard(n, cap),
                    ScheduleOrigin::Standard,
                    format!(
                        "standard progression capped at max dilation {cap}, {n} layers requested"
                    ),
                )?);
            }
        }
        for &n in &config.layer_sweep {
            if (2..=cap).contains(&n) {
                push(intercept_dilations(fit, n, cap)?);
            }
        }
        if let Some(broken) = &fit.broken {
            for &n in &config.layer_sweep {
                if n < 3 {
                    continue;
                }
                let dense = dense_then_standard(n, broken.break_d, cap);
                if dense.len() >= 2 {
                    push(DilationSchedule::new(
                        dense,
                        ScheduleOrigin::CurveFitted,
                        format!(
                            "dense dilations up to the break at {}, then powers of two",
                            broken.break_d
                        ),
                    )?);
                }
                if let Some(sparse) = standard_then_sparse(n, cap) {
                    push(DilationSchedule::new(
                        sparse,
                        ScheduleOrigin::CurveFitted,
                        format!(
                            "powers of two past the break at {}, then sparse dilations to {cap}",
                            broken.break_d
                        ),
                    )?);
                }
            }
        }
    }

    Ok(GridSearchSpec {
        format_version: GRID_FORMAT_VERSION,
        dataset_meta: fit.curve_meta.source.clone(),
        decay_class: fit.decay_class,
        max_dilation: md,
        layer_sweep: config.layer_sweep.clone(),
        schedules,
        evidence: fit.clone(),
    })
}
