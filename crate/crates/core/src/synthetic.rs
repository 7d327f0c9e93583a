//! Noisy synthetic decay curves with known ground truth.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::estimator::DecayCurve;
use crate::math::{exp, powf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// `amplitude * d^slope`
    PowerLaw { amplitude: f64, slope: f64 },
    /// Continuous two-segment power law meeting at `break_d`.
    Broken {
        amplitude: f64,
        left_slope: f64,
        right_slope: f64,
        break_d: f64,
    },
    /// Power law multiplied by `peak_gain` at every multiple of `period`.
    Periodic {
        amplitude: f64,
        slope: f64,
        period: usize,
        peak_gain: f64,
    },
    /// `amplitude * exp(-rate * d)`
    Exponential { amplitude: f64, rate: f64 },
}

impl Shape {
    pub fn mi_at(&self, d: usize) -> f64 {
        let x = d as f64;
        match *self {
            Shape::PowerLaw { amplitude, slope } => amplitude * powf(x, slope),
            Shape::Broken {
                amplitude,
                left_slope,
                right_slope,
                break_d,
            } => {
                if x <= break_d {
                    amplitude * powf(x, left_slope)
                } else {
                    amplitude * powf(break_d, left_slope) * powf(x / break_d, right_slope)
                }
            }
            Shape::Periodic {
                amplitude,
                slope,
                period,
                peak_gain,
            } => {
                let gain = if d.is_multiple_of(period) {
                    peak_gain
                } else {
                    1.0
                };
                amplitude * powf(x, slope) * gain
            }
            Shape::Exponential { amplitude, rate } => amplitude * exp(-rate * x),
        }
    }

    /// The exact curve at `lags` times `exp(N(0, sigma^2))` noise drawn from
    /// a ChaCha8 stream seeded with `seed`.
    pub fn sample(&self, lags: &[usize], sigma: f64, seed: u64) -> Result<DecayCurve> {
        let normal = Normal::new(0.0, sigma)
            .map_err(|_| Error::InvalidConfig("noise sigma must be finite and non-negative"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<(usize, f64)> = lags
            .iter()
            .map(|&d| (d, self.mi_at(d) * exp(normal.sample(&mut rng))))
            .collect();
        DecayCurve::from_samples(samples)
    }
}
