//! Decay curves with one rayon task per lag.

use midecay_core::estimator::{assemble_curve, estimate_lag, CurveMeta};
use midecay_core::{Corpus, DecayCurve, EstimatorConfig, LagGrid, Result};
use rayon::prelude::*;

/// Same result as [`midecay_core::decay_curve`], bit for bit: each lag is
/// computed independently and the estimates are reassembled in grid order.
pub fn par_decay_curve(
    corpus: &Corpus,
    grid: &LagGrid,
    config: &EstimatorConfig,
) -> Result<DecayCurve> {
    config.validate()?;
    let estimates = grid
        .lags()
        .par_iter()
        .map(|&lag| estimate_lag(corpus, lag, config))
        .collect::<Result<Vec<_>>>()?;
    assemble_curve(estimates, CurveMeta::for_corpus(corpus, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use midecay_core::{decay_curve, default_lag_grid, BiasCorrection, TokenMode};

    #[test]
    fn matches_sequential() {
        let text: Vec<u8> = (0..20_000u32)
            .map(|i| b"abcdefgh"[((i * i + i / 7) % 8) as usize])
            .collect();
        let corpus = Corpus::from_text(&text, TokenMode::Byte, "t").unwrap();
        let grid = default_lag_grid(300).unwrap();
        for bias_correction in [BiasCorrection::None, BiasCorrection::MillerMadow] {
            let cfg = EstimatorConfig {
                bias_correction,
                min_pair_count: 1000,
            };
            assert_eq!(
                par_decay_curve(&corpus, &grid, &cfg).unwrap(),
                decay_curve(&corpus, &grid, &cfg).unwrap()
            );
        }
    }
}
