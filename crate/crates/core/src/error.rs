use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input contains no symbols")]
    EmptyInput,
    #[error("input is not valid UTF-8 (first bad byte at offset {offset})")]
    InvalidUtf8 { offset: usize },
    #[error("alphabet of {size} symbols exceeds the limit of {limit} for this mode")]
    AlphabetTooLarge { size: usize, limit: usize },
    #[error("symbol {symbol} is outside the alphabet of size {alphabet_size}")]
    SymbolOutOfRange { symbol: u32, alphabet_size: usize },
    #[error("sequence {index} has length {found}, expected {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("no symbol pairs exist at lag {lag}")]
    EmptyLag { lag: usize },
    #[error("every lag in the grid was empty or below the minimum pair count")]
    EmptyCurve,
    #[error("invalid lag grid: {0}")]
    InvalidLagGrid(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("need at least {needed} usable curve points, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("fitted curve does not decay (slope or rate {value})")]
    NonDecaying { value: f64 },
    #[error("no break candidate admits a fit on both sides")]
    NoBreakCandidate,
    #[error("the fit carries no power-law model to solve for intercepts")]
    NoPowerLawModel,
    #[error("{n_layers} layers cannot be placed as distinct dilations in 1..={d_max}")]
    TooManyLayers { n_layers: usize, d_max: usize },
    #[error("layer sweep is empty")]
    EmptyLayerSweep,
}
