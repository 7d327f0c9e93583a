//! Mutual-information decay analysis for symbol sequences.
//!
//! The pipeline is: build a [`Corpus`] of symbol sequences, estimate a
//! [`DecayCurve`] of lagged mutual information, classify the curve's decay
//! law into a [`ClassifiedFit`], and turn that fit into dilation schedules and
//! grid-search specifications for dilated recurrent networks.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, parallel curve
//! estimation and the command-line front-end live in the `midecay` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod corpus;
pub mod error;
pub mod estimator;
pub mod fit;
mod math;
pub mod schedule;
pub mod synthetic;

pub use corpus::{Corpus, PermutationSpec, Symbol, TokenMode};
pub use error::{Error, Result};
pub use estimator::{
    count_pairs, decay_curve, default_lag_grid, mi_from_counts, BiasCorrection, CurvePoint,
    DecayCurve, EstimatorConfig, LagGrid, PairCounts,
};
pub use fit::{
    classify, detect_periodicity, fit_broken_power_law, fit_exponential, fit_power_law,
    noise_crossing, BrokenPowerLawFit, ClassifiedFit, DecayClass, ExponentialFit, FitConfig,
    PeriodicitySignature, PowerLawFit,
};
pub use schedule::{
    build_grid, intercept_dilations, max_dilation, schedule_for, standard_dilations,
    DilationSchedule, GridSearchSpec, MaxDilation, ScheduleConfig, ScheduleOrigin,
};
