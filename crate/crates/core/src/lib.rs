//! Multilevel Monte Carlo pricing of Asian, lookback and barrier options under
//! exponential Lévy models (variance gamma, normal inverse Gaussian and
//! spectrally negative alpha-stable), with diagnostics for convergence rates
//! and computational complexity.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod levy;
pub mod mlmc;
pub mod paths;
pub mod payoffs;
pub mod report;
pub mod rng;
pub mod stats;

pub use config::ExperimentConfig;
pub use diagnostics::{
    complexity_sweep, cost_slope, measure_dn, measure_rates, measure_rates_multi, reference_rates,
    ComplexityPoint, DnReport, RateReport, RateSettings,
};
pub use error::{Error, Result};
pub use levy::{
    char_function, mean_correcting_drift, sample_nig_increment, sample_stable_increment,
    sample_vg_increment, IncrementSampler, LevyModel, ModelParams, NigParams, StableParams, VgParams,
};
pub use mlmc::{
    fit_rates, optimal_allocation, run_mlmc, single_level_estimate, LevelStats, MlmcConfig, MlmcResult,
};
pub use paths::{generate_coupled_path, GridSpec, PathGenerator, PathGrid};
pub use payoffs::{evaluate_pair, OptionKind, OptionSpec, PayoffPair};
pub use rng::{Domain, RngStream};
