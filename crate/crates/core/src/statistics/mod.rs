//! Return-time laws, entropy, Gibbs envelopes and fluctuations.
//!
//! Estimators split their work into fixed chunks (see [`crate::parallel`])
//! and merge in chunk order, so outputs depend on the seed only.

mod entropy;
mod gibbs;
mod growth;
mod returns;
mod survival;
mod variance;

pub use entropy::{
    fluctuation_test, log_returns, ow_entropy, write_ow_csv, FluctuationSample, FluctuationSummary, OwOptions, OwSample,
    OW_CENSORING_WARNING,
};
pub use gibbs::{gibbs_trace, gibbs_trace_potential, GibbsBounds, GibbsRow, GibbsTrace, Measure};
pub use growth::{aperiodic_centers, growth_diagnostic, is_periodic, GrowthSeries, PERIODIC_MAX, PERIODIC_TOL};
pub use returns::{matched_ball, resolve_target, return_stats, return_stats_many, RtsOptions, CENSORING_WARNING};
pub use survival::{ks_between, ks_cdf, ks_distance, ks_exponential, EmpiricalSurvival, MeasureSource, Target};
pub use variance::{l2_check, sigma2_from_series, variance_sigma2, L2Trace, VarianceEstimate, DEFAULT_MAX_LAG};
