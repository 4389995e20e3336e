//! Return-time statistics for piecewise-monotone interval maps.
//!
//! The crate is organised in five layers:
//!
//! * [`maps`]: interval maps, cylinder partitions, orbit sampling;
//! * [`hofbauer`]: the Hofbauer tower (canonical Markov extension) and lifted measures;
//! * [`inducing`]: first returns, δ-extendible returns and inducing schemes;
//! * [`transfer`]: transfer operators of full-branch expanding systems (Ulam discretisation);
//! * [`statistics`]: return-time laws, entropy, Gibbs envelopes and fluctuations.
//!
//! Geometric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix `f64`, which is what the estimators use.

pub mod error;
pub mod hofbauer;
pub mod inducing;
pub mod interval;
pub mod maps;
pub mod parallel;
pub mod real;
pub mod statistics;
pub mod transfer;

pub use error::{Error, Result};
pub use interval::Interval;
pub use real::Real;

pub type Map = maps::IntervalMap<f64>;
pub type Partition = maps::CylinderPartition<f64>;
pub type Tower = hofbauer::TowerGraph<f64>;
pub type Scheme = inducing::InducingScheme<f64>;
