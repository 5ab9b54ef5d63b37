//! Multi-objective NM-landscapes and their Boltzmann distributions.
//!
//! The crate generates tunable interaction models ([`landscape`]), combines
//! them into bi-objective problems over bit strings ([`mop`]), enumerates
//! the whole search space, and studies the Boltzmann distribution of each
//! objective together with its univariate factorization
//! ([`distribution`]). Pareto fronts of objective values and of
//! probabilities are extracted and compared in [`pareto`], and pairwise
//! mutual information and parameter sweeps live in [`analysis`].
//!
//! Solution indices are LSB-first throughout: bit `i - 1` of an index is
//! variable `x_i`.

pub mod analysis;
pub mod cli;
mod dd;
pub mod distribution;
pub mod error;
mod exact;
pub mod export;
pub mod format;
pub mod landscape;
pub mod mop;
mod order;
pub mod pareto;
pub mod rng;
pub mod table;

pub use error::{Error, Result};
