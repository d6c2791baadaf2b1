//! Pricing of arithmetic Asian, Lookback and fixed-and-floating Asian options
//! under the Heston model via stochastic collocation (SC).
//!
//! The pipeline has three stages:
//!
//! 1. [`heston`] simulates paths with the almost-exact scheme and [`payoffs`]
//!    aggregates them into the path-dependent quantity `A`.
//! 2. [`collocation`] compresses the distribution of `A` into `M` collocation
//!    values (CVs) and a piecewise polynomial map of a standard normal.
//! 3. [`regressor`] learns Heston parameters -> CVs; [`semianalytic`] and
//!    [`conditional`] turn CVs back into prices.
//!
//! [`diagnostics`] has the error measures and convergence sweeps.

pub mod collocation;
pub mod conditional;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod heston;
pub mod normal;
mod par;
pub mod payoffs;
pub mod regressor;
pub mod rng;
pub mod semianalytic;
pub mod stats;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, Result};
