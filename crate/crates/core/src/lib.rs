//! Simulation and exact analysis of the Gates–Westcott crystal growth process.
//!
//! Piles on a row of `n` sites grow by unit blocks; a site with `v` strictly
//! higher neighbours grows at rate `beta[v]`. The crate provides
//!
//! - [`model`]: configurations, shapes, boundary conventions;
//! - [`engine`]: exact event-driven simulation engines and a coupling harness;
//! - [`exact`]: closed forms, comb-set enumeration, truncated stationary
//!   solves and the known ergodicity/transience criteria;
//! - [`analysis`]: Monte Carlo estimators (speeds, tails, thresholds, comb
//!   classification, empirical shape laws);
//! - [`sweep`]: resumable phase-diagram scans.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod exact;
pub mod model;
pub mod seed;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{Boundary, Configuration, RateTriple, Shape};
