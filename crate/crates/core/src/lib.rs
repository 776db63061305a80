//! Simultaneous inference for panels of functional time series.
//!
//! A panel holds `n` consecutive observations of `r` curves sampled on a
//! common grid over `[0, 1]`. The crate provides
//!
//! - joint simultaneous confidence bands for all `r` mean curves
//!   ([`infer::jscb`]),
//! - a family-wise test that all mean curves are parallel
//!   ([`infer::parallelism_test`]),
//! - minimum-volatility block-size selection for the multiplier block
//!   bootstrap both procedures rely on ([`boot::mv_select`]),
//! - the PAR/PMA simulation models and a Monte Carlo harness
//!   ([`simgen`], [`experiments`]),
//! - local linear smoothing of raw long-format records into a panel
//!   ([`ingest`]).
//!
//! Every randomized routine is deterministic given its seed, whatever the
//! size of the rayon thread pool.

pub mod boot;
pub mod cli;
pub mod curves;
pub mod error;
pub mod experiments;
pub mod infer;
pub mod ingest;
pub mod io;
pub mod rng;
pub mod simgen;

pub use boot::{bootstrap_sup_quantile, mv_select, BootstrapConfig, MvCandidates};
pub use curves::{make_grid, Curve, Grid, Matrix, PanelSeries};
pub use error::{Error, Result};
pub use infer::{band_contains, jscb, parallelism_test, BandSet, ParallelismResult};
pub use simgen::{simulate_panel, ErrorDist, Model, SimConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
