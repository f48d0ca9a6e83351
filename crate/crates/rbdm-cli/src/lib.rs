//! Command-line front end for robust Bayesian dynamic trend analysis.
//!
//! The binary wires four stages together:
//!
//! 1. [`ingest`] — CSV ingestion onto a strict monthly or annual grid, or
//!    synthetic-series generation for benchmarking;
//! 2. fitting via [`rbdm::gibbs`], optionally over several parallel chains;
//! 3. [`rbdm::diagnostics`] post-processing into posterior summaries,
//!    flagged events, and convergence statistics;
//! 4. [`output`] — machine-readable artifacts (CSV tables and a JSON
//!    summary) written with full float precision so runs are byte-comparable.

pub mod config;
pub mod error;
pub mod ingest;
pub mod output;
pub mod run;

pub use config::{Cli, RunConfig};
pub use error::CliError;
