//! Command-line arguments and the validated run configuration.

use std::path::PathBuf;

use clap::Parser;
use serde::{Deserialize, Serialize};

use rbdm::gibbs::HyperParams;
use rbdm::synth::SyntheticKind;

use crate::error::CliError;

/// Robust Bayesian trend analysis for univariate monthly or annual series.
///
/// Fits a local linear growth state-space model with heavy-tailed
/// hierarchical priors by Gibbs sampling and reports observational outliers
/// and structural breaks as posterior-weight events.
#[derive(Parser, Debug, Clone)]
#[command(name = "rbdm", version)]
pub struct Cli {
    /// Input CSV file with a date column and a value column.
    #[arg(
        long,
        value_name = "FILE",
        required_unless_present = "generate_synthetic"
    )]
    pub input: Option<PathBuf>,

    /// Name of the date column (YYYY-MM, or YYYY with --annual).
    #[arg(long, value_name = "NAME", default_value = "date")]
    pub date_col: String,

    /// Name of the value column.
    #[arg(long, value_name = "NAME", default_value = "value")]
    pub value_col: String,

    /// Natural-log transform the values before fitting.
    #[arg(long)]
    pub log: bool,

    /// Expect an annual grid instead of the default monthly grid.
    #[arg(long)]
    pub annual: bool,

    /// Tail thickness of the observational mixture weights.
    #[arg(long, default_value_t = 4.0)]
    pub nu: f64,

    /// Separate tail thickness for the state mixture weights
    /// (defaults to the value of --nu).
    #[arg(long, value_name = "NU")]
    pub nu_state: Option<f64>,

    /// First shape parameter of the precision hierarchy.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,

    /// Second shape parameter of the precision hierarchy.
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,

    /// Reciprocal of the hierarchy scale beta.
    #[arg(long, default_value_t = 10000.0)]
    pub inv_beta: f64,

    /// Gibbs sweeps retained after burn-in (before thinning).
    #[arg(long, default_value_t = 30000)]
    pub iters: usize,

    /// Burn-in sweeps discarded before retention starts.
    #[arg(long, default_value_t = 10000)]
    pub burn: usize,

    /// Keep every thin-th retained sweep.
    #[arg(long, default_value_t = 1)]
    pub thin: usize,

    /// RNG seed; chain i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Number of parallel chains (draws are pooled for the summaries).
    #[arg(long, default_value_t = 1)]
    pub chains: usize,

    /// Central credible level for the state bands.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,

    /// Posterior-weight threshold below which a time point is flagged.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,

    /// How many smallest weights per family to list in the summary.
    #[arg(long, default_value_t = 15)]
    pub top_k: usize,

    /// Directory the artifact files are written into.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out_dir: PathBuf,

    /// Generate a synthetic series instead of reading one
    /// (clean, obs-outlier, level-shift, slope-shift).
    #[arg(long, value_name = "KIND")]
    pub generate_synthetic: Option<SyntheticKind>,

    /// Length of the generated series.
    #[arg(long, value_name = "T", default_value_t = 120)]
    pub synthetic_len: usize,

    /// Anomaly size in innovation standard deviations
    /// (defaults to the generator's per-kind magnitude).
    #[arg(long, value_name = "SIGMAS")]
    pub magnitude: Option<f64>,

    /// Also write the tail-comparison table (tails.csv).
    #[arg(long)]
    pub emit_tails: bool,
}

/// Validated, serializable run configuration echoed into the summary JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub date_col: String,
    pub value_col: String,
    pub log: bool,
    pub annual: bool,
    pub hyper: HyperParams,
    pub chains: usize,
    pub level: f64,
    pub threshold: f64,
    pub top_k: usize,
    pub out_dir: PathBuf,
    pub generate_synthetic: Option<SyntheticKind>,
    pub synthetic_len: usize,
    pub magnitude: Option<f64>,
    pub emit_tails: bool,
}

impl TryFrom<Cli> for RunConfig {
    type Error = CliError;

    fn try_from(cli: Cli) -> Result<Self, CliError> {
        if !(cli.inv_beta.is_finite() && cli.inv_beta > 0.0) {
            return Err(CliError::Config(format!(
                "--inv-beta must be finite and positive, got {}",
                cli.inv_beta
            )));
        }
        let hyper = HyperParams {
            nu: cli.nu,
            nu_state: cli.nu_state,
            p: cli.p,
            q: cli.q,
            beta: 1.0 / cli.inv_beta,
            n_iter: cli.iters,
            n_burn: cli.burn,
            thin: cli.thin,
            seed: cli.seed,
        };
        let config = RunConfig {
            input: cli.input,
            date_col: cli.date_col,
            value_col: cli.value_col,
            log: cli.log,
            annual: cli.annual,
            hyper,
            chains: cli.chains,
            level: cli.level,
            threshold: cli.threshold,
            top_k: cli.top_k,
            out_dir: cli.out_dir,
            generate_synthetic: cli.generate_synthetic,
            synthetic_len: cli.synthetic_len,
            magnitude: cli.magnitude,
            emit_tails: cli.emit_tails,
        };
        config.validate()?;
        Ok(config)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(input) = &self.input {
            if input.as_os_str().is_empty() {
                return Err(CliError::Config("--input path is empty".into()));
            }
        } else if self.generate_synthetic.is_none() {
            return Err(CliError::Config(
                "either --input or --generate-synthetic is required".into(),
            ));
        }
        if self.out_dir.as_os_str().is_empty() {
            return Err(CliError::Config("--out-dir path is empty".into()));
        }
        if self.date_col.is_empty() || self.value_col.is_empty() {
            return Err(CliError::Config("column names must be non-empty".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(CliError::Config(format!(
                "--level must lie strictly between 0 and 1, got {}",
                self.level
            )));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(CliError::Config(format!(
                "--threshold must be finite and positive, got {}",
                self.threshold
            )));
        }
        if self.top_k == 0 {
            return Err(CliError::Config("--top-k must be at least 1".into()));
        }
        if self.chains == 0 {
            return Err(CliError::Config("--chains must be at least 1".into()));
        }
        self.hyper.validate().map_err(CliError::Model)?;
        Ok(())
    }
}
