//! Artifact writers.
//!
//! Every floating-point number is printed with 17 significant digits
//! (`{:.16e}`), which is enough for `f64` values to round-trip exactly, so a
//! run is byte-identical to any rerun with the same configuration and seed.
//! The JSON summary is written from a struct with a fixed field order; the
//! only field that varies between identical runs is `runtime_seconds`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use rbdm::diagnostics::{FlaggedEvent, PosteriorSummary, RankedWeight};
use rbdm::model::TimeSeries;
use rbdm::priors::TailRow;
use rbdm::synth::GroundTruth;

use crate::config::RunConfig;
use crate::error::CliError;

/// Formats a float with 17 significant digits so it round-trips exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn open(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let file = File::create(path).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(mut writer: csv::Writer<BufWriter<File>>, path: &Path) -> Result<(), CliError> {
    writer.flush().map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

fn record(
    writer: &mut csv::Writer<BufWriter<File>>,
    path: &Path,
    fields: &[String],
) -> Result<(), CliError> {
    writer
        .write_record(fields)
        .map_err(|source| CliError::Serialize {
            what: "csv row",
            detail: format!("{}: {source}", path.display()),
        })
}

/// `states.csv`: per-time posterior mean and credible band of level and slope.
pub fn write_states_csv(path: &Path, summary: &PosteriorSummary) -> Result<(), CliError> {
    let mut w = open(path)?;
    record(
        &mut w,
        path,
        &[
            "t".into(),
            "level_mean".into(),
            "level_lo".into(),
            "level_hi".into(),
            "slope_mean".into(),
            "slope_lo".into(),
            "slope_hi".into(),
        ],
    )?;
    for (t, ts) in summary.timestamps.iter().enumerate() {
        record(
            &mut w,
            path,
            &[
                ts.to_string(),
                fmt_float(summary.level.mean[t]),
                fmt_float(summary.level.lower[t]),
                fmt_float(summary.level.upper[t]),
                fmt_float(summary.slope.mean[t]),
                fmt_float(summary.slope.lower[t]),
                fmt_float(summary.slope.upper[t]),
            ],
        )?;
    }
    finish(w, path)
}

/// `weights.csv`: per-time posterior means of all three weight families.
pub fn write_weights_csv(path: &Path, summary: &PosteriorSummary) -> Result<(), CliError> {
    let mut w = open(path)?;
    record(
        &mut w,
        path,
        &[
            "t".into(),
            "omega_y".into(),
            "omega_level".into(),
            "omega_slope".into(),
        ],
    )?;
    for (t, ts) in summary.timestamps.iter().enumerate() {
        record(
            &mut w,
            path,
            &[
                ts.to_string(),
                fmt_float(summary.omega_y_mean[t]),
                fmt_float(summary.omega_level_mean[t]),
                fmt_float(summary.omega_slope_mean[t]),
            ],
        )?;
    }
    finish(w, path)
}

/// `residuals.csv`: per-time residual of the posterior mean level.
pub fn write_residuals_csv(path: &Path, summary: &PosteriorSummary) -> Result<(), CliError> {
    let mut w = open(path)?;
    record(&mut w, path, &["t".into(), "residual".into()])?;
    for (t, ts) in summary.timestamps.iter().enumerate() {
        record(
            &mut w,
            path,
            &[ts.to_string(), fmt_float(summary.residuals[t])],
        )?;
    }
    finish(w, path)
}

/// `tails.csv`: the tail-comparison table of the closed-form marginal
/// against Cauchy and IQR-matched normal densities.
pub fn write_tails_csv(path: &Path, rows: &[TailRow]) -> Result<(), CliError> {
    let mut w = open(path)?;
    record(
        &mut w,
        path,
        &[
            "theta".into(),
            "stb2".into(),
            "cauchy".into(),
            "normal".into(),
        ],
    )?;
    for r in rows {
        record(
            &mut w,
            path,
            &[
                fmt_float(r.theta),
                fmt_float(r.stb2),
                fmt_float(r.cauchy),
                fmt_float(r.normal),
            ],
        )?;
    }
    finish(w, path)
}

/// Writes a series as a two-column CSV, reusing the configured column names
/// so the file can be re-ingested with the same flags.
pub fn write_series_csv(
    path: &Path,
    series: &TimeSeries,
    date_col: &str,
    value_col: &str,
) -> Result<(), CliError> {
    let mut w = open(path)?;
    record(&mut w, path, &[date_col.to_string(), value_col.to_string()])?;
    for (ts, v) in series.timestamps().iter().zip(series.values()) {
        record(&mut w, path, &[ts.to_string(), fmt_float(*v)])?;
    }
    finish(w, path)
}

/// Posterior summary of one global precision parameter.
#[derive(Debug, Clone, Serialize)]
pub struct ParamSummary {
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    /// Split-chain potential scale reduction; `null` when the chain layout
    /// is too short to split. Reported, never used to gate the run.
    pub rhat_split: Option<f64>,
}

impl ParamSummary {
    /// Summarizes pooled draws; `rhat` is computed per chain before pooling.
    pub fn from_draws(draws: &[f64], rhat: Option<f64>) -> Self {
        let n = draws.len().max(1) as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        let mut sorted = draws.to_vec();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite draws"));
        ParamSummary {
            mean,
            sd: var.sqrt(),
            q05: rbdm::diagnostics::quantile(&sorted, 0.05),
            median: rbdm::diagnostics::quantile(&sorted, 0.5),
            q95: rbdm::diagnostics::quantile(&sorted, 0.95),
            rhat_split: rhat,
        }
    }
}

/// Per-chain reporting block.
#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub chain: usize,
    pub seed: u64,
    pub n_draws: usize,
    pub lambda_obs_mean: f64,
    pub lambda_level_mean: f64,
    pub lambda_slope_mean: f64,
}

/// The `summary.json` document.
#[derive(Debug, Serialize)]
pub struct SummaryFile {
    pub config: RunConfig,
    pub seed: u64,
    pub t_len: usize,
    pub n_draws: usize,
    pub runtime_seconds: f64,
    pub lambda_obs: ParamSummary,
    pub lambda_level: ParamSummary,
    pub lambda_slope: ParamSummary,
    pub events: Vec<FlaggedEvent>,
    pub top_ranked: Vec<RankedWeight>,
    pub per_chain: Vec<ChainReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic_truth: Option<GroundTruth>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value).map_err(|e| CliError::Serialize {
        what: "summary json",
        detail: e.to_string(),
    })?;
    writer
        .write_all(b"\n")
        .and_then(|()| writer.flush())
        .map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_the_printed_form() {
        for x in [
            0.0,
            -0.0,
            1.0 / 3.0,
            -7.25,
            1e-300,
            2.2250738585072014e-308,
            1.7976931348623157e308,
            0.1 + 0.2,
            std::f64::consts::PI,
            6.02e23,
        ] {
            let text = fmt_float(x);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} printed as {text}");
        }
    }

    #[test]
    fn printed_floats_carry_seventeen_significant_digits() {
        let text = fmt_float(std::f64::consts::PI);
        // "3.1415926535897931e0": one leading digit plus 16 after the point.
        let mantissa: String = text
            .chars()
            .take_while(|c| *c != 'e')
            .filter(|c| c.is_ascii_digit())
            .collect();
        assert_eq!(mantissa.len(), 17, "{text}");
    }

    #[test]
    fn param_summary_of_a_known_sample() {
        let draws: Vec<f64> = (1..=5).map(|i| i as f64).collect();
        let s = ParamSummary::from_draws(&draws, None);
        assert!((s.mean - 3.0).abs() < 1e-15);
        assert!((s.sd - (2.5_f64).sqrt()).abs() < 1e-15);
        assert!((s.median - 3.0).abs() < 1e-15);
        assert!((s.q05 - 1.2).abs() < 1e-12);
        assert!((s.q95 - 4.8).abs() < 1e-12);
        assert_eq!(s.rhat_split, None);
    }
}
