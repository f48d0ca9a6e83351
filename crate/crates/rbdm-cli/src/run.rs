//! Run orchestration: data in, chains fitted, artifacts out.

use std::path::PathBuf;
use std::time::Instant;

use rbdm::diagnostics::{rank_events, split_chain_psrf, summarize, FlaggedEvent};
use rbdm::gibbs::{default_initial_moments, ChainOutput, HyperParams};
use rbdm::model::{log_transform, ModelSpec, TimeSeries};
use rbdm::priors::tail_comparison_table;
use rbdm::synth::{generate_synthetic, GroundTruth, SynthConfig};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::ingest::ingest_csv;
use crate::output::{
    write_json, write_residuals_csv, write_series_csv, write_states_csv, write_tails_csv,
    write_weights_csv, ChainReport, ParamSummary, SummaryFile,
};

/// What a successful run produced, for the caller to report.
#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub events: Vec<FlaggedEvent>,
    pub t_len: usize,
    pub n_draws: usize,
}

/// Executes the whole configured analysis and writes every artifact.
///
/// The summary JSON is written last so that a zero exit status implies the
/// complete artifact set is on disk.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    config.validate()?;

    let (series, truth) = load_series(config)?;
    let series = if config.log {
        log_transform(&series)?
    } else {
        series
    };

    let (m0, c0) = default_initial_moments(&series)?;
    let spec = ModelSpec::linear_growth(m0, c0)?;
    let chains = run_chains(&spec, &series, &config.hyper, config.chains)?;

    // Convergence statistics and per-chain reports are taken before pooling;
    // pooling concatenates the draws and discards chain identity.
    let rhat_obs = {
        let views: Vec<&[f64]> = chains.iter().map(|c| c.lambda_y_draws()).collect();
        split_chain_psrf(&views).ok()
    };
    let lam_level: Vec<Vec<f64>> = chains.iter().map(|c| c.lambda_theta_draws(0)).collect();
    let rhat_level = {
        let views: Vec<&[f64]> = lam_level.iter().map(|v| v.as_slice()).collect();
        split_chain_psrf(&views).ok()
    };
    let lam_slope: Vec<Vec<f64>> = chains.iter().map(|c| c.lambda_theta_draws(1)).collect();
    let rhat_slope = {
        let views: Vec<&[f64]> = lam_slope.iter().map(|v| v.as_slice()).collect();
        split_chain_psrf(&views).ok()
    };
    let per_chain: Vec<ChainReport> = chains
        .iter()
        .enumerate()
        .map(|(i, c)| ChainReport {
            chain: i,
            seed: config.hyper.seed.wrapping_add(i as u64),
            n_draws: c.n_draws(),
            lambda_obs_mean: mean(c.lambda_y_draws()),
            lambda_level_mean: mean(&lam_level[i]),
            lambda_slope_mean: mean(&lam_slope[i]),
        })
        .collect();

    std::fs::create_dir_all(&config.out_dir).map_err(|source| CliError::Write {
        path: config.out_dir.display().to_string(),
        source,
    })?;
    let mut files: Vec<PathBuf> = Vec::new();

    if config.chains > 1 {
        for (i, chain) in chains.iter().enumerate() {
            let dir = config.out_dir.join(format!("chain_{i}"));
            std::fs::create_dir_all(&dir).map_err(|source| CliError::Write {
                path: dir.display().to_string(),
                source,
            })?;
            let chain_summary = summarize(chain, &series, config.level, config.threshold)?;
            let states = dir.join("states.csv");
            write_states_csv(&states, &chain_summary)?;
            files.push(states);
            let weights = dir.join("weights.csv");
            write_weights_csv(&weights, &chain_summary)?;
            files.push(weights);
            let residuals = dir.join("residuals.csv");
            write_residuals_csv(&residuals, &chain_summary)?;
            files.push(residuals);
        }
    }

    let pooled = ChainOutput::pooled(chains)?;
    let lambda_obs = ParamSummary::from_draws(pooled.lambda_y_draws(), rhat_obs);
    let lambda_level = ParamSummary::from_draws(&pooled.lambda_theta_draws(0), rhat_level);
    let lambda_slope = ParamSummary::from_draws(&pooled.lambda_theta_draws(1), rhat_slope);

    let summary = summarize(&pooled, &series, config.level, config.threshold)?;
    let top_ranked = rank_events(&summary, config.top_k)?;

    let states_path = config.out_dir.join("states.csv");
    write_states_csv(&states_path, &summary)?;
    files.push(states_path);
    let weights_path = config.out_dir.join("weights.csv");
    write_weights_csv(&weights_path, &summary)?;
    files.push(weights_path);
    let residuals_path = config.out_dir.join("residuals.csv");
    write_residuals_csv(&residuals_path, &summary)?;
    files.push(residuals_path);

    if config.emit_tails {
        let grid: Vec<f64> = (0..=400).map(|i| -20.0 + 0.1 * i as f64).collect();
        let rows = tail_comparison_table(&grid, 1.0)?;
        let tails_path = config.out_dir.join("tails.csv");
        write_tails_csv(&tails_path, &rows)?;
        files.push(tails_path);
    }

    if let Some(truth) = &truth {
        let data_path = config.out_dir.join("synthetic.csv");
        write_series_csv(&data_path, &series, &config.date_col, &config.value_col)?;
        files.push(data_path);
        let truth_path = config.out_dir.join("truth.json");
        write_json(&truth_path, truth)?;
        files.push(truth_path);
    }

    let events = summary.events.clone();
    let summary_file = SummaryFile {
        config: config.clone(),
        seed: config.hyper.seed,
        t_len: series.len(),
        n_draws: pooled.n_draws(),
        runtime_seconds: started.elapsed().as_secs_f64(),
        lambda_obs,
        lambda_level,
        lambda_slope,
        events: summary.events,
        top_ranked,
        per_chain,
        synthetic_truth: truth,
    };
    let summary_path = config.out_dir.join("summary.json");
    write_json(&summary_path, &summary_file)?;
    files.push(summary_path);

    Ok(RunOutcome {
        out_dir: config.out_dir.clone(),
        files,
        events,
        t_len: summary_file.t_len,
        n_draws: summary_file.n_draws,
    })
}

fn load_series(config: &RunConfig) -> Result<(TimeSeries, Option<GroundTruth>), CliError> {
    if let Some(kind) = config.generate_synthetic {
        let mut synth = SynthConfig::new(kind);
        synth.t_len = config.synthetic_len;
        synth.seed = config.hyper.seed;
        if let Some(magnitude) = config.magnitude {
            synth.magnitude = magnitude;
        }
        let (series, truth) = generate_synthetic(&synth)?;
        Ok((series, Some(truth)))
    } else {
        let path = config.input.as_ref().expect("validated by RunConfig");
        let series = ingest_csv(path, &config.date_col, &config.value_col, config.annual)?;
        Ok((series, None))
    }
}

/// Runs the requested number of chains; chain `i` reuses the configuration
/// with seed `seed + i`. Chains run on their own threads.
fn run_chains(
    spec: &ModelSpec,
    series: &TimeSeries,
    hyper: &HyperParams,
    chains: usize,
) -> Result<Vec<ChainOutput>, CliError> {
    if chains == 1 {
        return Ok(vec![rbdm::gibbs::run_seeded(spec, series, hyper)?]);
    }
    let results: Vec<Result<ChainOutput, rbdm::Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains)
            .map(|i| {
                let mut hp = *hyper;
                hp.seed = hyper.seed.wrapping_add(i as u64);
                scope.spawn(move || rbdm::gibbs::run_seeded(spec, series, &hp))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    });
    let mut outputs = Vec::with_capacity(chains);
    for r in results {
        outputs.push(r?);
    }
    Ok(outputs)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}
