//! Post-processing of chain output: posterior means and credible bands for
//! the level and slope, residuals, posterior weight means, and the flagged
//! outlier/break events derived from them.
//!
//! A posterior weight mean far below one marks a point whose variance the
//! model had to inflate locally; the artifact flags every weight mean below
//! a configurable threshold (default 0.5) and reports rank-ordered smallest
//! weights alongside, so borderline points remain visible even when nothing
//! crosses the threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::ChainOutput;
use crate::model::{TimeSeries, Timestamp};

/// Which weight family fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// The observational weight dropped: a one-off outlying observation.
    ObservationalOutlier,
    /// The level weight dropped: a structural break in the level.
    LevelBreak,
    /// The slope weight dropped: a structural break in the trend.
    SlopeBreak,
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            EventKind::ObservationalOutlier => "observational-outlier",
            EventKind::LevelBreak => "level-break",
            EventKind::SlopeBreak => "slope-break",
        };
        f.write_str(name)
    }
}

/// A time point whose posterior weight mean fell below the flag threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedEvent {
    /// 0-based observation index.
    pub t_index: usize,
    pub timestamp: Timestamp,
    pub kind: EventKind,
    /// Posterior mean of the weight that fired.
    pub omega_mean: f64,
    /// 1-based rank among the smallest weight means within the same family.
    pub rank: usize,
}

/// One row of the rank-ordered smallest-weights report (no threshold
/// applied).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedWeight {
    pub kind: EventKind,
    pub t_index: usize,
    pub timestamp: Timestamp,
    pub omega_mean: f64,
    pub rank: usize,
}

/// Posterior mean with an equal-tailed credible band, per time point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Everything the reporting layer needs, one entry per observation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub timestamps: Vec<Timestamp>,
    /// Level path (posterior mean and credible band).
    pub level: Band,
    /// Slope path (posterior mean and credible band).
    pub slope: Band,
    /// Posterior means of the observational weights.
    pub omega_y_mean: Vec<f64>,
    /// Posterior means of the level weights.
    pub omega_level_mean: Vec<f64>,
    /// Posterior means of the slope weights.
    pub omega_slope_mean: Vec<f64>,
    /// `y_t` minus the posterior mean level.
    pub residuals: Vec<f64>,
    /// Flagged events, grouped by family and ascending in weight mean.
    pub events: Vec<FlaggedEvent>,
    /// Credible level the bands were computed at.
    pub credible_level: f64,
    /// Flag threshold the events were computed at.
    pub threshold: f64,
}

/// Equal-tailed empirical quantile with linear interpolation between order
/// statistics. `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn band(chain: &ChainOutput, level: f64, read: impl Fn(usize, usize) -> f64) -> Band {
    let t_len = chain.t_len();
    let n = chain.n_draws();
    let p_lo = (1.0 - level) / 2.0;
    let p_hi = 1.0 - p_lo;
    let mut out = Band {
        mean: Vec::with_capacity(t_len),
        lower: Vec::with_capacity(t_len),
        upper: Vec::with_capacity(t_len),
    };
    let mut draws = vec![0.0; n];
    for t in 0..t_len {
        for (d, slot) in draws.iter_mut().enumerate() {
            // State index t+1 pairs with observation index t.
            *slot = read(d, t + 1);
        }
        out.mean.push(draws.iter().sum::<f64>() / n as f64);
        draws.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        out.lower.push(quantile(&draws, p_lo));
        out.upper.push(quantile(&draws, p_hi));
    }
    out
}

/// Flags every time point whose weight mean sits below `threshold`, for one
/// family; returns events ascending in weight mean with ties broken by the
/// earlier time.
fn flag_family(
    means: &[f64],
    timestamps: &[Timestamp],
    kind: EventKind,
    threshold: f64,
) -> Vec<FlaggedEvent> {
    let mut hits: Vec<(usize, f64)> = means
        .iter()
        .enumerate()
        .filter(|(_, &m)| m < threshold)
        .map(|(t, &m)| (t, m))
        .collect();
    hits.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    hits.into_iter()
        .enumerate()
        .map(|(i, (t, m))| FlaggedEvent {
            t_index: t,
            timestamp: timestamps[t],
            kind,
            omega_mean: m,
            rank: i + 1,
        })
        .collect()
}

/// Reduces a chain over `series` to posterior means, equal-tailed credible
/// bands at `level`, residuals against the posterior mean level, weight
/// means, and the events flagged at `threshold`.
pub fn summarize(
    chain: &ChainOutput,
    series: &TimeSeries,
    level: f64,
    threshold: f64,
) -> Result<PosteriorSummary> {
    if chain.n_draws() == 0 {
        return Err(Error::EmptyChain);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "threshold",
            requirement: "finite and strictly positive",
            value: threshold,
        });
    }
    if chain.t_len() != series.len() {
        return Err(Error::ChainShape(format!(
            "chain covers {} observations but the series has {}",
            chain.t_len(),
            series.len()
        )));
    }
    let t_len = chain.t_len();
    let timestamps = series.timestamps().to_vec();

    let level_band = band(chain, level, |d, t| chain.level(d, t));
    let slope_band = band(chain, level, |d, t| chain.slope(d, t));

    let omega_y_mean: Vec<f64> = (0..t_len).map(|t| chain.mean_omega_y(t)).collect();
    let omega_level_mean: Vec<f64> = (0..t_len).map(|t| chain.mean_omega_theta(t, 0)).collect();
    let omega_slope_mean: Vec<f64> = (0..t_len).map(|t| chain.mean_omega_theta(t, 1)).collect();

    let residuals: Vec<f64> = series
        .values()
        .iter()
        .zip(level_band.mean.iter())
        .map(|(&y, &mu)| y - mu)
        .collect();

    let mut events = flag_family(
        &omega_y_mean,
        &timestamps,
        EventKind::ObservationalOutlier,
        threshold,
    );
    events.extend(flag_family(
        &omega_level_mean,
        &timestamps,
        EventKind::LevelBreak,
        threshold,
    ));
    events.extend(flag_family(
        &omega_slope_mean,
        &timestamps,
        EventKind::SlopeBreak,
        threshold,
    ));

    Ok(PosteriorSummary {
        timestamps,
        level: level_band,
        slope: slope_band,
        omega_y_mean,
        omega_level_mean,
        omega_slope_mean,
        residuals,
        events,
        credible_level: level,
        threshold,
    })
}

/// The `k` smallest posterior weight means per family, ascending, ties
/// broken by the earlier time; `k` beyond the series length is truncated.
pub fn rank_events(summary: &PosteriorSummary, k: usize) -> Result<Vec<RankedWeight>> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            requirement: "at least 1",
            value: 0.0,
        });
    }
    let take = k.min(summary.timestamps.len());
    let mut out = Vec::with_capacity(3 * take);
    for (means, kind) in [
        (&summary.omega_y_mean, EventKind::ObservationalOutlier),
        (&summary.omega_level_mean, EventKind::LevelBreak),
        (&summary.omega_slope_mean, EventKind::SlopeBreak),
    ] {
        let mut rows: Vec<(usize, f64)> = means.iter().copied().enumerate().collect();
        rows.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        out.extend(
            rows.into_iter()
                .take(take)
                .enumerate()
                .map(|(i, (t, m))| RankedWeight {
                    kind,
                    t_index: t,
                    timestamp: summary.timestamps[t],
                    omega_mean: m,
                    rank: i + 1,
                }),
        );
    }
    Ok(out)
}

/// Split-chain potential-scale-reduction statistic.
///
/// Each chain is split in half; the statistic compares between-half and
/// within-half variances and approaches 1 from above as the halves agree.
/// Fully degenerate input (every draw identical) returns 1; zero
/// within-chain variance with disagreeing means returns infinity.
///
/// Needs every chain to contribute at least 4 draws.
pub fn split_chain_psrf(chains: &[&[f64]]) -> Result<f64> {
    if chains.is_empty() {
        return Err(Error::EmptyChain);
    }
    let mut halves: Vec<&[f64]> = Vec::with_capacity(chains.len() * 2);
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0) / 2;
    if n < 2 {
        return Err(Error::ChainShape(format!(
            "scale-reduction needs at least 4 draws per chain, shortest has {}",
            chains.iter().map(|c| c.len()).min().unwrap_or(0)
        )));
    }
    for chain in chains {
        // Truncate to a common even length so every half has n draws.
        halves.push(&chain[..n]);
        halves.push(&chain[chain.len() - n..]);
    }
    let m = halves.len() as f64;
    let nf = n as f64;
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = nf / (m - 1.0) * means.iter().map(|x| (x - grand) * (x - grand)).sum::<f64>();
    let w = halves
        .iter()
        .zip(means.iter())
        .map(|(h, &mu)| h.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m;
    if w == 0.0 {
        return Ok(if b == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let var_plus = (nf - 1.0) / nf * w + b / nf;
    Ok((var_plus / w).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{run_seeded, ChainOutput, HyperParams};
    use crate::model::{ModelSpec, TimeSeries, Timestamp};
    use crate::synth::{generate_synthetic, SynthConfig, SyntheticKind};

    fn monthly_series(values: Vec<f64>) -> TimeSeries {
        TimeSeries::monthly_from(1980, 1, values).unwrap()
    }

    /// Chain of `n_draws` identical draws with the given per-t weight means.
    fn constant_chain(
        n_draws: usize,
        levels: &[f64],
        omega_y: &[f64],
        omega_level: &[f64],
        omega_slope: &[f64],
    ) -> ChainOutput {
        let t_len = omega_y.len();
        let mut thetas = Vec::new();
        let mut oy = Vec::new();
        let mut ot = Vec::new();
        for _ in 0..n_draws {
            thetas.push(levels[0]);
            thetas.push(0.0);
            for t in 0..t_len {
                thetas.push(levels[t]);
                thetas.push(0.0);
            }
            oy.extend_from_slice(omega_y);
            for t in 0..t_len {
                ot.push(omega_level[t]);
                ot.push(omega_slope[t]);
            }
        }
        ChainOutput::from_raw(
            HyperParams::default(),
            t_len,
            n_draws,
            thetas,
            oy,
            ot,
            vec![1.0; n_draws],
            vec![1.0; n_draws * 2],
            vec![1.0; n_draws],
            vec![1.0; n_draws * 2],
        )
        .unwrap()
    }

    #[test]
    fn all_unit_weights_flag_nothing() {
        let ones = vec![1.0; 6];
        let levels = vec![2.0; 6];
        let chain = constant_chain(4, &levels, &ones, &ones, &ones);
        let series = monthly_series(vec![2.0, 2.1, 1.9, 2.0, 2.2, 1.8]);
        let s = summarize(&chain, &series, 0.95, 0.5).unwrap();
        assert!(s.events.is_empty());
    }

    #[test]
    fn a_small_level_weight_is_flagged_as_a_rank_one_level_break() {
        let ones = vec![1.0; 6];
        let mut omega_level = vec![1.0; 6];
        omega_level[3] = 0.07095877;
        let levels = vec![2.0; 6];
        let chain = constant_chain(4, &levels, &ones, &omega_level, &ones);
        let series = monthly_series(vec![2.0, 2.1, 1.9, 2.0, 2.2, 1.8]);
        let s = summarize(&chain, &series, 0.95, 0.5).unwrap();
        assert_eq!(s.events.len(), 1);
        let e = &s.events[0];
        assert_eq!(e.kind, EventKind::LevelBreak);
        assert_eq!(e.rank, 1);
        assert_eq!(e.t_index, 3);
        assert_eq!(e.timestamp, Timestamp::monthly(1980, 4).unwrap());
        assert!((e.omega_mean - 0.07095877).abs() < 1e-12);
    }

    #[test]
    fn degenerate_chain_collapses_the_credible_band() {
        let ones = vec![1.0; 5];
        let levels = vec![3.0, 3.5, 2.5, 4.0, 3.2];
        let chain = constant_chain(8, &levels, &ones, &ones, &ones);
        let series = monthly_series(levels.clone());
        let s = summarize(&chain, &series, 0.9, 0.5).unwrap();
        for t in 0..5 {
            // The mean accumulates floating-point rounding that the exact
            // quantiles do not, so compare to within a few ulps.
            assert!((s.level.lower[t] - s.level.mean[t]).abs() < 1e-12);
            assert!((s.level.upper[t] - s.level.mean[t]).abs() < 1e-12);
            assert!(s.residuals[t].abs() < 1e-12);
        }
    }

    #[test]
    fn summarize_validates_its_inputs() {
        let ones = vec![1.0; 5];
        let levels = vec![1.0; 5];
        let chain = constant_chain(4, &levels, &ones, &ones, &ones);
        let series = monthly_series(vec![1.0; 5]);
        assert!(matches!(
            summarize(&chain, &series, 1.0, 0.5),
            Err(Error::InvalidLevel(_))
        ));
        assert!(matches!(
            summarize(&chain, &series, 0.95, 0.0),
            Err(Error::InvalidParameter {
                name: "threshold",
                ..
            })
        ));
        let longer = monthly_series(vec![1.0; 6]);
        assert!(matches!(
            summarize(&chain, &longer, 0.95, 0.5),
            Err(Error::ChainShape(_))
        ));
    }

    #[test]
    fn empty_chain_cannot_be_summarized() {
        let chain = ChainOutput::from_raw(
            HyperParams::default(),
            3,
            0,
            vec![],
            vec![],
            vec![],
            vec![],
            vec![],
            vec![],
            vec![],
        )
        .unwrap();
        let series = monthly_series(vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            summarize(&chain, &series, 0.95, 0.5),
            Err(Error::EmptyChain)
        ));
    }

    #[test]
    fn widening_the_level_widens_every_interval() {
        let series = monthly_series(vec![
            0.4, 1.1, 0.7, 1.8, 2.4, 1.9, 2.7, 3.3, 3.0, 3.9, 3.4, 4.2,
        ]);
        let (m0, c0) = crate::gibbs::default_initial_moments(&series).unwrap();
        let spec = ModelSpec::linear_growth(m0, c0).unwrap();
        let hp = HyperParams {
            n_burn: 100,
            n_iter: 400,
            seed: 77,
            ..HyperParams::default()
        };
        let chain = run_seeded(&spec, &series, &hp).unwrap();
        let narrow = summarize(&chain, &series, 0.5, 0.5).unwrap();
        let wide = summarize(&chain, &series, 0.95, 0.5).unwrap();
        let mut strictly = 0;
        for t in 0..series.len() {
            let wn = narrow.level.upper[t] - narrow.level.lower[t];
            let ww = wide.level.upper[t] - wide.level.lower[t];
            assert!(ww >= wn, "t={t}: {ww} < {wn}");
            if ww > wn {
                strictly += 1;
            }
            assert!(wide.level.lower[t] <= wide.level.mean[t]);
            assert!(wide.level.mean[t] <= wide.level.upper[t]);
        }
        assert!(strictly > 0);
    }

    #[test]
    fn near_deterministic_series_leaves_tiny_residuals() {
        // A straight line plus 1e-9 jitter, fitted with a prior that anchors
        // the precisions at 1e12 (near-zero variances): the fitted level must
        // track the data to far better than 1e-6.
        let t_len = 20;
        let mut rng_vals = Vec::with_capacity(t_len);
        let mut x = 0.0_f64;
        for t in 0..t_len {
            x += 0.5;
            // Deterministic "jitter" (a fixed irrational rotation) keeps the
            // test reproducible without an RNG.
            let jitter = 1e-9 * ((t as f64 * 0.7548776662466927).fract() - 0.5);
            rng_vals.push(x + jitter);
        }
        let series = monthly_series(rng_vals);
        let (m0, c0) = crate::gibbs::default_initial_moments(&series).unwrap();
        let spec = ModelSpec::linear_growth(m0, c0).unwrap();
        let hp = HyperParams {
            beta: 1e-12,
            n_burn: 50,
            n_iter: 100,
            seed: 5,
            ..HyperParams::default()
        };
        let chain = run_seeded(&spec, &series, &hp).unwrap();
        let s = summarize(&chain, &series, 0.95, 0.5).unwrap();
        for (t, r) in s.residuals.iter().enumerate() {
            assert!(r.abs() < 1e-6, "residual {r} at t={t}");
        }
    }

    #[test]
    fn ranked_weights_break_ties_toward_the_earlier_time() {
        let ones = vec![1.0; 5];
        let omega_y = vec![0.9, 0.3, 0.7, 0.3, 1.0];
        let levels = vec![1.0; 5];
        let chain = constant_chain(4, &levels, &omega_y, &ones, &ones);
        let series = monthly_series(vec![1.0, 1.3, 0.9, 1.1, 1.2]);
        let s = summarize(&chain, &series, 0.95, 0.5).unwrap();
        let ranked = rank_events(&s, 3).unwrap();
        let obs: Vec<&RankedWeight> = ranked
            .iter()
            .filter(|r| r.kind == EventKind::ObservationalOutlier)
            .collect();
        assert_eq!(obs.len(), 3);
        assert_eq!((obs[0].t_index, obs[0].rank), (1, 1));
        assert_eq!((obs[1].t_index, obs[1].rank), (3, 2));
        assert_eq!((obs[2].t_index, obs[2].rank), (2, 3));
        // The flagged events under 0.5 follow the same order.
        let flagged: Vec<&FlaggedEvent> = s
            .events
            .iter()
            .filter(|e| e.kind == EventKind::ObservationalOutlier)
            .collect();
        assert_eq!(flagged.len(), 2);
        assert_eq!(flagged[0].t_index, 1);
        assert_eq!(flagged[1].t_index, 3);

        // k beyond the series length truncates; k = 0 is rejected.
        let all = rank_events(&s, 50).unwrap();
        assert_eq!(all.len(), 15);
        assert!(rank_events(&s, 0).is_err());
    }

    #[test]
    fn injected_level_shift_ranks_first_across_replications() {
        let mut hits = 0;
        let n_reps = 20;
        for seed in 0..n_reps {
            let cfg = SynthConfig {
                seed,
                ..SynthConfig::new(SyntheticKind::LevelShift)
            };
            let (series, truth) = generate_synthetic(&cfg).unwrap();
            let (m0, c0) = crate::gibbs::default_initial_moments(&series).unwrap();
            let spec = ModelSpec::linear_growth(m0, c0).unwrap();
            let hp = HyperParams {
                n_burn: 300,
                n_iter: 900,
                seed: seed + 1000,
                nu: 8.0,
                nu_state: Some(10.0),
                beta: 3e-4,
                ..HyperParams::default()
            };
            let chain = run_seeded(&spec, &series, &hp).unwrap();
            let s = summarize(&chain, &series, 0.95, 0.5).unwrap();
            let ranked = rank_events(&s, 1).unwrap();
            let top_level = ranked
                .iter()
                .find(|r| r.kind == EventKind::LevelBreak)
                .unwrap();
            if top_level.t_index == truth.anomaly_index.unwrap() {
                hits += 1;
            }
        }
        assert!(
            hits >= 19,
            "level shift ranked first in only {hits}/{n_reps}"
        );
    }

    #[test]
    fn scale_reduction_statistic_behaves() {
        // Two long synthetic chains drawn around the same mean: statistic
        // near 1. Shifted copy: statistic well above 1.
        let a: Vec<f64> = (0..400).map(|i| ((i * 37 % 101) as f64) / 101.0).collect();
        let b: Vec<f64> = (0..400).map(|i| ((i * 53 % 103) as f64) / 103.0).collect();
        let same = split_chain_psrf(&[&a, &b]).unwrap();
        assert!((same - 1.0).abs() < 0.05, "{same}");
        let shifted: Vec<f64> = a.iter().map(|x| x + 5.0).collect();
        let apart = split_chain_psrf(&[&a, &shifted]).unwrap();
        assert!(apart > 2.0, "{apart}");
        // Degenerate draws: identical everywhere -> 1 by convention.
        let flat = vec![2.0; 16];
        assert_eq!(split_chain_psrf(&[&flat]).unwrap(), 1.0);
        // Too short to split.
        assert!(split_chain_psrf(&[&[1.0, 2.0, 3.0]]).is_err());
        assert!(split_chain_psrf(&[]).is_err());
    }
}
