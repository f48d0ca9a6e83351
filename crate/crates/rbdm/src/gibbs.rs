//! Gibbs sampler for the robust local linear growth model.
//!
//! The sampler alternates a forward-filtering backward-sampling draw of the
//! state path with conjugate updates of the variance hierarchy. Writing
//! `e_t = y_t - F theta_t` for the observation residuals and
//! `d_{t,i} = theta_{t,i} - (G theta_{t-1})_i` for the state innovations,
//! the full conditionals are
//!
//! ```text
//!   lambda_y      ~ Gamma(q + T/2,    rate: (1/2) sum_t omega_{y,t} e_t^2 + beta rho_y)
//!   lambda_{th,i} ~ Gamma(q + T/2,    rate: (1/2) sum_t omega_{th,t,i} d_{t,i}^2 + beta rho_{th,i})
//!   omega_{y,t}   ~ Gamma((nu+1)/2,   rate: (nu + lambda_y e_t^2) / 2)
//!   omega_{th,t,i}~ Gamma((nu+1)/2,   rate: (nu + lambda_{th,i} d_{t,i}^2) / 2)
//!   rho_*         ~ Gamma(p + q,      rate: beta lambda_* + 1)
//! ```
//!
//! All second Gamma arguments above are RATES; the single point where this
//! convention meets the shape/scale convention of the underlying random
//! number generator is [`crate::priors::sample_gamma_rate`]. The reading is
//! forced by a degeneracy check: with no data (`T = 0`) the `lambda_y`
//! conditional must collapse to its prior, a Gamma with mean `q / (beta
//! rho_y)`, which happens under the rate reading and not under the scale
//! reading.
//!
//! Each local weight divides its variance — `V_t = 1 / (lambda_y
//! omega_{y,t})` and `W_{t,i} = 1 / (lambda_{th,i} omega_{th,t,i})` — so a
//! posterior weight far below one marks a point the model could only explain
//! by locally inflating a variance: an outlier (observation equation) or a
//! structural break (state equation).
//!
//! A sweep updates, in order: (1) the per-time variance sequences from the
//! current precisions and weights, (2) the state path by FFBS, (3) the local
//! weights, (4) the global precisions, (5) the mixing variables. The state
//! hierarchy uses one mixing variable per state component; a per-time mixing
//! variable would never appear in any likelihood term.

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::{
    ffbs_sample, kalman_filter, sample_mvn, smoother_oracle, Dlm, VarianceSequences,
};
use crate::model::{ModelSpec, TimeSeries};
use crate::priors::sample_gamma_rate;

/// Everything the sampler needs besides the data: the Student-t degrees of
/// freedom `nu`, the Beta2 shapes `p`, `q` and scale `beta`, and the run
/// schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Degrees of freedom of the Student-t scale mixture (observation side;
    /// also the state side unless [`HyperParams::nu_state`] is set).
    pub nu: f64,
    /// First Beta2 shape parameter.
    pub p: f64,
    /// Second Beta2 shape parameter.
    pub q: f64,
    /// Beta2 scale parameter (the conditionals use the product `beta * rho`).
    pub beta: f64,
    /// Post-burn-in sweeps.
    pub n_iter: usize,
    /// Burn-in sweeps, discarded.
    pub n_burn: usize,
    /// Thinning stride: every `thin`-th post-burn-in sweep is retained.
    pub thin: usize,
    /// Seed used by callers that construct their own generator.
    pub seed: u64,
    /// Optional separate degrees of freedom for the state-side mixture;
    /// `None` shares `nu` between both hierarchies.
    pub nu_state: Option<f64>,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            nu: 4.0,
            p: 1.0,
            q: 1.0,
            beta: 1e-4,
            n_iter: 30_000,
            n_burn: 10_000,
            thin: 1,
            seed: 0,
            nu_state: None,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("nu", self.nu),
            ("p", self.p),
            ("q", self.q),
            ("beta", self.beta),
            ("nu_state", self.nu_state.unwrap_or(self.nu)),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    requirement: "finite and strictly positive",
                    value,
                });
            }
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter {
                name: "thin",
                requirement: "at least 1",
                value: 0.0,
            });
        }
        Ok(())
    }

    /// Degrees of freedom governing the state-side weights.
    pub fn state_nu(&self) -> f64 {
        self.nu_state.unwrap_or(self.nu)
    }
}

/// Current values of every unobserved quantity the sampler cycles through.
///
/// `theta` holds the pre-sample state at index 0, so `theta[t]` pairs with
/// observation `t - 1` (0-based) and `omega_*[t - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// State path `theta_0, ..., theta_T` (level, slope).
    pub theta: Vec<Vector2<f64>>,
    /// Global observational precision.
    pub lambda_y: f64,
    /// Global state precisions (level, slope).
    pub lambda_theta: [f64; 2],
    /// Per-time observational weights, length `T`.
    pub omega_y: Vec<f64>,
    /// Per-time state weights, length `T`.
    pub omega_theta: Vec<[f64; 2]>,
    /// Beta2 mixing variable of the observational precision.
    pub rho_y: f64,
    /// Beta2 mixing variables of the state precisions.
    pub rho_theta: [f64; 2],
}

fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Diffuse default prior moments for the pre-sample state: mean at the first
/// observation with zero slope, covariance `diag(10^7 Var(y), 10^7 Var(dy))`.
pub fn default_initial_moments(series: &TimeSeries) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    let y = series.values();
    if y.len() < 3 {
        return Err(Error::SeriesTooShort {
            min: 3,
            got: y.len(),
        });
    }
    let diffs: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let var_y = sample_variance(y);
    let var_dy = sample_variance(&diffs);
    if var_y <= 0.0 || var_dy <= 0.0 {
        return Err(Error::ConstantSeries);
    }
    Ok((
        Vector2::new(y[0], 0.0),
        Matrix2::new(1e7 * var_y, 0.0, 0.0, 1e7 * var_dy),
    ))
}

/// Initializes a chain: all global precisions are set to the reciprocal
/// sample variance of the first differences of `y`, all weights to one, the
/// mixing variables are drawn from their `Gamma(p, 1)` priors, and the state
/// path is set to one smoothing pass under those starting variances.
///
/// Requires at least three observations (two first differences); a series
/// whose first differences have zero sample variance cannot seed the
/// precisions and is rejected.
pub fn init_chain<R: Rng + ?Sized>(
    model: &Dlm<2>,
    series: &TimeSeries,
    hp: &HyperParams,
    rng: &mut R,
) -> Result<ChainState> {
    hp.validate()?;
    let y = series.values();
    if y.len() < 3 {
        return Err(Error::SeriesTooShort {
            min: 3,
            got: y.len(),
        });
    }
    let diffs: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let var_dy = sample_variance(&diffs);
    if var_dy <= 0.0 || !var_dy.is_finite() {
        return Err(Error::ConstantSeries);
    }
    let lambda = 1.0 / var_dy;

    let rho_y = sample_gamma_rate(hp.p, 1.0, rng);
    let rho_theta = [
        sample_gamma_rate(hp.p, 1.0, rng),
        sample_gamma_rate(hp.p, 1.0, rng),
    ];

    let vars = VarianceSequences::constant(
        1.0 / lambda,
        Vector2::new(1.0 / lambda, 1.0 / lambda),
        y.len(),
    )?;
    let filt = kalman_filter(model, y, &vars)?;
    let smooth = smoother_oracle(model, &filt)?;

    Ok(ChainState {
        theta: smooth.mean,
        lambda_y: lambda,
        lambda_theta: [lambda, lambda],
        omega_y: vec![1.0; y.len()],
        omega_theta: vec![[1.0, 1.0]; y.len()],
        rho_y,
        rho_theta,
    })
}

/// Weighted sum of squared observation residuals,
/// `sum_t omega_{y,t} (y_t - F theta_t)^2`.
pub fn obs_weighted_ss(state: &ChainState, series: &TimeSeries, model: &Dlm<2>) -> f64 {
    series
        .values()
        .iter()
        .zip(state.theta.iter().skip(1))
        .zip(state.omega_y.iter())
        .map(|((&y, th), &w)| {
            let e = y - (model.f * th)[0];
            w * e * e
        })
        .sum()
}

/// Weighted sum of squared state innovations for one component,
/// `sum_t omega_{th,t,i} (theta_{t,i} - (G theta_{t-1})_i)^2`.
pub fn state_weighted_ss(state: &ChainState, model: &Dlm<2>, component: usize) -> f64 {
    state
        .theta
        .windows(2)
        .zip(state.omega_theta.iter())
        .map(|(pair, w)| {
            let d = pair[1][component] - (model.g * pair[0])[component];
            w[component] * d * d
        })
        .sum()
}

/// Draws a global precision from its conditional,
/// `Gamma(q + n/2, rate: ss/2 + beta_rho)`.
///
/// With no data (`n = 0`, `weighted_ss = 0`) this is exactly the prior
/// `Gamma(q, rate: beta_rho)`.
pub fn draw_global_precision<R: Rng + ?Sized>(
    q: f64,
    n_terms: usize,
    weighted_ss: f64,
    beta_rho: f64,
    rng: &mut R,
) -> f64 {
    sample_gamma_rate(q + n_terms as f64 / 2.0, 0.5 * weighted_ss + beta_rho, rng)
}

/// Draws one scale-mixture weight from its conditional,
/// `Gamma((nu+1)/2, rate: (nu + lambda * residual^2)/2)`.
///
/// A zero residual gives mean `(nu+1)/nu`, slightly above one; the
/// conditional mean decreases strictly in the squared residual, which is
/// what pushes the weight of a poorly fit point toward zero.
pub fn draw_mixture_weight<R: Rng + ?Sized>(
    nu: f64,
    lambda: f64,
    residual_sq: f64,
    rng: &mut R,
) -> f64 {
    sample_gamma_rate((nu + 1.0) / 2.0, (nu + lambda * residual_sq) / 2.0, rng)
}

/// Draws the observational global precision given the state path and
/// weights.
pub fn draw_lambda_y<R: Rng + ?Sized>(
    state: &ChainState,
    series: &TimeSeries,
    model: &Dlm<2>,
    hp: &HyperParams,
    rng: &mut R,
) -> f64 {
    let ss = obs_weighted_ss(state, series, model);
    draw_global_precision(hp.q, series.len(), ss, hp.beta * state.rho_y, rng)
}

/// Draws the full vector of observational weights given the state path and
/// `lambda_y`.
pub fn draw_omega_y<R: Rng + ?Sized>(
    state: &ChainState,
    series: &TimeSeries,
    model: &Dlm<2>,
    hp: &HyperParams,
    rng: &mut R,
) -> Vec<f64> {
    series
        .values()
        .iter()
        .zip(state.theta.iter().skip(1))
        .map(|(&y, th)| {
            let e = y - (model.f * th)[0];
            draw_mixture_weight(hp.nu, state.lambda_y, e * e, rng)
        })
        .collect()
}

/// Draws the global precision of one state component (0 = level, 1 = slope)
/// given the state path and weights.
pub fn draw_lambda_theta<R: Rng + ?Sized>(
    state: &ChainState,
    model: &Dlm<2>,
    hp: &HyperParams,
    rng: &mut R,
    component: usize,
) -> f64 {
    let ss = state_weighted_ss(state, model, component);
    draw_global_precision(
        hp.q,
        state.omega_theta.len(),
        ss,
        hp.beta * state.rho_theta[component],
        rng,
    )
}

/// Draws the full `T x 2` array of state weights given the state path and
/// `lambda_theta`.
pub fn draw_omega_theta<R: Rng + ?Sized>(
    state: &ChainState,
    model: &Dlm<2>,
    hp: &HyperParams,
    rng: &mut R,
) -> Vec<[f64; 2]> {
    let nu = hp.state_nu();
    state
        .theta
        .windows(2)
        .map(|pair| {
            let mut row = [0.0; 2];
            for (i, slot) in row.iter_mut().enumerate() {
                let d = pair[1][i] - (model.g * pair[0])[i];
                *slot = draw_mixture_weight(nu, state.lambda_theta[i], d * d, rng);
            }
            row
        })
        .collect()
}

/// Draws the Beta2 mixing variables `(rho_y, rho_theta)` given the current
/// precisions; each is `Gamma(p + q, rate: beta lambda + 1)`.
pub fn draw_rho<R: Rng + ?Sized>(
    state: &ChainState,
    hp: &HyperParams,
    rng: &mut R,
) -> (f64, [f64; 2]) {
    let shape = hp.p + hp.q;
    let rho_y = sample_gamma_rate(shape, hp.beta * state.lambda_y + 1.0, rng);
    let rho_theta = [
        sample_gamma_rate(shape, hp.beta * state.lambda_theta[0] + 1.0, rng),
        sample_gamma_rate(shape, hp.beta * state.lambda_theta[1] + 1.0, rng),
    ];
    (rho_y, rho_theta)
}

/// One full Gibbs sweep, in place. `iteration` only labels errors.
///
/// Order: rebuild the variance sequences from the current precisions and
/// weights, redraw the state path by FFBS, then the weights, then the global
/// precisions, then the mixing variables.
pub fn sweep<R: Rng + ?Sized>(
    state: &mut ChainState,
    model: &Dlm<2>,
    series: &TimeSeries,
    hp: &HyperParams,
    rng: &mut R,
    iteration: usize,
) -> Result<()> {
    let wrap = |step: &'static str| {
        move |source: Error| Error::SweepFailed {
            iteration,
            step,
            source: Box::new(source),
        }
    };

    let v: Vec<f64> = state
        .omega_y
        .iter()
        .map(|&w| 1.0 / (state.lambda_y * w))
        .collect();
    let w: Vec<Vector2<f64>> = state
        .omega_theta
        .iter()
        .map(|row| {
            Vector2::new(
                1.0 / (state.lambda_theta[0] * row[0]),
                1.0 / (state.lambda_theta[1] * row[1]),
            )
        })
        .collect();
    let vars = VarianceSequences::new(v, w).map_err(wrap("variance-rebuild"))?;

    let filt = kalman_filter(model, series.values(), &vars).map_err(wrap("kalman-filter"))?;
    state.theta = ffbs_sample(model, &filt, rng).map_err(wrap("state-draw"))?;

    state.omega_y = draw_omega_y(state, series, model, hp, rng);
    state.omega_theta = draw_omega_theta(state, model, hp, rng);
    state.lambda_y = draw_lambda_y(state, series, model, hp, rng);
    state.lambda_theta = [
        draw_lambda_theta(state, model, hp, rng, 0),
        draw_lambda_theta(state, model, hp, rng, 1),
    ];
    let (rho_y, rho_theta) = draw_rho(state, hp, rng);
    state.rho_y = rho_y;
    state.rho_theta = rho_theta;
    Ok(())
}

/// Retained draws of one chain, stored as flat row-major buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    hp: HyperParams,
    t_len: usize,
    n_draws: usize,
    /// `n_draws x (t_len + 1) x 2`, state path per draw.
    thetas: Vec<f64>,
    /// `n_draws x t_len`.
    omega_y: Vec<f64>,
    /// `n_draws x t_len x 2`.
    omega_theta: Vec<f64>,
    /// `n_draws`.
    lambda_y: Vec<f64>,
    /// `n_draws x 2`.
    lambda_theta: Vec<f64>,
    /// `n_draws`.
    rho_y: Vec<f64>,
    /// `n_draws x 2`.
    rho_theta: Vec<f64>,
}

impl ChainOutput {
    /// Builds a chain from raw buffers, validating every length against
    /// `t_len` and `n_draws`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_raw(
        hp: HyperParams,
        t_len: usize,
        n_draws: usize,
        thetas: Vec<f64>,
        omega_y: Vec<f64>,
        omega_theta: Vec<f64>,
        lambda_y: Vec<f64>,
        lambda_theta: Vec<f64>,
        rho_y: Vec<f64>,
        rho_theta: Vec<f64>,
    ) -> Result<Self> {
        let checks = [
            ("thetas", thetas.len(), n_draws * (t_len + 1) * 2),
            ("omega_y", omega_y.len(), n_draws * t_len),
            ("omega_theta", omega_theta.len(), n_draws * t_len * 2),
            ("lambda_y", lambda_y.len(), n_draws),
            ("lambda_theta", lambda_theta.len(), n_draws * 2),
            ("rho_y", rho_y.len(), n_draws),
            ("rho_theta", rho_theta.len(), n_draws * 2),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::ChainShape(format!(
                    "{name} has {got} entries, expected {want} \
                     (t_len={t_len}, n_draws={n_draws})"
                )));
            }
        }
        Ok(ChainOutput {
            hp,
            t_len,
            n_draws,
            thetas,
            omega_y,
            omega_theta,
            lambda_y,
            lambda_theta,
            rho_y,
            rho_theta,
        })
    }

    /// Concatenates several chains over the same series into one pooled
    /// chain (draws stacked in argument order).
    pub fn pooled(chains: Vec<ChainOutput>) -> Result<ChainOutput> {
        let mut iter = chains.into_iter();
        let mut pooled = iter.next().ok_or(Error::EmptyChain)?;
        for chain in iter {
            if chain.t_len != pooled.t_len {
                return Err(Error::ChainShape(format!(
                    "cannot pool chains over different series lengths: {} vs {}",
                    pooled.t_len, chain.t_len
                )));
            }
            pooled.n_draws += chain.n_draws;
            pooled.thetas.extend_from_slice(&chain.thetas);
            pooled.omega_y.extend_from_slice(&chain.omega_y);
            pooled.omega_theta.extend_from_slice(&chain.omega_theta);
            pooled.lambda_y.extend_from_slice(&chain.lambda_y);
            pooled.lambda_theta.extend_from_slice(&chain.lambda_theta);
            pooled.rho_y.extend_from_slice(&chain.rho_y);
            pooled.rho_theta.extend_from_slice(&chain.rho_theta);
        }
        Ok(pooled)
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hp
    }

    /// Number of observations in the fitted series.
    pub fn t_len(&self) -> usize {
        self.t_len
    }

    /// Number of retained draws.
    pub fn n_draws(&self) -> usize {
        self.n_draws
    }

    /// Level component of draw `d` at state index `t` (`0..=t_len`; index 0
    /// is the pre-sample state).
    pub fn level(&self, d: usize, t: usize) -> f64 {
        self.thetas[(d * (self.t_len + 1) + t) * 2]
    }

    /// Slope component of draw `d` at state index `t` (`0..=t_len`).
    pub fn slope(&self, d: usize, t: usize) -> f64 {
        self.thetas[(d * (self.t_len + 1) + t) * 2 + 1]
    }

    /// Observational weight of draw `d` at observation index `t`
    /// (`0..t_len`).
    pub fn omega_y(&self, d: usize, t: usize) -> f64 {
        self.omega_y[d * self.t_len + t]
    }

    /// State weight of draw `d` at observation index `t`, component `i`
    /// (0 = level, 1 = slope).
    pub fn omega_theta(&self, d: usize, t: usize, i: usize) -> f64 {
        self.omega_theta[(d * self.t_len + t) * 2 + i]
    }

    pub fn lambda_y(&self, d: usize) -> f64 {
        self.lambda_y[d]
    }

    pub fn lambda_theta(&self, d: usize, i: usize) -> f64 {
        self.lambda_theta[d * 2 + i]
    }

    pub fn rho_y(&self, d: usize) -> f64 {
        self.rho_y[d]
    }

    pub fn rho_theta(&self, d: usize, i: usize) -> f64 {
        self.rho_theta[d * 2 + i]
    }

    /// All retained `lambda_y` draws.
    pub fn lambda_y_draws(&self) -> &[f64] {
        &self.lambda_y
    }

    /// All retained draws of one `lambda_theta` component, copied out of the
    /// interleaved buffer.
    pub fn lambda_theta_draws(&self, i: usize) -> Vec<f64> {
        (0..self.n_draws).map(|d| self.lambda_theta(d, i)).collect()
    }

    fn mean_over_draws(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.n_draws).map(f).sum::<f64>() / self.n_draws as f64
    }

    /// Posterior mean of `omega_{y,t}`.
    pub fn mean_omega_y(&self, t: usize) -> f64 {
        self.mean_over_draws(|d| self.omega_y(d, t))
    }

    /// Posterior mean of `omega_{theta,t,i}`.
    pub fn mean_omega_theta(&self, t: usize, i: usize) -> f64 {
        self.mean_over_draws(|d| self.omega_theta(d, t, i))
    }

    /// Posterior mean of the level at state index `t` (`0..=t_len`).
    pub fn mean_level(&self, t: usize) -> f64 {
        self.mean_over_draws(|d| self.level(d, t))
    }

    /// Posterior mean of the slope at state index `t` (`0..=t_len`).
    pub fn mean_slope(&self, t: usize) -> f64 {
        self.mean_over_draws(|d| self.slope(d, t))
    }
}

/// Runs one chain: initialization, `n_burn + n_iter` sweeps, and retention
/// of every `thin`-th post-burn-in draw (`n_iter / thin` draws total).
///
/// The model must have state dimension 2 (level and slope). Identical seed,
/// inputs, and hyperparameters reproduce the output bit for bit.
pub fn run_gibbs<R: Rng + ?Sized>(
    spec: &ModelSpec,
    series: &TimeSeries,
    hp: &HyperParams,
    rng: &mut R,
) -> Result<ChainOutput> {
    hp.validate()?;
    let model = spec.to_fixed::<2>()?;
    let t_len = series.len();
    let n_keep = hp.n_iter / hp.thin;

    let mut state = init_chain(&model, series, hp, rng)?;

    let mut out = ChainOutput {
        hp: *hp,
        t_len,
        n_draws: 0,
        thetas: Vec::with_capacity(n_keep * (t_len + 1) * 2),
        omega_y: Vec::with_capacity(n_keep * t_len),
        omega_theta: Vec::with_capacity(n_keep * t_len * 2),
        lambda_y: Vec::with_capacity(n_keep),
        lambda_theta: Vec::with_capacity(n_keep * 2),
        rho_y: Vec::with_capacity(n_keep),
        rho_theta: Vec::with_capacity(n_keep * 2),
    };

    for it in 0..hp.n_burn + hp.n_iter {
        sweep(&mut state, &model, series, hp, rng, it)?;
        if it >= hp.n_burn && (it - hp.n_burn + 1) % hp.thin == 0 {
            out.n_draws += 1;
            for th in &state.theta {
                out.thetas.push(th[0]);
                out.thetas.push(th[1]);
            }
            out.omega_y.extend_from_slice(&state.omega_y);
            for row in &state.omega_theta {
                out.omega_theta.extend_from_slice(row);
            }
            out.lambda_y.push(state.lambda_y);
            out.lambda_theta.extend_from_slice(&state.lambda_theta);
            out.rho_y.push(state.rho_y);
            out.rho_theta.extend_from_slice(&state.rho_theta);
        }
    }
    debug_assert_eq!(out.n_draws, n_keep);
    Ok(out)
}

/// Convenience wrapper that seeds a deterministic generator from
/// `hp.seed` and runs one chain.
pub fn run_seeded(spec: &ModelSpec, series: &TimeSeries, hp: &HyperParams) -> Result<ChainOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    run_gibbs(spec, series, hp, &mut rng)
}

/// Successive-conditional correctness check: starting from an exact joint
/// draw of `(parameters, states, data)` from the model, alternately applies
/// one full Gibbs sweep and a redraw of the data from the observation
/// equation. If every conditional in [`sweep`] is correct, this Markov chain
/// leaves the prior invariant, so the transform `u = beta lambda_y / (1 +
/// beta lambda_y)` — a Beta(q, p) variable under the prior — is exactly
/// Uniform(0, 1) at every retained step when `p = q = 1`.
///
/// Returns `n_sweeps / thin` retained values of `u`. Any departure of their
/// empirical distribution from uniform beyond sampling noise indicates an
/// error in one of the full conditionals, in FFBS, or in the sweep wiring.
pub fn successive_conditional_uniforms(
    t_len: usize,
    n_sweeps: usize,
    thin: usize,
    hp: &HyperParams,
    seed: u64,
) -> Result<Vec<f64>> {
    hp.validate()?;
    if t_len < 2 {
        return Err(Error::SeriesTooShort { min: 2, got: t_len });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = ModelSpec::linear_growth(Vector2::zeros(), Matrix2::identity())?;
    let model = spec.to_fixed::<2>()?;

    // Joint draw from the prior: mixing variables, precisions, weights,
    // then states propagated through the transition equation.
    let rho_y = sample_gamma_rate(hp.p, 1.0, &mut rng);
    let rho_theta = [
        sample_gamma_rate(hp.p, 1.0, &mut rng),
        sample_gamma_rate(hp.p, 1.0, &mut rng),
    ];
    let lambda_y = sample_gamma_rate(hp.q, hp.beta * rho_y, &mut rng);
    let lambda_theta = [
        sample_gamma_rate(hp.q, hp.beta * rho_theta[0], &mut rng),
        sample_gamma_rate(hp.q, hp.beta * rho_theta[1], &mut rng),
    ];
    let omega_y: Vec<f64> = (0..t_len)
        .map(|_| sample_gamma_rate(hp.nu / 2.0, hp.nu / 2.0, &mut rng))
        .collect();
    let snu = hp.state_nu();
    let omega_theta: Vec<[f64; 2]> = (0..t_len)
        .map(|_| {
            [
                sample_gamma_rate(snu / 2.0, snu / 2.0, &mut rng),
                sample_gamma_rate(snu / 2.0, snu / 2.0, &mut rng),
            ]
        })
        .collect();
    let mut theta = Vec::with_capacity(t_len + 1);
    theta.push(sample_mvn(&model.m0, &model.c0, &mut rng));
    for t in 0..t_len {
        let mut next = model.g * theta[t];
        for i in 0..2 {
            let sd = (1.0 / (lambda_theta[i] * omega_theta[t][i])).sqrt();
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            next[i] += sd * z;
        }
        theta.push(next);
    }
    let mut state = ChainState {
        theta,
        lambda_y,
        lambda_theta,
        omega_y,
        omega_theta,
        rho_y,
        rho_theta,
    };

    let redraw_data = |state: &ChainState, rng: &mut ChaCha8Rng| -> Result<TimeSeries> {
        let values: Vec<f64> = (0..t_len)
            .map(|t| {
                let sd = (1.0 / (state.lambda_y * state.omega_y[t])).sqrt();
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                (model.f * state.theta[t + 1])[0] + sd * z
            })
            .collect();
        TimeSeries::monthly_from(1980, 1, values)
    };

    let mut us = Vec::with_capacity(n_sweeps / thin.max(1));
    let mut series = redraw_data(&state, &mut rng)?;
    for it in 0..n_sweeps {
        sweep(&mut state, &model, &series, hp, &mut rng, it)?;
        series = redraw_data(&state, &mut rng)?;
        if (it + 1) % thin.max(1) == 0 {
            let bl = hp.beta * state.lambda_y;
            us.push(bl / (1.0 + bl));
        }
    }
    Ok(us)
}
