//! Robust Bayesian trend decomposition for univariate time series.
//!
//! The model is a local linear growth state-space model — an observed series
//! `y_t` tracking a latent level with a latent slope — made robust by
//! heavy-tailed hierarchical priors on every noise variance. Each
//! observation and each state innovation carries its own scale-mixture
//! weight; the Gibbs sampler in [`gibbs`] learns all of them jointly with
//! the state path, and a posterior weight mean far below one singles out the
//! points the Gaussian core could not explain: one-off outliers
//! (observation side) or structural breaks in level or trend (state side).
//!
//! Module map:
//!
//! * [`model`] — timestamps, validated series, model matrices.
//! * [`kalman`] — forward filter, backward sampler, exact smoother.
//! * [`priors`] — scaled Beta2 laws, their samplers, heavy-tail marginals.
//! * [`gibbs`] — the sampler: full conditionals, sweeps, chain storage.
//! * [`diagnostics`] — posterior summaries, credible bands, flagged events.
//! * [`synth`] — simulated series with known injected anomalies.
//! * [`quad`] — adaptive quadrature used to cross-check the prior math.

pub mod diagnostics;
pub mod error;
pub mod gibbs;
pub mod kalman;
pub mod model;
pub mod priors;
pub mod quad;
pub mod synth;

pub use error::{Error, Result};
