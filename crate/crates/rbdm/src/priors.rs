//! Scaled Beta2 priors and the heavy-tailed marginals they induce.
//!
//! The scaled Beta2 family is used as a prior on precisions (equivalently,
//! variances). Both parameterizations appear in the literature and they are
//! kept as two distinct named densities here rather than collapsed into one:
//!
//! * [`beta2_precision_density`], for a precision `lambda`:
//!
//!   ```text
//!   pi(lambda) = C(p,q) * beta * (beta*lambda)^(q-1) / (1 + beta*lambda)^(p+q)
//!   ```
//!
//! * [`beta2_variance_density`], for a variance `tau^2`:
//!
//!   ```text
//!   pi(tau^2) = C(p,q) * (1/beta) * (tau^2/beta)^(p-1) / (1 + tau^2/beta)^(p+q)
//!   ```
//!
//! with `C(p,q) = Gamma(p+q) / (Gamma(p) Gamma(q))`. The two are change-of-
//! variable images of each other: if `tau^2` follows the variance form with
//! `(p, q, beta)` then `lambda = 1/tau^2` follows the precision form with the
//! same `(p, q, beta)`; equivalently, the precision form at `(p, q, beta)`
//! equals the variance form at `(q, p, 1/beta)`.
//!
//! [`beta2_sample`] draws from the variance form through its gamma-ratio
//! representation: `rho ~ Gamma(shape q, scale 1)` followed by
//! `tau^2 | rho ~ Gamma(shape p, scale beta/rho)`.
//!
//! With `p = q = nu = 1` the induced marginal of a location parameter under a
//! normal-variance mixture is available in closed form
//! ([`stb2_density_1111`]); its tails are heavier than the standard Cauchy's.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Variance of the normal reference density used in tail comparisons, chosen
/// to match the interquartile range of the unit-scale closed-form marginal.
pub const IQR_MATCHED_NORMAL_VARIANCE: f64 = 2.19;

/// Parameters `(p, q, beta)` of a scaled Beta2 distribution; all must be
/// finite and strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta2Params {
    p: f64,
    q: f64,
    beta: f64,
}

impl Beta2Params {
    pub fn new(p: f64, q: f64, beta: f64) -> Result<Self> {
        for (name, value) in [("p", p), ("q", q), ("beta", beta)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: match name {
                        "p" => "p",
                        "q" => "q",
                        _ => "beta",
                    },
                    requirement: "finite and strictly positive",
                    value,
                });
            }
        }
        Ok(Beta2Params { p, q, beta })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `Gamma(p+q) / (Gamma(p) Gamma(q))`.
    fn norm_const(&self) -> f64 {
        (ln_gamma(self.p + self.q) - ln_gamma(self.p) - ln_gamma(self.q)).exp()
    }
}

/// Scaled Beta2 density in its precision parameterization, evaluated at
/// `lambda >= 0`.
///
/// For `q < 1` the density diverges as `lambda -> 0`; evaluation exactly at
/// zero is reported as an error instead of returning an infinity.
pub fn beta2_precision_density(lambda: f64, params: &Beta2Params) -> Result<f64> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::NegativeDensityArgument(lambda));
    }
    if lambda == 0.0 && params.q < 1.0 {
        return Err(Error::DensityPole {
            shape: "q",
            value: params.q,
        });
    }
    let bl = params.beta * lambda;
    Ok(params.norm_const() * params.beta * bl.powf(params.q - 1.0)
        / (1.0 + bl).powf(params.p + params.q))
}

/// Scaled Beta2 density in its variance parameterization, evaluated at
/// `x >= 0`.
///
/// For `p < 1` the density diverges as `x -> 0`; evaluation exactly at zero
/// is reported as an error instead of returning an infinity.
pub fn beta2_variance_density(x: f64, params: &Beta2Params) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::NegativeDensityArgument(x));
    }
    if x == 0.0 && params.p < 1.0 {
        return Err(Error::DensityPole {
            shape: "p",
            value: params.p,
        });
    }
    let xb = x / params.beta;
    Ok(params.norm_const() / params.beta * xb.powf(params.p - 1.0)
        / (1.0 + xb).powf(params.p + params.q))
}

/// Draws a variance from the scaled Beta2 law via its gamma-ratio
/// representation: `rho ~ Gamma(shape q, scale 1)`, then
/// `tau^2 | rho ~ Gamma(shape p, scale beta/rho)`.
pub fn beta2_sample<R: Rng + ?Sized>(params: &Beta2Params, rng: &mut R) -> f64 {
    let rho = Gamma::new(params.q, 1.0)
        .expect("validated shape")
        .sample(rng)
        .max(f64::MIN_POSITIVE);
    Gamma::new(params.p, params.beta / rho)
        .expect("validated shape and scale")
        .sample(rng)
        .max(f64::MIN_POSITIVE)
}

/// Draws `Gamma(shape, rate)`.
///
/// This is the single place where the rate convention used by the model's
/// conditional distributions is converted to the scale convention of the
/// underlying sampler (`scale = 1/rate`). Draws are clamped away from exact
/// zero so downstream reciprocals stay finite.
pub fn sample_gamma_rate<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0 && rate > 0.0, "shape={shape} rate={rate}");
    Gamma::new(shape, 1.0 / rate)
        .expect("positive shape and scale")
        .sample(rng)
        .max(f64::MIN_POSITIVE)
}

/// Closed-form marginal density of a location parameter under the unit
/// shape settings of the hierarchy (all shape parameters equal to one), with
/// scale `beta`:
///
/// ```text
///   pi(theta) = 1 / (2 sqrt(beta) (1 + |theta - mu| / sqrt(beta))^2)
/// ```
pub fn stb2_density_1111(theta: f64, mu: f64, beta: f64) -> Result<f64> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "beta",
            requirement: "finite and strictly positive",
            value: beta,
        });
    }
    if !theta.is_finite() || !mu.is_finite() {
        return Err(Error::NegativeDensityArgument(theta));
    }
    let s = beta.sqrt();
    let z = 1.0 + (theta - mu).abs() / s;
    Ok(1.0 / (2.0 * s * z * z))
}

/// Standard Cauchy density.
pub fn cauchy_density(theta: f64) -> f64 {
    1.0 / (std::f64::consts::PI * (1.0 + theta * theta))
}

/// Zero-mean normal density with the given variance.
pub fn normal_density(theta: f64, variance: f64) -> f64 {
    (-0.5 * theta * theta / variance).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

/// One row of the tail comparison table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRow {
    pub theta: f64,
    /// Closed-form heavy-tailed marginal, centered at zero with scale `beta`.
    pub stb2: f64,
    /// Standard Cauchy density.
    pub cauchy: f64,
    /// Normal density with [`IQR_MATCHED_NORMAL_VARIANCE`].
    pub normal: f64,
}

/// Evaluates the closed-form marginal, the standard Cauchy, and the
/// IQR-matched normal on the given grid.
pub fn tail_comparison_table(grid: &[f64], beta: f64) -> Result<Vec<TailRow>> {
    grid.iter()
        .map(|&theta| {
            Ok(TailRow {
                theta,
                stb2: stb2_density_1111(theta, 0.0, beta)?,
                cauchy: cauchy_density(theta),
                normal: normal_density(theta, IQR_MATCHED_NORMAL_VARIANCE),
            })
        })
        .collect()
}
