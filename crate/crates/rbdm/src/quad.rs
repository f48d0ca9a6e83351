//! Double-exponential (tanh-sinh) quadrature.
//!
//! Used as a numeric reference for density normalization constants, moments,
//! and distribution functions. It deliberately shares nothing with the
//! closed-form density code it is used to check.
//!
//! The tanh-sinh rule maps `[a, b]` onto the real line via
//! `x = c + r * tanh(pi/2 * sinh(t))`, after which the trapezoid rule in `t`
//! converges geometrically even when the integrand has an integrable
//! singularity at an endpoint: the nodes approach the endpoints
//! double-exponentially fast but never reach them, and the weights decay
//! faster than any endpoint pole of integrable order can grow. The integrand
//! is assumed smooth in the interior; kinks away from the endpoints degrade
//! the rule to polynomial convergence.

use crate::error::{Error, Result};

/// No node is placed beyond `|t| = T_MAX`; past that point the weights
/// underflow to zero in double precision.
const T_MAX: f64 = 6.5;

/// Trapezoid spacing is halved at most this many times.
const MAX_LEVEL: u32 = 12;

/// Integrates `f` over the finite interval `[a, b]` to absolute tolerance
/// `tol`. Non-finite integrand values (e.g. an integrable endpoint pole) are
/// treated as zero; the affected nodes sit so close to the endpoints that
/// their true contribution is below rounding.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Quadrature(format!("bad interval [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Quadrature(format!("bad tolerance {tol}")));
    }
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let eval = |t: f64| {
        let s = std::f64::consts::FRAC_PI_2 * t.sinh();
        let sc = s.cosh();
        let weight = r * std::f64::consts::FRAC_PI_2 * t.cosh() / (sc * sc);
        if !weight.is_finite() || weight == 0.0 {
            return 0.0;
        }
        let y = f(c + r * s.tanh());
        if y.is_finite() {
            y * weight
        } else {
            0.0
        }
    };

    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1.0;
    while k * h <= T_MAX {
        sum += eval(k * h) + eval(-k * h);
        k += 1.0;
    }
    let mut previous = sum * h;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        // Nodes from earlier levels are the even multiples of the new h; only
        // the odd multiples are new.
        let mut j = 1.0;
        while j * h <= T_MAX {
            sum += eval(j * h) + eval(-j * h);
            j += 2.0;
        }
        let current = sum * h;
        if level >= 3 && (current - previous).abs() <= tol {
            return Ok(current);
        }
        previous = current;
    }
    Err(Error::Quadrature(format!(
        "no convergence to {tol} on [{a}, {b}]"
    )))
}

/// Integrates `f` over `(0, inf)` using the substitution `x = (v/(1-v))^2`,
/// which removes integrable endpoint poles up to `x^(-1/2)` at the origin and
/// maps the half line onto `(0, 1)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<f64> {
    integrate(
        |v| {
            let om = 1.0 - v;
            if v <= 0.0 || om <= 0.0 {
                return 0.0;
            }
            let x = (v / om) * (v / om);
            f(x) * 2.0 * v / (om * om * om)
        },
        0.0,
        1.0,
        tol,
    )
}
