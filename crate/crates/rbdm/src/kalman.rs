//! Kalman filtering, backward sampling, and fixed-interval smoothing for
//! univariate-observation dynamic linear models.
//!
//! Forward recursion, starting from `m_0 = m0`, `C_0 = C0`:
//!
//! ```text
//!   a_t = G m_{t-1}            R_t = G C_{t-1} G' + W_t
//!   f_t = F a_t                Q_t = F R_t F' + V_t
//!   e_t = y_t - f_t            A_t = R_t F' / Q_t
//!   m_t = a_t + A_t e_t        C_t = R_t - A_t A_t' Q_t
//! ```
//!
//! Backward pass, shared by the sampler and the smoother:
//!
//! ```text
//!   B_t = C_t G' R_{t+1}^{-1}
//! ```
//!
//! [`ffbs_sample`] draws `theta_T ~ N(m_T, C_T)` and then, for
//! `t = T-1, ..., 0`, draws from `N(m_t + B_t (theta_{t+1} - a_{t+1}),
//! C_t - B_t R_{t+1} B_t')`. [`smoother_oracle`] runs the same recursion on
//! moments instead of draws, yielding `E(theta_t | y_{1:T})` and
//! `Var(theta_t | y_{1:T})`; it shares no sampling code with [`ffbs_sample`]
//! and serves as an independent cross-check of it.
//!
//! The state dimension is a compile-time constant so every matrix lives on
//! the stack and the 2x2 solves used by the sampler reduce to closed forms.

use nalgebra::{SMatrix, SVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Computational form of a dynamic linear model with state dimension `N`.
///
/// Usually obtained from [`crate::model::ModelSpec::to_fixed`], which performs
/// shape and covariance validation; the fields here are deliberately plain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dlm<const N: usize> {
    /// Observation row vector `F` (1 x N).
    pub f: SMatrix<f64, 1, N>,
    /// State transition matrix `G` (N x N).
    pub g: SMatrix<f64, N, N>,
    /// Prior mean of the pre-sample state `theta_0`.
    pub m0: SVector<f64, N>,
    /// Prior covariance of `theta_0`.
    pub c0: SMatrix<f64, N, N>,
}

impl<const N: usize> Dlm<N> {
    pub fn zero() -> Self {
        Dlm {
            f: SMatrix::zeros(),
            g: SMatrix::zeros(),
            m0: SVector::zeros(),
            c0: SMatrix::zeros(),
        }
    }
}

/// Per-time observation and state noise variances.
///
/// `W_t` is diagonal, stored as its diagonal. Entries must be finite and
/// non-negative; zeros are permitted so that deterministic (noise-free)
/// limits remain expressible, and the filter reports an error if the
/// one-step forecast variance ever fails to be positive.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceSequences<const N: usize> {
    v: Vec<f64>,
    w: Vec<SVector<f64, N>>,
}

impl<const N: usize> VarianceSequences<N> {
    pub fn new(v: Vec<f64>, w: Vec<SVector<f64, N>>) -> Result<Self> {
        if v.len() != w.len() {
            return Err(Error::VarianceLength {
                which: "W",
                t_len: v.len(),
                got: w.len(),
            });
        }
        for (t, &vt) in v.iter().enumerate() {
            if !vt.is_finite() || vt < 0.0 {
                return Err(Error::NonPositiveVariance {
                    which: "V",
                    t,
                    value: vt,
                });
            }
        }
        for (t, wt) in w.iter().enumerate() {
            for i in 0..N {
                if !wt[i].is_finite() || wt[i] < 0.0 {
                    return Err(Error::NonPositiveVariance {
                        which: "W",
                        t,
                        value: wt[i],
                    });
                }
            }
        }
        Ok(VarianceSequences { v, w })
    }

    /// Time-constant variances repeated over `t_len` periods.
    pub fn constant(v: f64, w_diag: SVector<f64, N>, t_len: usize) -> Result<Self> {
        VarianceSequences::new(vec![v; t_len], vec![w_diag; t_len])
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn w(&self) -> &[SVector<f64, N>] {
        &self.w
    }
}

/// Everything the forward pass produces, kept for the backward passes.
///
/// Per-observation sequences (`a`, `r`, `f`, `q`, `e`, `gain`) are indexed so
/// that entry `t` describes observation `t+1` in model notation; `m` and `c`
/// have one extra leading entry holding the `theta_0` prior moments.
#[derive(Debug, Clone)]
pub struct FilterResult<const N: usize> {
    /// One-step state prediction means `a_t`.
    pub a: Vec<SVector<f64, N>>,
    /// One-step state prediction covariances `R_t`.
    pub r: Vec<SMatrix<f64, N, N>>,
    /// One-step forecast means `f_t`.
    pub f: Vec<f64>,
    /// One-step forecast variances `Q_t`.
    pub q: Vec<f64>,
    /// Innovations `e_t = y_t - f_t`.
    pub e: Vec<f64>,
    /// Adaptive gains `A_t = R_t F' / Q_t`.
    pub gain: Vec<SVector<f64, N>>,
    /// Filtered means `m_0, ..., m_T`.
    pub m: Vec<SVector<f64, N>>,
    /// Filtered covariances `C_0, ..., C_T`.
    pub c: Vec<SMatrix<f64, N, N>>,
    /// Gaussian log-likelihood `sum_t log N(y_t; f_t, Q_t)`.
    pub log_likelihood: f64,
    /// Largest asymmetry `|M_ij - M_ji|` seen in any `R_t` or `C_t` before
    /// the symmetrizing repair. A healthy run keeps this near round-off.
    pub max_asymmetry: f64,
}

impl<const N: usize> FilterResult<N> {
    /// Number of observations filtered.
    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }
}

/// Smoothed state moments `E(theta_t | y_{1:T})`, `Var(theta_t | y_{1:T})`
/// for `t = 0, ..., T`.
#[derive(Debug, Clone)]
pub struct SmootherResult<const N: usize> {
    pub mean: Vec<SVector<f64, N>>,
    pub cov: Vec<SMatrix<f64, N, N>>,
}

/// Replaces `m` by `(m + m') / 2`, returning the largest asymmetry repaired.
fn symmetrize<const N: usize>(m: &mut SMatrix<f64, N, N>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..N {
        for j in (i + 1)..N {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            worst = worst.max(d);
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    worst
}

/// Strict Cholesky factor of a symmetric positive definite matrix; `None` if
/// any pivot is non-positive or non-finite.
fn cholesky<const N: usize>(a: &SMatrix<f64, N, N>) -> Option<SMatrix<f64, N, N>> {
    let mut l = SMatrix::<f64, N, N>::zeros();
    for j in 0..N {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..N {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Some(l)
}

/// Cholesky factor of a positive *semi*-definite matrix: pivots at or below
/// round-off are clamped to zero and their columns contribute nothing. For a
/// PSD input this yields `L` with `L L' = a` up to the clamp tolerance; the
/// number of clamped pivots is returned alongside.
fn cholesky_clamped<const N: usize>(a: &SMatrix<f64, N, N>) -> (SMatrix<f64, N, N>, usize) {
    let scale = (0..N)
        .fold(0.0_f64, |acc, i| acc.max(a[(i, i)].abs()))
        .max(1e-300);
    let tol = 1e-12 * scale;
    let mut l = SMatrix::<f64, N, N>::zeros();
    let mut clamped = 0;
    for j in 0..N {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol {
            clamped += 1;
            continue; // column stays zero: a degenerate direction
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..N {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    (l, clamped)
}

/// How a symmetric-system solve was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SolveKind {
    Exact,
    Jittered,
    RankDeficient,
}

/// Solves `A X = B` for symmetric positive semi-definite `A`.
///
/// Tries a strict Cholesky, then a jittered one (`A + 1e-12 tr(A) I`), and
/// finally a rank-revealing factorization that zeroes degenerate pivots. The
/// last resort is equivalent to a pseudo-inverse solve whenever the system is
/// consistent, which holds for the backward-pass systems by construction.
fn solve_spd<const N: usize>(
    a: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, N>,
) -> (SMatrix<f64, N, N>, SolveKind) {
    if let Some(l) = cholesky(a) {
        return (chol_solve(&l, b), SolveKind::Exact);
    }
    let trace: f64 = (0..N).map(|i| a[(i, i)]).sum();
    if trace > 0.0 {
        let mut aj = *a;
        for i in 0..N {
            aj[(i, i)] += 1e-12 * trace;
        }
        if let Some(l) = cholesky(&aj) {
            return (chol_solve(&l, b), SolveKind::Jittered);
        }
    }
    let (l, _) = cholesky_clamped(a);
    (chol_solve_clamped(&l, b), SolveKind::RankDeficient)
}

/// Back-substitution for a strict factor: solves `L L' X = B`.
fn chol_solve<const N: usize>(
    l: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, N>,
) -> SMatrix<f64, N, N> {
    let mut x = *b;
    for col in 0..N {
        // forward: L z = b
        for i in 0..N {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
        // backward: L' x = z
        for i in (0..N).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..N {
                s -= l[(k, i)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    x
}

/// As [`chol_solve`] but for a clamped factor: zero pivots map the
/// corresponding solution components to zero.
fn chol_solve_clamped<const N: usize>(
    l: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, N>,
) -> SMatrix<f64, N, N> {
    let mut x = *b;
    for col in 0..N {
        for i in 0..N {
            if l[(i, i)] == 0.0 {
                x[(i, col)] = 0.0;
                continue;
            }
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
        for i in (0..N).rev() {
            if l[(i, i)] == 0.0 {
                x[(i, col)] = 0.0;
                continue;
            }
            let mut s = x[(i, col)];
            for k in (i + 1)..N {
                s -= l[(k, i)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    x
}

/// Draws from `N(mean, cov)` for symmetric PSD `cov`; degenerate directions
/// receive no noise, so a zero covariance returns the mean exactly.
pub fn sample_mvn<const N: usize, R: Rng + ?Sized>(
    mean: &SVector<f64, N>,
    cov: &SMatrix<f64, N, N>,
    rng: &mut R,
) -> SVector<f64, N> {
    let (l, _) = cholesky_clamped(cov);
    let mut z = SVector::<f64, N>::zeros();
    for i in 0..N {
        z[i] = rng.sample(StandardNormal);
    }
    mean + l * z
}

/// Runs the forward Kalman recursion over `ys`.
///
/// Fails with the offending time index if an observation is non-finite or a
/// one-step forecast variance is not strictly positive.
pub fn kalman_filter<const N: usize>(
    dlm: &Dlm<N>,
    ys: &[f64],
    vars: &VarianceSequences<N>,
) -> Result<FilterResult<N>> {
    let t_len = ys.len();
    if vars.len() != t_len {
        return Err(Error::VarianceLength {
            which: "V/W",
            t_len,
            got: vars.len(),
        });
    }
    let mut out = FilterResult {
        a: Vec::with_capacity(t_len),
        r: Vec::with_capacity(t_len),
        f: Vec::with_capacity(t_len),
        q: Vec::with_capacity(t_len),
        e: Vec::with_capacity(t_len),
        gain: Vec::with_capacity(t_len),
        m: Vec::with_capacity(t_len + 1),
        c: Vec::with_capacity(t_len + 1),
        log_likelihood: 0.0,
        max_asymmetry: 0.0,
    };
    out.m.push(dlm.m0);
    out.c.push(dlm.c0);

    const LN_2PI: f64 = 1.8378770664093453;
    for (t, &y) in ys.iter().enumerate() {
        if !y.is_finite() {
            return Err(Error::NonFiniteValue {
                timestamp: format!("t={}", t + 1),
                value: y,
            });
        }
        let m_prev = out.m[t];
        let c_prev = out.c[t];

        let a = dlm.g * m_prev;
        let mut r = dlm.g * c_prev * dlm.g.transpose();
        for i in 0..N {
            r[(i, i)] += vars.w[t][i];
        }
        out.max_asymmetry = out.max_asymmetry.max(symmetrize(&mut r));

        let f = (dlm.f * a)[(0, 0)];
        let rf = r * dlm.f.transpose();
        let q = (dlm.f * rf)[(0, 0)] + vars.v[t];
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::DegenerateForecastVariance { t: t + 1, value: q });
        }
        let e = y - f;
        let gain = rf / q;
        let m = a + gain * e;
        let mut c = r - gain * gain.transpose() * q;
        out.max_asymmetry = out.max_asymmetry.max(symmetrize(&mut c));

        out.log_likelihood -= 0.5 * (LN_2PI + q.ln() + e * e / q);
        out.a.push(a);
        out.r.push(r);
        out.f.push(f);
        out.q.push(q);
        out.e.push(e);
        out.gain.push(gain);
        out.m.push(m);
        out.c.push(c);
    }
    Ok(out)
}

/// Draws one state path `theta_0, ..., theta_T` from the joint smoothing
/// distribution given the observations summarized in `filt`.
///
/// Singular one-step covariances are handled by the rank-deficient solve; if
/// that fallback fires, a single warning with the occurrence count is logged
/// for the whole pass.
pub fn ffbs_sample<const N: usize, R: Rng + ?Sized>(
    dlm: &Dlm<N>,
    filt: &FilterResult<N>,
    rng: &mut R,
) -> Result<Vec<SVector<f64, N>>> {
    let t_len = filt.len();
    let mut theta = vec![SVector::<f64, N>::zeros(); t_len + 1];
    theta[t_len] = sample_mvn(&filt.m[t_len], &filt.c[t_len], rng);
    let mut fallbacks = 0usize;
    for t in (0..t_len).rev() {
        // filt.r[t] and filt.a[t] are the time-(t+1) prediction moments.
        let (ms, cs) = backward_step(dlm, filt, t, &theta[t + 1], &mut fallbacks);
        theta[t] = sample_mvn(&ms, &cs, rng);
    }
    if fallbacks > 0 {
        log::warn!(
            "backward sampling used the rank-deficient solve {fallbacks} time(s); \
             one-step covariances were singular"
        );
    }
    Ok(theta)
}

/// Shared backward-step moments: conditional mean and covariance of
/// `theta_t` given `theta_{t+1} = next` and `y_{1:t}`.
fn backward_step<const N: usize>(
    dlm: &Dlm<N>,
    filt: &FilterResult<N>,
    t: usize,
    next: &SVector<f64, N>,
    fallbacks: &mut usize,
) -> (SVector<f64, N>, SMatrix<f64, N, N>) {
    let r_next = filt.r[t];
    let (x, kind) = solve_spd(&r_next, &(dlm.g * filt.c[t]));
    if kind == SolveKind::RankDeficient {
        *fallbacks += 1;
    }
    let b = x.transpose(); // B_t = C_t G' R_{t+1}^{-1}
    let ms = filt.m[t] + b * (next - filt.a[t]);
    let mut cs = filt.c[t] - b * r_next * b.transpose();
    symmetrize(&mut cs);
    (ms, cs)
}

/// Exact fixed-interval smoothing moments, computed by running the backward
/// recursion on means and covariances rather than on draws:
///
/// ```text
///   s_T = m_T                         S_T = C_T
///   s_t = m_t + B_t (s_{t+1} - a_{t+1})
///   S_t = C_t - B_t (R_{t+1} - S_{t+1}) B_t'
/// ```
pub fn smoother_oracle<const N: usize>(
    dlm: &Dlm<N>,
    filt: &FilterResult<N>,
) -> Result<SmootherResult<N>> {
    let t_len = filt.len();
    let mut mean = vec![SVector::<f64, N>::zeros(); t_len + 1];
    let mut cov = vec![SMatrix::<f64, N, N>::zeros(); t_len + 1];
    mean[t_len] = filt.m[t_len];
    cov[t_len] = filt.c[t_len];
    for t in (0..t_len).rev() {
        let r_next = filt.r[t];
        let (x, _) = solve_spd(&r_next, &(dlm.g * filt.c[t]));
        let b = x.transpose();
        mean[t] = filt.m[t] + b * (mean[t + 1] - filt.a[t]);
        let mut s = filt.c[t] - b * (r_next - cov[t + 1]) * b.transpose();
        symmetrize(&mut s);
        cov[t] = s;
    }
    Ok(SmootherResult { mean, cov })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Vector1, Vector2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dlm_1d(g: f64, m0: f64, c0: f64) -> Dlm<1> {
        Dlm {
            f: SMatrix::<f64, 1, 1>::new(1.0),
            g: SMatrix::<f64, 1, 1>::new(g),
            m0: Vector1::new(m0),
            c0: SMatrix::<f64, 1, 1>::new(c0),
        }
    }

    fn dlm_linear_growth(m0: Vector2<f64>, c0: Matrix2<f64>) -> Dlm<2> {
        Dlm {
            f: SMatrix::<f64, 1, 2>::new(1.0, 0.0),
            g: Matrix2::new(1.0, 1.0, 0.0, 1.0),
            m0,
            c0,
        }
    }

    #[test]
    fn static_one_d_model_is_conjugate_normal_update() {
        // Prior N(0,1), one observation y=2 with unit noise: posterior N(1, 1/2).
        let dlm = dlm_1d(1.0, 0.0, 1.0);
        let vars = VarianceSequences::constant(1.0, Vector1::new(0.0), 1).unwrap();
        let filt = kalman_filter(&dlm, &[2.0], &vars).unwrap();
        assert!((filt.m[1][0] - 1.0).abs() < 1e-14);
        assert!((filt.c[1][(0, 0)] - 0.5).abs() < 1e-14);
        // Forecast is N(0, 2); check the log-likelihood against the density.
        let expect = -0.5 * ((2.0 * std::f64::consts::PI * 2.0_f64).ln() + 4.0 / 2.0);
        assert!((filt.log_likelihood - expect).abs() < 1e-14);
    }

    #[test]
    fn vacuous_observation_leaves_prior_untouched() {
        let dlm = dlm_1d(1.0, 3.0, 2.0);
        let vars = VarianceSequences::constant(1e12, Vector1::new(0.5), 1).unwrap();
        let filt = kalman_filter(&dlm, &[1000.0], &vars).unwrap();
        assert!((filt.m[1][0] - filt.a[0][0]).abs() < 1e-8);
        assert!((filt.c[1][(0, 0)] - filt.r[0][(0, 0)]).abs() < 1e-8);
    }

    #[test]
    fn noiseless_growth_follows_deterministic_path_and_ffbs_is_exact() {
        // W = 0 and C0 = 0: the state is the deterministic line level + t*slope.
        let dlm = dlm_linear_growth(Vector2::new(1.0, 0.5), Matrix2::zeros());
        let t_len = 8;
        let vars = VarianceSequences::constant(1.0, Vector2::zeros(), t_len).unwrap();
        let ys: Vec<f64> = (1..=t_len).map(|t| 0.3 * (t as f64)).collect();
        let filt = kalman_filter(&dlm, &ys, &vars).unwrap();
        for t in 1..=t_len {
            let line = 1.0 + 0.5 * t as f64;
            assert!((filt.m[t][0] - line).abs() < 1e-12);
            assert!((filt.m[t][1] - 0.5).abs() < 1e-12);
            assert!(filt.c[t].amax() < 1e-12);
            assert!((filt.e[t - 1] - (ys[t - 1] - line)).abs() < 1e-12);
        }
        // Every backward draw reproduces the deterministic path exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let theta = ffbs_sample(&dlm, &filt, &mut rng).unwrap();
            for t in 0..=t_len {
                let line = 1.0 + 0.5 * t as f64;
                assert_eq!(theta[t][0], filt.m[t][0]);
                assert!((theta[t][0] - line).abs() < 1e-12);
                assert_eq!(theta[t][1], filt.m[t][1]);
            }
        }
    }

    #[test]
    fn degenerate_forecast_variance_is_an_error_naming_t() {
        let dlm = dlm_1d(1.0, 0.0, 0.0);
        let vars = VarianceSequences::constant(0.0, Vector1::new(0.0), 3).unwrap();
        match kalman_filter(&dlm, &[1.0, 2.0, 3.0], &vars) {
            Err(Error::DegenerateForecastVariance { t: 1, value }) => assert_eq!(value, 0.0),
            other => panic!("expected degenerate forecast error, got {other:?}"),
        }
    }

    #[test]
    fn variance_sequences_reject_negative_and_mismatched_input() {
        assert!(matches!(
            VarianceSequences::<1>::new(vec![1.0, -0.5], vec![Vector1::new(1.0); 2]),
            Err(Error::NonPositiveVariance {
                which: "V",
                t: 1,
                ..
            })
        ));
        assert!(matches!(
            VarianceSequences::<1>::new(vec![1.0], vec![Vector1::new(f64::NAN)]),
            Err(Error::NonPositiveVariance { which: "W", .. })
        ));
        assert!(matches!(
            VarianceSequences::<1>::new(vec![1.0; 3], vec![Vector1::new(1.0); 2]),
            Err(Error::VarianceLength { .. })
        ));
    }

    /// An independently written scalar filter used as a reference for N = 1.
    fn scalar_reference(
        g: f64,
        m0: f64,
        c0: f64,
        ys: &[f64],
        vs: &[f64],
        ws: &[f64],
    ) -> (Vec<f64>, Vec<f64>, f64) {
        let (mut m, mut c) = (m0, c0);
        let mut ms = vec![m];
        let mut cs = vec![c];
        let mut ll = 0.0;
        for ((&y, &v), &w) in ys.iter().zip(vs).zip(ws) {
            let a = g * m;
            let r = g * g * c + w;
            let q = r + v;
            let k = r / q;
            m = a + k * (y - a);
            c = r - k * k * q;
            ll += -0.5 * ((2.0 * std::f64::consts::PI * q).ln() + (y - a) * (y - a) / q);
            ms.push(m);
            cs.push(c);
        }
        (ms, cs, ll)
    }

    #[test]
    fn filter_matches_scalar_reference() {
        let g = 0.9;
        let dlm = dlm_1d(g, 0.4, 1.3);
        let ys: Vec<f64> = (0..20)
            .map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.7)
            .collect();
        let vs: Vec<f64> = (0..20).map(|i| 0.5 + 0.1 * (i % 4) as f64).collect();
        let ws: Vec<f64> = (0..20).map(|i| 0.2 + 0.05 * (i % 3) as f64).collect();
        let vars =
            VarianceSequences::new(vs.clone(), ws.iter().map(|&w| Vector1::new(w)).collect())
                .unwrap();
        let filt = kalman_filter(&dlm, &ys, &vars).unwrap();
        let (ms, cs, ll) = scalar_reference(g, 0.4, 1.3, &ys, &vs, &ws);
        for t in 0..=20 {
            assert!((filt.m[t][0] - ms[t]).abs() < 1e-12, "mean at t={t}");
            assert!((filt.c[t][(0, 0)] - cs[t]).abs() < 1e-12, "cov at t={t}");
        }
        assert!((filt.log_likelihood - ll).abs() < 1e-11);
    }

    #[test]
    fn filter_log_likelihood_matches_joint_gaussian_density() {
        // Brute force: y_{1:T} is jointly Gaussian with moments assembled from
        // the model; compare against the prediction-error decomposition.
        use nalgebra::DMatrix;
        let dlm = dlm_linear_growth(Vector2::new(0.3, 0.1), Matrix2::new(1.0, 0.2, 0.2, 0.5));
        let t_len = 3;
        let v = 0.7;
        let w = Vector2::new(0.3, 0.05);
        let vars = VarianceSequences::constant(v, w, t_len).unwrap();
        let ys = [1.0, 0.4, 2.2];

        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let c0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]);
        let wm = DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, 0.05]);
        // Cov(theta_s, theta_t) for s <= t, built forward.
        let mut gp = vec![DMatrix::identity(2, 2)]; // G^k
        for k in 1..=t_len {
            gp.push(&g * &gp[k - 1]);
        }
        let mut mu = DMatrix::zeros(t_len, 1);
        let m0 = DMatrix::from_row_slice(2, 1, &[0.3, 0.1]);
        let mut sigma = DMatrix::zeros(t_len, t_len);
        for s in 1..=t_len {
            let ms = &gp[s] * &m0;
            mu[(s - 1, 0)] = ms[(0, 0)];
            for t in s..=t_len {
                // Cov(theta_s, theta_t) = G^s C0 (G^t)' + sum_j G^{s-j} W (G^{t-j})'
                let mut cov = &gp[s] * &c0 * gp[t].transpose();
                for j in 1..=s {
                    cov += &gp[s - j] * &wm * gp[t - j].transpose();
                }
                let cyy = cov[(0, 0)] + if s == t { v } else { 0.0 };
                sigma[(s - 1, t - 1)] = cyy;
                sigma[(t - 1, s - 1)] = cyy;
            }
        }
        let chol = sigma.clone().cholesky().unwrap();
        let resid = DMatrix::from_column_slice(t_len, 1, &ys) - &mu;
        let alpha = chol.solve(&resid);
        let quad = (resid.transpose() * alpha)[(0, 0)];
        let logdet = 2.0 * (0..t_len).map(|i| chol.l()[(i, i)].ln()).sum::<f64>();
        let ll = -0.5 * (t_len as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad);

        let filt = kalman_filter(&dlm, &ys, &vars).unwrap();
        assert!(
            (filt.log_likelihood - ll).abs() < 1e-10,
            "{} vs {}",
            filt.log_likelihood,
            ll
        );
    }

    #[test]
    fn ffbs_single_observation_matches_filtered_posterior() {
        let dlm = dlm_1d(1.0, 0.0, 1.0);
        let vars = VarianceSequences::constant(1.0, Vector1::new(0.0), 1).unwrap();
        let filt = kalman_filter(&dlm, &[2.0], &vars).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            let th = ffbs_sample(&dlm, &filt, &mut rng).unwrap();
            sum += th[1][0];
            sumsq += th[1][0] * th[1][0];
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        // Posterior is N(1, 0.5): 4 standard errors of slack.
        assert!((mean - 1.0).abs() < 4.0 * (0.5f64 / n as f64).sqrt());
        let se_var = 0.5 * (2.0 / n as f64).sqrt();
        assert!((var - 0.5).abs() < 4.0 * se_var);
    }

    #[test]
    fn smoother_boundary_equals_filter_and_flat_prior_averages() {
        // Static level observed twice under a nearly flat prior: the smoothed
        // level at every point is the sample mean of the two observations.
        let dlm = dlm_1d(1.0, 0.0, 1e12);
        let vars = VarianceSequences::constant(1.0, Vector1::new(0.0), 2).unwrap();
        let filt = kalman_filter(&dlm, &[2.0, 2.0], &vars).unwrap();
        let smooth = smoother_oracle(&dlm, &filt).unwrap();
        assert_eq!(smooth.mean[2][0], filt.m[2][0]);
        assert_eq!(smooth.cov[2][(0, 0)], filt.c[2][(0, 0)]);
        for t in 0..=2 {
            assert!((smooth.mean[t][0] - 2.0).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn smoothing_never_inflates_variance() {
        let dlm = dlm_linear_growth(Vector2::new(0.0, 0.0), Matrix2::identity());
        let t_len = 30;
        let vars = VarianceSequences::constant(0.8, Vector2::new(0.3, 0.05), t_len).unwrap();
        let ys: Vec<f64> = (0..t_len).map(|i| (i as f64 * 0.7).sin() * 2.0).collect();
        let filt = kalman_filter(&dlm, &ys, &vars).unwrap();
        let smooth = smoother_oracle(&dlm, &filt).unwrap();
        for t in 0..=t_len {
            let d = filt.c[t] - smooth.cov[t];
            // C_t - S_t must be PSD: for 2x2, non-negative trace and determinant.
            assert!(d.trace() > -1e-10, "trace at t={t}");
            assert!(d.determinant() > -1e-10, "det at t={t}");
        }
        assert!(filt.max_asymmetry < 1e-10);
    }

    #[test]
    fn ffbs_mean_agrees_with_smoother_on_moderate_series() {
        let dlm = dlm_linear_growth(Vector2::new(0.0, 0.0), Matrix2::identity() * 4.0);
        let t_len = 25;
        let vars = VarianceSequences::constant(1.0, Vector2::new(0.2, 0.02), t_len).unwrap();
        let ys: Vec<f64> = (0..t_len)
            .map(|i| 0.2 * i as f64 + ((i * 13 % 7) as f64 - 3.0) * 0.5)
            .collect();
        let filt = kalman_filter(&dlm, &ys, &vars).unwrap();
        let smooth = smoother_oracle(&dlm, &filt).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 4000;
        let mut sums = vec![Vector2::<f64>::zeros(); t_len + 1];
        for _ in 0..n {
            let th = ffbs_sample(&dlm, &filt, &mut rng).unwrap();
            for t in 0..=t_len {
                sums[t] += th[t];
            }
        }
        for t in 0..=t_len {
            for i in 0..2 {
                let mean = sums[t][i] / n as f64;
                let se = (smooth.cov[t][(i, i)] / n as f64).sqrt();
                assert!(
                    (mean - smooth.mean[t][i]).abs() < 5.0 * se,
                    "t={t} comp={i}: {mean} vs {}",
                    smooth.mean[t][i]
                );
            }
        }
    }

    #[test]
    fn sample_mvn_zero_covariance_returns_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mean = Vector2::new(4.0, -1.0);
        let draw = sample_mvn(&mean, &Matrix2::zeros(), &mut rng);
        assert_eq!(draw, mean);
    }

    #[test]
    fn solve_spd_handles_full_rank_and_singular_systems() {
        let a = Matrix2::new(4.0, 1.0, 1.0, 3.0);
        let b = Matrix2::new(1.0, 0.0, 0.0, 1.0);
        let (x, kind) = solve_spd(&a, &b);
        assert_eq!(kind, SolveKind::Exact);
        let err = (a * x - b).amax();
        assert!(err < 1e-12);

        // Singular: a rank-one matrix with a consistent right-hand side.
        let s = Matrix2::new(1.0, 1.0, 1.0, 1.0);
        let rhs = Matrix2::new(2.0, 0.0, 2.0, 0.0);
        let (x, _) = solve_spd(&s, &rhs);
        assert!((s * x - rhs).amax() < 1e-9);

        // Zero matrix: solution collapses to zero.
        let (x, kind) = solve_spd(&Matrix2::zeros(), &rhs);
        assert_eq!(kind, SolveKind::RankDeficient);
        assert_eq!(x, Matrix2::zeros());
    }
}
