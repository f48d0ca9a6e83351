//! Core observation-series and state-space model types.
//!
//! The dynamic linear model used throughout the crate is
//!
//! ```text
//!   y_t     = F theta_t     + nu_t,        nu_t    ~ N(0, V_t)
//!   theta_t = G theta_{t-1} + omega_t,     omega_t ~ N(0, W_t)
//!   theta_0 ~ N(m0, C0)
//! ```
//!
//! with a univariate observation `y_t`. [`ModelSpec`] holds a validated
//! `(F, G, m0, C0)` quadruple of arbitrary state dimension; the linear
//! growth special case used by the sampler is built by
//! [`ModelSpec::linear_growth`]:
//!
//! ```text
//!   F = [1 0],    G = | 1 1 |,    theta_t = (level_t, slope_t)
//!                     | 0 1 |
//! ```

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix2, RowDVector, Vector2};
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::Dlm;

/// Relative tolerance for symmetry and positive semi-definiteness checks.
const PSD_TOL: f64 = 1e-10;

/// A point on a regular calendar grid, either monthly or annual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Timestamp {
    /// A calendar month, e.g. `1980-01`.
    Monthly { year: i32, month: u8 },
    /// A calendar year, e.g. `1980`.
    Annual { year: i32 },
}

impl Timestamp {
    /// Builds a monthly stamp, rejecting months outside `1..=12`.
    pub fn monthly(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidParameter {
                name: "month",
                requirement: "in 1..=12",
                value: month as f64,
            });
        }
        Ok(Timestamp::Monthly { year, month })
    }

    pub fn annual(year: i32) -> Self {
        Timestamp::Annual { year }
    }

    /// The next point on the same calendar grid.
    pub fn next(&self) -> Timestamp {
        match *self {
            Timestamp::Monthly { year, month } => {
                if month == 12 {
                    Timestamp::Monthly {
                        year: year + 1,
                        month: 1,
                    }
                } else {
                    Timestamp::Monthly {
                        year,
                        month: month + 1,
                    }
                }
            }
            Timestamp::Annual { year } => Timestamp::Annual { year: year + 1 },
        }
    }

    /// True when both stamps live on the same grid (both monthly or both annual).
    pub fn same_granularity(&self, other: &Timestamp) -> bool {
        matches!(
            (self, other),
            (Timestamp::Monthly { .. }, Timestamp::Monthly { .. })
                | (Timestamp::Annual { .. }, Timestamp::Annual { .. })
        )
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Timestamp::Monthly { year, month } => write!(f, "{year:04}-{month:02}"),
            Timestamp::Annual { year } => write!(f, "{year:04}"),
        }
    }
}

impl FromStr for Timestamp {
    type Err = Error;

    /// Parses `YYYY-MM` as monthly and a bare `YYYY` as annual.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter {
            name: "timestamp",
            requirement: "formatted as YYYY-MM or YYYY",
            value: f64::NAN,
        };
        match s.split_once('-') {
            Some((y, m)) => {
                let year: i32 = y.parse().map_err(|_| bad())?;
                let month: u8 = m.parse().map_err(|_| bad())?;
                Timestamp::monthly(year, month)
            }
            None => {
                let year: i32 = s.parse().map_err(|_| bad())?;
                Ok(Timestamp::annual(year))
            }
        }
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Timestamp;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a timestamp string like \"1980-01\" or \"1980\"")
            }
            fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<Timestamp, E> {
                s.parse().map_err(E::custom)
            }
        }
        deserializer.deserialize_str(V)
    }
}

/// A univariate time series on a regular monthly or annual grid.
///
/// Invariants enforced at construction: at least two observations, all values
/// finite, timestamps strictly increasing and of uniform granularity.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    timestamps: Vec<Timestamp>,
    values: Vec<f64>,
    log_scale: bool,
}

impl TimeSeries {
    pub fn new(timestamps: Vec<Timestamp>, values: Vec<f64>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} timestamps vs {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if values.len() < 2 {
            return Err(Error::SeriesTooShort {
                min: 2,
                got: values.len(),
            });
        }
        for (ts, v) in timestamps.iter().zip(&values) {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    timestamp: ts.to_string(),
                    value: *v,
                });
            }
        }
        for pair in timestamps.windows(2) {
            if !pair[0].same_granularity(&pair[1]) {
                return Err(Error::MixedGranularity {
                    first: pair[0].to_string(),
                    other: pair[1].to_string(),
                });
            }
            if pair[1] <= pair[0] {
                return Err(Error::TimestampOrder {
                    prev: pair[0].to_string(),
                    next: pair[1].to_string(),
                });
            }
        }
        Ok(TimeSeries {
            timestamps,
            values,
            log_scale: false,
        })
    }

    /// Builds a monthly series starting at `year`-`month` with consecutive stamps.
    pub fn monthly_from(year: i32, month: u8, values: Vec<f64>) -> Result<Self> {
        let mut ts = Timestamp::monthly(year, month)?;
        let mut stamps = Vec::with_capacity(values.len());
        for _ in 0..values.len() {
            stamps.push(ts);
            ts = ts.next();
        }
        TimeSeries::new(stamps, values)
    }

    /// Builds an annual series starting at `year` with consecutive stamps.
    pub fn annual_from(year: i32, values: Vec<f64>) -> Result<Self> {
        let stamps = (0..values.len())
            .map(|i| Timestamp::annual(year + i as i32))
            .collect();
        TimeSeries::new(stamps, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    /// Whether the values have been through [`log_transform`].
    pub fn is_log_scale(&self) -> bool {
        self.log_scale
    }
}

/// Returns a copy of the series with natural-log values.
///
/// Fails on the first non-positive observation, naming its timestamp so the
/// caller can point at the offending row.
pub fn log_transform(series: &TimeSeries) -> Result<TimeSeries> {
    let mut values = Vec::with_capacity(series.len());
    for (ts, &v) in series.timestamps().iter().zip(series.values()) {
        if v <= 0.0 {
            return Err(Error::NonPositiveValue {
                timestamp: ts.to_string(),
                value: v,
            });
        }
        values.push(v.ln());
    }
    Ok(TimeSeries {
        timestamps: series.timestamps.clone(),
        values,
        log_scale: true,
    })
}

/// The two components of the linear growth state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateVector {
    /// Local level of the series.
    pub mu: f64,
    /// Local slope (per-period growth).
    pub xi: f64,
}

impl From<Vector2<f64>> for StateVector {
    fn from(v: Vector2<f64>) -> Self {
        StateVector { mu: v[0], xi: v[1] }
    }
}

/// A validated dynamic linear model `(F, G, m0, C0)` of state dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    f: RowDVector<f64>,
    g: DMatrix<f64>,
    m0: DVector<f64>,
    c0: DMatrix<f64>,
}

impl ModelSpec {
    /// Validates shapes (`F` 1×n, `G` n×n, `m0` length n, `C0` n×n), finiteness,
    /// and that `C0` is symmetric positive semi-definite.
    pub fn new(
        f: RowDVector<f64>,
        g: DMatrix<f64>,
        m0: DVector<f64>,
        c0: DMatrix<f64>,
    ) -> Result<Self> {
        let n = f.ncols();
        if n == 0 {
            return Err(Error::DimensionMismatch(
                "state dimension must be at least 1".into(),
            ));
        }
        if g.nrows() != n || g.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "G is {}x{}, expected {n}x{n}",
                g.nrows(),
                g.ncols()
            )));
        }
        if m0.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "m0 has length {}, expected {n}",
                m0.len()
            )));
        }
        if c0.nrows() != n || c0.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "C0 is {}x{}, expected {n}x{n}",
                c0.nrows(),
                c0.ncols()
            )));
        }
        for m in [&g, &c0] {
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::DimensionMismatch(
                    "model matrices must be finite".into(),
                ));
            }
        }
        if f.iter().any(|x| !x.is_finite()) || m0.iter().any(|x| !x.is_finite()) {
            return Err(Error::DimensionMismatch(
                "model matrices must be finite".into(),
            ));
        }
        check_sym_psd(&c0)?;
        Ok(ModelSpec { f, g, m0, c0 })
    }

    /// The linear growth model: `F = [1 0]`, `G = [[1, 1], [0, 1]]`,
    /// state `(level, slope)`.
    pub fn linear_growth(m0: Vector2<f64>, c0: Matrix2<f64>) -> Result<Self> {
        ModelSpec::new(
            RowDVector::from_row_slice(&[1.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            DVector::from_column_slice(m0.as_slice()),
            DMatrix::from_row_slice(2, 2, &[c0[(0, 0)], c0[(0, 1)], c0[(1, 0)], c0[(1, 1)]]),
        )
    }

    pub fn state_dim(&self) -> usize {
        self.f.ncols()
    }

    pub fn f(&self) -> &RowDVector<f64> {
        &self.f
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn m0(&self) -> &DVector<f64> {
        &self.m0
    }

    pub fn c0(&self) -> &DMatrix<f64> {
        &self.c0
    }

    /// Converts to the fixed-dimension model the filter runs on.
    ///
    /// Fails unless the compile-time dimension `N` equals the runtime state
    /// dimension.
    pub fn to_fixed<const N: usize>(&self) -> Result<Dlm<N>> {
        if self.state_dim() != N {
            return Err(Error::DimensionMismatch(format!(
                "model has state dimension {}, requested {N}",
                self.state_dim()
            )));
        }
        let mut dlm = Dlm::<N>::zero();
        for j in 0..N {
            dlm.f[(0, j)] = self.f[j];
            dlm.m0[j] = self.m0[j];
            for i in 0..N {
                dlm.g[(i, j)] = self.g[(i, j)];
                dlm.c0[(i, j)] = self.c0[(i, j)];
            }
        }
        Ok(dlm)
    }
}

/// Rejects matrices that are measurably asymmetric or have a negative
/// eigenvalue beyond round-off.
fn check_sym_psd(c: &DMatrix<f64>) -> Result<()> {
    let scale = c.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    for i in 0..c.nrows() {
        for j in (i + 1)..c.ncols() {
            if (c[(i, j)] - c[(j, i)]).abs() > PSD_TOL * scale {
                return Err(Error::InvalidCovariance(format!(
                    "asymmetric at ({i},{j}): {} vs {}",
                    c[(i, j)],
                    c[(j, i)]
                )));
            }
        }
    }
    let sym = nalgebra::SymmetricEigen::new(c.clone());
    if let Some(min) = sym
        .eigenvalues
        .iter()
        .cloned()
        .min_by(|a, b| a.partial_cmp(b).unwrap())
    {
        if min < -PSD_TOL * scale {
            return Err(Error::InvalidCovariance(format!(
                "negative eigenvalue {min}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[f64]) -> TimeSeries {
        TimeSeries::monthly_from(1980, 1, values.to_vec()).unwrap()
    }

    #[test]
    fn timestamp_display_and_parse_round_trip() {
        for s in ["1980-01", "2012-12", "1999"] {
            let ts: Timestamp = s.parse().unwrap();
            assert_eq!(ts.to_string(), s);
        }
        assert_eq!(
            Timestamp::monthly(1980, 12).unwrap().next(),
            Timestamp::monthly(1981, 1).unwrap()
        );
        assert!("1980-13".parse::<Timestamp>().is_err());
        assert!("198x".parse::<Timestamp>().is_err());
    }

    #[test]
    fn series_rejects_short_nonfinite_and_disordered_input() {
        assert!(matches!(
            TimeSeries::monthly_from(1980, 1, vec![1.0]),
            Err(Error::SeriesTooShort { min: 2, got: 1 })
        ));
        let err = TimeSeries::monthly_from(1980, 1, vec![1.0, f64::NAN]).unwrap_err();
        assert!(err.to_string().contains("1980-02"));

        let stamps = vec![
            Timestamp::monthly(1980, 2).unwrap(),
            Timestamp::monthly(1980, 1).unwrap(),
        ];
        assert!(matches!(
            TimeSeries::new(stamps, vec![1.0, 2.0]),
            Err(Error::TimestampOrder { .. })
        ));

        let dup = vec![
            Timestamp::monthly(1980, 1).unwrap(),
            Timestamp::monthly(1980, 1).unwrap(),
        ];
        assert!(TimeSeries::new(dup, vec![1.0, 2.0]).is_err());

        let mixed = vec![
            Timestamp::monthly(1980, 1).unwrap(),
            Timestamp::annual(1981),
        ];
        assert!(matches!(
            TimeSeries::new(mixed, vec![1.0, 2.0]),
            Err(Error::MixedGranularity { .. })
        ));
    }

    #[test]
    fn log_transform_values_and_flag() {
        let s = series(&[1.0, std::f64::consts::E, 100.0]);
        let t = log_transform(&s).unwrap();
        assert_eq!(t.values()[0], 0.0);
        assert!((t.values()[1] - 1.0).abs() < 1e-15);
        // ln(100) against the standard library as reference
        assert!((t.values()[2] - 4.605170185988091).abs() < 1e-12);
        assert!(t.is_log_scale());
        assert!(!s.is_log_scale());
    }

    #[test]
    fn log_transform_names_offending_timestamp() {
        let s = series(&[1.0, 0.0, 2.0]);
        match log_transform(&s) {
            Err(Error::NonPositiveValue { timestamp, value }) => {
                assert_eq!(timestamp, "1980-02");
                assert_eq!(value, 0.0);
            }
            other => panic!("expected NonPositiveValue, got {other:?}"),
        }
    }

    #[test]
    fn linear_growth_structure() {
        let spec = ModelSpec::linear_growth(Vector2::new(0.0, 0.0), Matrix2::identity()).unwrap();
        // G advances the level by the slope and keeps the slope.
        let v = spec.g() * DVector::from_column_slice(&[1.0, 2.0]);
        assert_eq!((v[0], v[1]), (3.0, 2.0));
        // F picks out the level.
        let f = spec.f() * DVector::from_column_slice(&[5.3, -0.7]);
        assert_eq!(f[0], 5.3);
        // Two steps of pure slope integrate into the level: G^2 (0,1) = (2,1).
        let v2 = spec.g() * (spec.g() * DVector::from_column_slice(&[0.0, 1.0]));
        assert_eq!((v2[0], v2[1]), (2.0, 1.0));
    }

    #[test]
    fn linear_growth_is_deterministic() {
        let a = ModelSpec::linear_growth(Vector2::new(1.0, 2.0), Matrix2::identity()).unwrap();
        let b = ModelSpec::linear_growth(Vector2::new(1.0, 2.0), Matrix2::identity()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn model_spec_rejects_bad_covariances() {
        let asym = Matrix2::new(1.0, 0.5, -0.5, 1.0);
        assert!(matches!(
            ModelSpec::linear_growth(Vector2::zeros(), asym),
            Err(Error::InvalidCovariance(_))
        ));
        let indefinite = Matrix2::new(1.0, 2.0, 2.0, 1.0); // eigenvalues 3, -1
        assert!(matches!(
            ModelSpec::linear_growth(Vector2::zeros(), indefinite),
            Err(Error::InvalidCovariance(_))
        ));
        // Zero is a valid (degenerate) initial covariance.
        assert!(ModelSpec::linear_growth(Vector2::zeros(), Matrix2::zeros()).is_ok());
    }

    #[test]
    fn to_fixed_checks_dimension() {
        let spec = ModelSpec::linear_growth(Vector2::zeros(), Matrix2::identity()).unwrap();
        assert!(spec.to_fixed::<2>().is_ok());
        assert!(spec.to_fixed::<1>().is_err());
        assert!(spec.to_fixed::<3>().is_err());
    }
}
