//! CSV ingestion onto a strict calendar grid.
//!
//! The reader is deliberately unforgiving: series analysis downstream assumes
//! one observation per grid point, so duplicates, gaps, reversals, and
//! unparsable cells are all hard errors that name the offending row or the
//! missing grid point.

use std::fs::File;
use std::io::BufRead;
use std::io::BufReader;
use std::path::Path;

use rbdm::model::{TimeSeries, Timestamp};

use crate::error::CliError;

/// Reads a CSV file with a header into a [`TimeSeries`].
///
/// `annual` selects the expected grid: `false` demands consecutive `YYYY-MM`
/// months, `true` demands consecutive `YYYY` years. Data rows are numbered
/// from 1 in error messages (the header is row 0).
pub fn ingest_csv(
    path: &Path,
    date_col: &str,
    value_col: &str,
    annual: bool,
) -> Result<TimeSeries, CliError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingFile {
                path: display.clone(),
            }
        } else {
            CliError::Io {
                path: display.clone(),
                source,
            }
        }
    })?;
    ingest_reader(BufReader::new(file), date_col, value_col, annual)
}

/// Grid-aware parsing over any reader; split out so tests can feed strings.
pub fn ingest_reader<R: BufRead>(
    reader: R,
    date_col: &str,
    value_col: &str,
    annual: bool,
) -> Result<TimeSeries, CliError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| CliError::MalformedRecord {
            row: 0,
            detail: e.to_string(),
        })?
        .clone();
    let date_idx =
        headers
            .iter()
            .position(|h| h == date_col)
            .ok_or_else(|| CliError::MissingColumn {
                name: date_col.to_string(),
            })?;
    let value_idx =
        headers
            .iter()
            .position(|h| h == value_col)
            .ok_or_else(|| CliError::MissingColumn {
                name: value_col.to_string(),
            })?;

    let expected = if annual { "annual" } else { "monthly" };
    let mut stamps: Vec<Timestamp> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::MalformedRecord {
            row,
            detail: e.to_string(),
        })?;
        let date_text = record.get(date_idx).unwrap_or("");
        let stamp: Timestamp = date_text.parse().map_err(|_| CliError::RowParse {
            row,
            field: "date",
            text: date_text.to_string(),
        })?;
        let grid_ok = match stamp {
            Timestamp::Monthly { .. } => !annual,
            Timestamp::Annual { .. } => annual,
        };
        if !grid_ok {
            return Err(CliError::WrongGranularity {
                row,
                expected,
                got: date_text.to_string(),
            });
        }
        if let Some(prev) = stamps.last() {
            if stamp == *prev {
                return Err(CliError::Duplicate {
                    timestamp: stamp.to_string(),
                    row,
                });
            }
            if stamp < *prev {
                return Err(CliError::OutOfOrder {
                    row,
                    prev: prev.to_string(),
                    next: stamp.to_string(),
                });
            }
            let next_on_grid = prev.next();
            if stamp != next_on_grid {
                return Err(CliError::Gap {
                    granularity: expected,
                    missing: next_on_grid.to_string(),
                });
            }
        }
        let value_text = record.get(value_idx).unwrap_or("");
        let value: f64 = value_text.parse().map_err(|_| CliError::RowParse {
            row,
            field: "value",
            text: value_text.to_string(),
        })?;
        stamps.push(stamp);
        values.push(value);
    }
    Ok(TimeSeries::new(stamps, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str) -> Result<TimeSeries, CliError> {
        ingest_reader(Cursor::new(text.to_string()), "date", "value", false)
    }

    #[test]
    fn well_formed_monthly_file_round_trips() {
        let series = parse("date,value\n1980-01,1.5\n1980-02,2.5\n1980-03,3.5\n").unwrap();
        assert_eq!(series.len(), 3);
        assert_eq!(series.values(), &[1.5, 2.5, 3.5]);
        assert_eq!(series.timestamps()[0], Timestamp::monthly(1980, 1).unwrap());
        assert_eq!(series.timestamps()[2], Timestamp::monthly(1980, 3).unwrap());
    }

    #[test]
    fn year_boundary_is_consecutive() {
        let series = parse("date,value\n1980-12,1.0\n1981-01,2.0\n").unwrap();
        assert_eq!(series.len(), 2);
    }

    #[test]
    fn a_gap_names_the_first_missing_month() {
        let err = parse("date,value\n1980-01,1.0\n1980-03,2.0\n").unwrap_err();
        match err {
            CliError::Gap { missing, .. } => assert_eq!(missing, "1980-02"),
            other => panic!("expected gap, got {other}"),
        }
    }

    #[test]
    fn a_duplicate_names_the_stamp_and_row() {
        let err = parse("date,value\n1980-01,1.0\n1980-01,2.0\n").unwrap_err();
        match err {
            CliError::Duplicate { timestamp, row } => {
                assert_eq!(timestamp, "1980-01");
                assert_eq!(row, 2);
            }
            other => panic!("expected duplicate, got {other}"),
        }
    }

    #[test]
    fn reversed_stamps_are_out_of_order_not_a_gap() {
        let err = parse("date,value\n1980-05,1.0\n1980-03,2.0\n").unwrap_err();
        assert!(matches!(err, CliError::OutOfOrder { row: 2, .. }), "{err}");
    }

    #[test]
    fn unparsable_cells_name_the_row_and_field() {
        let err = parse("date,value\n1980-01,1.0\nnot-a-date,2.0\n").unwrap_err();
        match err {
            CliError::RowParse { row, field, text } => {
                assert_eq!(row, 2);
                assert_eq!(field, "date");
                assert_eq!(text, "not-a-date");
            }
            other => panic!("expected date parse error, got {other}"),
        }
        let err = parse("date,value\n1980-01,one\n").unwrap_err();
        match err {
            CliError::RowParse { row, field, text } => {
                assert_eq!(row, 1);
                assert_eq!(field, "value");
                assert_eq!(text, "one");
            }
            other => panic!("expected value parse error, got {other}"),
        }
    }

    #[test]
    fn missing_columns_are_reported_by_name() {
        let err = parse("month,value\n1980-01,1.0\n").unwrap_err();
        assert!(matches!(CliError::kind(&err), "missing-column"));
        let err = ingest_reader(
            Cursor::new("date,obs\n1980-01,1.0\n"),
            "date",
            "value",
            false,
        )
        .unwrap_err();
        match err {
            CliError::MissingColumn { name } => assert_eq!(name, "value"),
            other => panic!("expected missing column, got {other}"),
        }
    }

    #[test]
    fn annual_flag_switches_the_expected_grid() {
        let annual = ingest_reader(
            Cursor::new("date,value\n1980,1.0\n1981,2.0\n1982,3.0\n"),
            "date",
            "value",
            true,
        )
        .unwrap();
        assert_eq!(annual.len(), 3);
        assert_eq!(annual.timestamps()[1], Timestamp::annual(1981));

        let err = ingest_reader(
            Cursor::new("date,value\n1980,1.0\n"),
            "date",
            "value",
            false,
        )
        .unwrap_err();
        assert!(
            matches!(err, CliError::WrongGranularity { row: 1, .. }),
            "{err}"
        );

        let err = ingest_reader(
            Cursor::new("date,value\n1980-01,1.0\n"),
            "date",
            "value",
            true,
        )
        .unwrap_err();
        assert!(
            matches!(err, CliError::WrongGranularity { row: 1, .. }),
            "{err}"
        );

        let err = ingest_reader(
            Cursor::new("date,value\n1980,1.0\n1982,2.0\n"),
            "date",
            "value",
            true,
        )
        .unwrap_err();
        match err {
            CliError::Gap {
                missing,
                granularity,
            } => {
                assert_eq!(missing, "1981");
                assert_eq!(granularity, "annual");
            }
            other => panic!("expected gap, got {other}"),
        }
    }

    #[test]
    fn non_finite_values_are_rejected_by_the_series_type() {
        let err = parse("date,value\n1980-01,1.0\n1980-02,NaN\n").unwrap_err();
        assert!(
            matches!(err, CliError::Model(rbdm::Error::NonFiniteValue { .. })),
            "{err}"
        );
    }

    #[test]
    fn missing_file_is_its_own_error() {
        let err = ingest_csv(
            Path::new("/definitely/not/here.csv"),
            "date",
            "value",
            false,
        )
        .unwrap_err();
        assert!(matches!(err, CliError::MissingFile { .. }));
        assert_eq!(err.kind(), "missing-file");
    }

    #[test]
    fn cpi_shaped_span_has_396_rows() {
        // 1980-01 through 2012-12: 33 years of months.
        let mut text = String::from("date,value\n");
        let mut ts = Timestamp::monthly(1980, 1).unwrap();
        for i in 0..396 {
            text.push_str(&format!("{ts},{}\n", 100.0 + i as f64));
            ts = ts.next();
        }
        assert_eq!(ts, Timestamp::monthly(2013, 1).unwrap());
        let series = parse(&text).unwrap();
        assert_eq!(series.len(), 396);
        assert_eq!(
            *series.timestamps().last().unwrap(),
            Timestamp::monthly(2012, 12).unwrap()
        );
    }
}
