use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};

use super::{format_timestamp, Measurement, TimeSeries};
use crate::error::{Error, Result};

/// First line of every canonical sensor CSV.
pub const CSV_HEADER: &str =
    "timestamp,ambient_temp_c,cable_temp_c,wind_speed_ms,humidity_pct,irradiance_wm2,current_a,dlr_a";

pub fn read_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_csv_str(&text)
}

/// Parses `YYYY-MM-DDTHH:MM:SSZ`.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let body = s.strip_suffix('Z')?;
    NaiveDateTime::parse_from_str(body, "%Y-%m-%dT%H:%M:%S")
        .ok()
        .map(|naive| naive.and_utc())
}

/// Parses and validates a canonical CSV document. Errors carry the 1-based
/// line number of the offending record.
pub fn read_csv_str(text: &str) -> Result<TimeSeries> {
    let first = text.lines().next().unwrap_or("");
    if first != CSV_HEADER {
        let found: Vec<&str> = first.split(',').collect();
        let missing: Vec<&str> = CSV_HEADER
            .split(',')
            .filter(|col| !found.contains(col))
            .collect();
        let detail = if missing.is_empty() {
            format!("expected `{CSV_HEADER}`, found `{first}`")
        } else {
            format!("missing column(s) {}", missing.join(", "))
        };
        return Err(Error::Header(detail));
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .quoting(false)
        .flexible(false)
        .from_reader(text.as_bytes());

    let mut records: Vec<Measurement> = Vec::new();
    let mut lines: Vec<u64> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse {
                line,
                msg: e.to_string(),
            }
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let ts_field = &row[0];
        let timestamp = parse_timestamp(ts_field).ok_or_else(|| Error::Parse {
            line,
            msg: format!("`{ts_field}` is not an ISO-8601 UTC timestamp"),
        })?;
        let mut values = [0.0f64; 7];
        for (j, slot) in values.iter_mut().enumerate() {
            let field = &row[j + 1];
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("column {}: `{field}` is not a number", j + 2),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: format!("column {}: non-finite value `{field}`", j + 2),
                });
            }
            *slot = v;
        }
        let m = Measurement {
            timestamp,
            ambient_temp_c: values[0],
            cable_temp_c: values[1],
            wind_speed_ms: values[2],
            humidity_pct: values[3],
            irradiance_wm2: values[4],
            current_a: values[5],
            dlr_a: values[6],
        };
        m.validate().map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        records.push(m);
        lines.push(line);
    }

    // Grid checks here so errors can name file lines.
    if let Err(e) = super::check_grid(&records) {
        return Err(match e {
            Error::Ordering { line, timestamp } => Error::Ordering {
                line: lines[line as usize],
                timestamp,
            },
            Error::Spacing {
                line,
                expected_s,
                found_s,
            } => Error::Spacing {
                line: lines[line as usize],
                expected_s,
                found_s,
            },
            other => other,
        });
    }
    TimeSeries::new(records)
}

/// Canonical CSV text: LF endings, shortest round-trip decimals.
pub fn write_csv_string(records: &[Measurement]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_timestamp(&r.timestamp),
            r.ambient_temp_c,
            r.cable_temp_c,
            r.wind_speed_ms,
            r.humidity_pct,
            r.irradiance_wm2,
            r.current_a,
            r.dlr_a
        );
    }
    out
}

pub fn write_csv(path: impl AsRef<Path>, records: &[Measurement]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_csv_string(records)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::ramp;
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let ts = ramp(96);
        let text = write_csv_string(ts.records());
        let back = read_csv_str(&text).unwrap();
        assert_eq!(back.len(), 96);
        assert_eq!(back, ts);
        assert_eq!(write_csv_string(back.records()), text);
    }

    #[test]
    fn swapped_lines_name_the_second() {
        let text = write_csv_string(ramp(20).records());
        let mut lines: Vec<&str> = text.lines().collect();
        // File lines 10 and 11 (1-based; line 1 is the header).
        lines.swap(9, 10);
        let swapped = lines.join("\n") + "\n";
        match read_csv_str(&swapped).unwrap_err() {
            Error::Ordering { line, .. } => assert_eq!(line, 11),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_a_header_error() {
        let text = write_csv_string(ramp(4).records());
        let broken = text.replacen(",irradiance_wm2", "", 1);
        match read_csv_str(&broken).unwrap_err() {
            Error::Header(msg) => assert!(msg.contains("irradiance_wm2"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_field_reports_line() {
        let text = write_csv_string(ramp(6).records());
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        lines[4] = lines[4].replacen(",50,", ",fifty,", 1);
        match read_csv_str(&(lines.join("\n") + "\n")).unwrap_err() {
            Error::Parse { line, msg } => {
                assert_eq!(line, 5);
                assert!(msg.contains("fifty"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_and_trailing_comma_rejected() {
        let text = write_csv_string(ramp(6).records());
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        lines[2] = lines[2].replacen(",50,", ",NaN,", 1);
        assert!(matches!(
            read_csv_str(&(lines.join("\n") + "\n")).unwrap_err(),
            Error::Parse { line: 3, .. }
        ));

        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        lines[3].push(',');
        assert!(matches!(
            read_csv_str(&(lines.join("\n") + "\n")).unwrap_err(),
            Error::Parse { .. }
        ));
    }

    #[test]
    fn gap_is_a_spacing_error() {
        let text = write_csv_string(ramp(8).records());
        let mut lines: Vec<&str> = text.lines().collect();
        lines.remove(5);
        match read_csv_str(&(lines.join("\n") + "\n")).unwrap_err() {
            Error::Spacing {
                line,
                expected_s,
                found_s,
            } => {
                assert_eq!(line, 6);
                assert_eq!((expected_s, found_s), (900, 1800));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
