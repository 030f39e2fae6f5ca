//! Profile CSV: `household_id,timestamp,value_kw`, one row per household and hour.
//!
//! Timestamps are ISO-8601 in UTC (`2019-01-01T00:00:00Z`). Rows of one household must be
//! sorted by time without gaps; households may be interleaved. Values are written with the
//! shortest representation that parses back to the identical `f64`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{DateTime, Duration, Utc};

use super::series::is_hour_aligned;
use super::{DataError, HourlyTimeSeries};

pub const PROFILE_HEADER: [&str; 3] = ["household_id", "timestamp", "value_kw"];

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(raw)
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

struct Pending {
    start: DateTime<Utc>,
    last: DateTime<Utc>,
    values: Vec<f64>,
}

/// Parses a demand profile CSV into one series per household, ordered by household id.
///
/// Values must be nonnegative. Errors carry the 1-based line number, the header being line 1.
pub fn parse_profile_csv<R: Read>(input: R) -> Result<Vec<(String, HourlyTimeSeries)>, DataError> {
    parse_csv(input, false)
}

/// Same layout as [`parse_profile_csv`] but accepts negative values (net load, grid load).
pub fn parse_signed_csv<R: Read>(input: R) -> Result<Vec<(String, HourlyTimeSeries)>, DataError> {
    parse_csv(input, true)
}

fn parse_csv<R: Read>(
    input: R,
    allow_negative: bool,
) -> Result<Vec<(String, HourlyTimeSeries)>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let headers = reader.headers().map_err(|e| DataError::Csv {
        row: 1,
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != PROFILE_HEADER {
        return Err(DataError::Csv {
            row: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                PROFILE_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut pending: BTreeMap<String, Pending> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| DataError::Csv {
            row: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |message: String| DataError::Csv { row, message };

        if record.len() != 3 {
            return Err(malformed(format!("expected 3 fields, found {}", record.len())));
        }
        let id = &record[0];
        if id.is_empty() {
            return Err(malformed("empty household_id".into()));
        }
        let t = parse_timestamp(&record[1])
            .ok_or_else(|| malformed(format!("invalid timestamp `{}`", &record[1])))?;
        if !is_hour_aligned(&t) {
            return Err(malformed(format!("timestamp `{}` not on a full hour", &record[1])));
        }
        let value: f64 = record[2]
            .parse()
            .map_err(|_| malformed(format!("invalid value `{}`", &record[2])))?;
        if !value.is_finite() {
            return Err(malformed(format!("non-finite value `{}`", &record[2])));
        }
        if value < 0.0 && !allow_negative {
            return Err(DataError::CsvNegative { row, value });
        }

        match pending.get_mut(id) {
            None => {
                pending.insert(
                    id.to_string(),
                    Pending {
                        start: t,
                        last: t,
                        values: vec![value],
                    },
                );
            }
            Some(p) => {
                let expected = p.last + Duration::hours(1);
                if t <= p.last {
                    return Err(DataError::CsvNotMonotone {
                        row,
                        household: id.to_string(),
                    });
                }
                if t != expected {
                    return Err(DataError::CsvGap {
                        row,
                        household: id.to_string(),
                        expected,
                        found: t,
                    });
                }
                p.last = t;
                p.values.push(value);
            }
        }
    }

    pending
        .into_iter()
        .map(|(id, p)| {
            let series = if allow_negative {
                HourlyTimeSeries::new(p.start, p.values)?
            } else {
                HourlyTimeSeries::new_nonnegative(p.start, p.values)?
            };
            Ok((id, series))
        })
        .collect()
}

/// Writes series in the profile CSV layout, household by household.
pub fn write_profile_csv<W: Write>(
    output: W,
    series: &[(&str, &HourlyTimeSeries)],
) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_writer(output);
    let io = |e: csv::Error| DataError::Io(e.to_string());
    writer.write_record(PROFILE_HEADER).map_err(io)?;
    for (id, s) in series {
        for (i, v) in s.values().iter().enumerate() {
            writer
                .write_record([id.to_string(), format_timestamp(s.timestamp(i)), v.to_string()])
                .map_err(io)?;
        }
    }
    writer.flush().map_err(|e| DataError::Io(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    #[test]
    fn two_rows_one_household() {
        let text = "household_id,timestamp,value_kw\n\
                    h1,2019-01-01T00:00:00Z,0.5\n\
                    h1,2019-01-01T01:00:00Z,0.75\n";
        let parsed = parse_profile_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].0, "h1");
        assert_eq!(parsed[0].1.values(), &[0.5, 0.75]);
    }

    #[test]
    fn gap_names_row_three() {
        let text = "household_id,timestamp,value_kw\n\
                    h1,2019-01-01T00:00:00Z,0.5\n\
                    h1,2019-01-01T02:00:00Z,0.75\n";
        match parse_profile_csv(text.as_bytes()) {
            Err(DataError::CsvGap { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected gap error, got {other:?}"),
        }
    }

    #[test]
    fn non_monotone_and_negative_and_malformed() {
        let back = "household_id,timestamp,value_kw\n\
                    h1,2019-01-01T01:00:00Z,0.5\n\
                    h1,2019-01-01T00:00:00Z,0.75\n";
        assert!(matches!(
            parse_profile_csv(back.as_bytes()),
            Err(DataError::CsvNotMonotone { row: 3, .. })
        ));
        let neg = "household_id,timestamp,value_kw\nh1,2019-01-01T00:00:00Z,-1\n";
        assert!(matches!(
            parse_profile_csv(neg.as_bytes()),
            Err(DataError::CsvNegative { row: 2, .. })
        ));
        let bad = "household_id,timestamp,value_kw\nh1,yesterday,1\n";
        assert!(matches!(
            parse_profile_csv(bad.as_bytes()),
            Err(DataError::Csv { row: 2, .. })
        ));
        let header = "id,ts,v\nh1,2019-01-01T00:00:00Z,1\n";
        assert!(matches!(
            parse_profile_csv(header.as_bytes()),
            Err(DataError::Csv { row: 1, .. })
        ));
    }

    #[test]
    fn interleaved_households_match_fixture() {
        let t0 = Utc.with_ymd_and_hms(2019, 3, 1, 0, 0, 0).unwrap();
        let ids = ["b", "a", "c"];
        let fixture = |k: usize, h: usize| (k * 100 + h) as f64 / 8.0;
        let mut text = String::from("household_id,timestamp,value_kw\n");
        for h in 0..24 {
            for (k, id) in ids.iter().enumerate() {
                let t = t0 + Duration::hours(h as i64);
                text.push_str(&format!("{id},{},{}\n", format_timestamp(t), fixture(k, h)));
            }
        }
        let parsed = parse_profile_csv(text.as_bytes()).unwrap();
        assert_eq!(
            parsed.iter().map(|(id, _)| id.as_str()).collect::<Vec<_>>(),
            ["a", "b", "c"]
        );
        for (id, series) in &parsed {
            let k = ids.iter().position(|x| x == id).unwrap();
            let expected: Vec<f64> = (0..24).map(|h| fixture(k, h)).collect();
            assert_eq!(series.values(), expected.as_slice());
            assert_eq!(series.start(), t0);
        }
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(
            values in prop::collection::vec(-1.0e6f64..1.0e6, 1..80),
            offset in 0i64..100_000,
        ) {
            let start = Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap() + Duration::hours(offset);
            let s = HourlyTimeSeries::new(start, values).unwrap();
            let mut buf = Vec::new();
            write_profile_csv(&mut buf, &[("x", &s)]).unwrap();
            let back = parse_signed_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), 1);
            prop_assert_eq!(back[0].1.start(), s.start());
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(back[0].1.values()), bits(s.values()));
        }
    }
}
