use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};

use crate::balance::RainfallSeries;
use crate::error::CsvError;

pub const HEADER: &str = "date,rain_mm";

/// What to do with missing dates between the first and last row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GapPolicy {
    #[default]
    Reject,
    /// Fill missing days with 0 mm.
    FillZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSeries {
    pub series: RainfallSeries,
    /// Days inserted by [`GapPolicy::FillZero`].
    pub filled_days: usize,
}

/// Parses `date,rain_mm` text into a gapless series. Rows may come in any
/// order.
pub fn parse_csv(text: &str) -> Result<RainfallSeries, CsvError> {
    parse_csv_with(text, GapPolicy::Reject).map(|p| p.series)
}

pub fn parse_csv_with(text: &str, gaps: GapPolicy) -> Result<ParsedSeries, CsvError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(::csv::Trim::All)
        .from_reader(text.as_bytes());

    let header = reader.headers().map_err(|e| malformed(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["date", "rain_mm"] {
        return Err(malformed(1, format!("expected header `{HEADER}`")));
    }

    let mut rows: BTreeMap<NaiveDate, f64> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(malformed(line, format!("expected 2 fields, found {}", record.len())));
        }
        let date: NaiveDate = record[0]
            .parse()
            .map_err(|_| malformed(line, format!("bad date {:?}", &record[0])))?;
        let value: f64 = record[1]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| malformed(line, format!("bad rainfall {:?}", &record[1])))?;
        if value < 0.0 {
            return Err(CsvError::Negative { line, date, value });
        }
        if rows.insert(date, value).is_some() {
            return Err(CsvError::Duplicate { line, date });
        }
    }

    let (&first, _) = rows.first_key_value().ok_or(CsvError::Empty)?;
    let mut depths = Vec::with_capacity(rows.len());
    let mut filled_days = 0;
    let mut expected = first;
    for (date, value) in rows {
        if date != expected {
            let last_missing = date - Days::new(1);
            match gaps {
                GapPolicy::Reject => {
                    return Err(CsvError::Gap {
                        from: expected,
                        to: last_missing,
                    })
                }
                GapPolicy::FillZero => {
                    let n = (date - expected).num_days() as usize;
                    depths.extend(std::iter::repeat_n(0.0, n));
                    filled_days += n;
                }
            }
        }
        depths.push(value);
        expected = date + Days::new(1);
    }

    let series = RainfallSeries::new(first, depths).map_err(|e| malformed(0, e.to_string()))?;
    Ok(ParsedSeries { series, filled_days })
}

fn malformed(line: u64, reason: String) -> CsvError {
    CsvError::Malformed { line, reason }
}

/// Canonical text: header, ascending dates, shortest round-trip decimals,
/// LF separators and no trailing newline.
pub fn write_csv(series: &RainfallSeries) -> String {
    let mut out = String::with_capacity(16 * (series.len() + 1));
    out.push_str(HEADER);
    for (date, depth) in series.iter() {
        out.push('\n');
        out.push_str(&format!("{date},{depth}"));
    }
    out
}
