use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::balance::RainfallSeries;
use crate::error::FetchError;

/// Environment variable holding the provider API key.
pub const API_KEY_ENV: &str = "RAINTANK_API_KEY";

const MM_PER_INCH: f64 = 25.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationQuery {
    pub latitude: f64,
    pub longitude: f64,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
}

impl StationQuery {
    pub fn new(latitude: f64, longitude: f64, start_date: NaiveDate, end_date: NaiveDate) -> Result<Self, FetchError> {
        if !(-90.0..=90.0).contains(&latitude) {
            return Err(FetchError::InvalidQuery(format!("latitude {latitude} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&longitude) {
            return Err(FetchError::InvalidQuery(format!("longitude {longitude} outside [-180, 180]")));
        }
        if start_date > end_date {
            return Err(FetchError::InvalidQuery(format!("start {start_date} is after end {end_date}")));
        }
        Ok(Self {
            latitude,
            longitude,
            start_date,
            end_date,
        })
    }

    pub fn days(&self) -> usize {
        (self.end_date - self.start_date).num_days() as usize + 1
    }
}

/// How the coordinates and date range are placed in the request URL.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UrlStyle {
    /// `?lat=..&lon=..&start=..&end=..`
    #[default]
    Query,
    /// `/{lat},{lon}/{start}/{end}` as used by timeline-style APIs.
    Path,
}

/// Depth unit of the provider's `precip` field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderUnits {
    #[default]
    Metric,
    Us,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub base_url: String,
    #[serde(skip)]
    pub api_key: String,
    pub timeout_secs: f64,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub url_style: UrlStyle,
    pub units: ProviderUnits,
}

impl fmt::Debug for ProviderConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProviderConfig")
            .field("base_url", &self.base_url)
            .field("api_key", &"<redacted>")
            .field("timeout_secs", &self.timeout_secs)
            .field("max_attempts", &self.max_attempts)
            .field("backoff_base_ms", &self.backoff_base_ms)
            .field("url_style", &self.url_style)
            .field("units", &self.units)
            .finish()
    }
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            base_url: "https://weather.visualcrossing.com/VisualCrossingWebServices/rest/services/timeline".into(),
            api_key: String::new(),
            timeout_secs: 30.0,
            max_attempts: 4,
            backoff_base_ms: 500,
            url_style: UrlStyle::Path,
            units: ProviderUnits::Metric,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), FetchError> {
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(FetchError::InvalidQuery("provider timeout must be positive".into()));
        }
        if self.max_attempts == 0 {
            return Err(FetchError::InvalidQuery("provider needs at least one attempt".into()));
        }
        Ok(())
    }

    /// Reads the API key from [`API_KEY_ENV`].
    pub fn with_api_key_from_env(mut self) -> Self {
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            self.api_key = key;
        }
        self
    }

    fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.backoff_base_ms.saturating_mul(1 << (attempt - 1).min(16)))
    }
}

/// One day of provider data, already converted to mm. `None` means the
/// provider had no value for that day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyPrecip {
    pub date: NaiveDate,
    pub rain_mm: Option<f64>,
}

/// Raw provider output before range validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProviderDays {
    pub days: Vec<DailyPrecip>,
    pub retries: u32,
}

/// Source of daily precipitation for a station query.
pub trait RainfallProvider {
    fn name(&self) -> &str;

    fn fetch_days(&self, query: &StationQuery) -> Result<ProviderDays, FetchError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchOutcome {
    pub series: RainfallSeries,
    pub retries: u32,
    pub provider: String,
}

#[derive(Deserialize)]
struct DaysResponse {
    days: Vec<DayEntry>,
}

#[derive(Deserialize)]
struct DayEntry {
    datetime: String,
    #[serde(default)]
    precip: Option<f64>,
}

/// Maps a `{"days": [{"datetime": .., "precip": ..}]}` body to daily depths.
fn map_days_json(body: &str, units: ProviderUnits) -> Result<Vec<DailyPrecip>, FetchError> {
    let parsed: DaysResponse =
        serde_json::from_str(body).map_err(|e| FetchError::Schema(e.to_string()))?;
    parsed
        .days
        .into_iter()
        .map(|d| {
            let date: NaiveDate = d
                .datetime
                .parse()
                .map_err(|_| FetchError::Schema(format!("bad datetime {:?}", d.datetime)))?;
            let rain_mm = match d.precip {
                Some(p) if !p.is_finite() || p < 0.0 => {
                    return Err(FetchError::Schema(format!("bad precip {p} on {date}")))
                }
                Some(p) if units == ProviderUnits::Us => Some(p * MM_PER_INCH),
                other => other,
            };
            Ok(DailyPrecip { date, rain_mm })
        })
        .collect()
}

/// Blocking HTTP client for a daily-history weather API.
pub struct HttpProvider {
    config: ProviderConfig,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> Result<Self, FetchError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| FetchError::Http {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(Self { config, client })
    }

    fn url(&self, q: &StationQuery) -> Result<reqwest::Url, FetchError> {
        let base = self.config.base_url.trim_end_matches('/');
        let mut params: Vec<(&str, String)> = Vec::new();
        let raw = match self.config.url_style {
            UrlStyle::Query => {
                params.push(("lat", q.latitude.to_string()));
                params.push(("lon", q.longitude.to_string()));
                params.push(("start", q.start_date.to_string()));
                params.push(("end", q.end_date.to_string()));
                base.to_string()
            }
            UrlStyle::Path => format!(
                "{base}/{},{}/{}/{}",
                q.latitude, q.longitude, q.start_date, q.end_date
            ),
        };
        let units = match self.config.units {
            ProviderUnits::Metric => "metric",
            ProviderUnits::Us => "us",
        };
        params.push(("unitGroup", units.into()));
        params.push(("include", "days".into()));
        params.push(("elements", "datetime,precip".into()));
        params.push(("contentType", "json".into()));
        params.push(("key", self.config.api_key.clone()));
        let mut url = reqwest::Url::parse(&raw).map_err(|e| FetchError::InvalidQuery(format!("bad base URL {base:?}: {e}")))?;
        url.query_pairs_mut().extend_pairs(params);
        Ok(url)
    }
}

enum Attempt {
    Done(String),
    Retry(String),
}

impl RainfallProvider for HttpProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn fetch_days(&self, query: &StationQuery) -> Result<ProviderDays, FetchError> {
        let url = self.url(query)?;
        let max = self.config.max_attempts;
        let mut last_error = String::new();
        for attempt in 1..=max {
            let outcome = match self.client.get(url.clone()).send() {
                Err(e) => Attempt::Retry(e.without_url().to_string()),
                Ok(resp) => {
                    let status = resp.status();
                    if status.as_u16() == 401 || status.as_u16() == 403 {
                        return Err(FetchError::Auth {
                            status: status.as_u16(),
                        });
                    }
                    if status.is_server_error() || status.as_u16() == 429 {
                        Attempt::Retry(format!("status {status}"))
                    } else if !status.is_success() {
                        return Err(FetchError::Http {
                            attempts: attempt,
                            message: format!("status {status}"),
                        });
                    } else {
                        match resp.text() {
                            Ok(body) => Attempt::Done(body),
                            Err(e) => Attempt::Retry(e.without_url().to_string()),
                        }
                    }
                }
            };
            match outcome {
                Attempt::Done(body) => {
                    return Ok(ProviderDays {
                        days: map_days_json(&body, self.config.units)?,
                        retries: attempt - 1,
                    })
                }
                Attempt::Retry(msg) => {
                    log::warn!("rainfall fetch attempt {attempt}/{max} failed: {msg}");
                    last_error = msg;
                    if attempt < max {
                        thread::sleep(self.config.backoff(attempt));
                    }
                }
            }
        }
        Err(FetchError::Http {
            attempts: max,
            message: last_error,
        })
    }
}

/// Reads provider-shaped JSON from local files, one file per query.
///
/// Fixture names follow `{lat}_{lon}_{start}_{end}.json`; a single
/// `default.json` answers any query.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    dir: PathBuf,
    units: ProviderUnits,
}

impl FixtureProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            units: ProviderUnits::Metric,
        }
    }

    pub fn with_units(mut self, units: ProviderUnits) -> Self {
        self.units = units;
        self
    }
}

impl RainfallProvider for FixtureProvider {
    fn name(&self) -> &str {
        "fixture"
    }

    fn fetch_days(&self, q: &StationQuery) -> Result<ProviderDays, FetchError> {
        let specific = self.dir.join(format!(
            "{}_{}_{}_{}.json",
            q.latitude, q.longitude, q.start_date, q.end_date
        ));
        let path = if specific.exists() {
            specific
        } else {
            self.dir.join("default.json")
        };
        let body = std::fs::read_to_string(&path).map_err(|source| FetchError::Fixture { path, source })?;
        Ok(ProviderDays {
            days: map_days_json(&body, self.units)?,
            retries: 0,
        })
    }
}

/// Fetches and validates the full query range. Days outside the range are
/// ignored; any missing day fails the whole fetch.
pub fn fetch_history_from(
    query: &StationQuery,
    provider: &dyn RainfallProvider,
) -> Result<FetchOutcome, FetchError> {
    let raw = provider.fetch_days(query)?;
    let mut by_date: BTreeMap<NaiveDate, f64> = BTreeMap::new();
    for day in raw.days {
        if day.date < query.start_date || day.date > query.end_date {
            continue;
        }
        let Some(mm) = day.rain_mm else { continue };
        if let Some(prev) = by_date.insert(day.date, mm) {
            if prev != mm {
                return Err(FetchError::Schema(format!(
                    "conflicting values for {}: {prev} and {mm}",
                    day.date
                )));
            }
        }
    }
    let expected = query.days();
    if by_date.len() != expected {
        let first = (0..expected as u64)
            .map(|i| query.start_date + Days::new(i))
            .find(|d| !by_date.contains_key(d))
            .unwrap_or(query.start_date);
        return Err(FetchError::IncompleteRange {
            missing: expected - by_date.len(),
            first,
        });
    }
    let series = RainfallSeries::new(query.start_date, by_date.into_values().collect())
        .map_err(|e| FetchError::Schema(e.to_string()))?;
    Ok(FetchOutcome {
        series,
        retries: raw.retries,
        provider: provider.name().to_string(),
    })
}

/// Fetches over HTTP with `config`.
pub fn fetch_history(query: &StationQuery, config: &ProviderConfig) -> Result<FetchOutcome, FetchError> {
    let provider = HttpProvider::new(config.clone())?;
    fetch_history_from(query, &provider)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn query_validation() {
        assert!(StationQuery::new(26.56757, 72.46754, d("2018-01-01"), d("2022-12-31")).is_ok());
        assert!(StationQuery::new(91.0, 0.0, d("2018-01-01"), d("2018-01-01")).is_err());
        assert!(StationQuery::new(0.0, -181.0, d("2018-01-01"), d("2018-01-01")).is_err());
        assert!(StationQuery::new(0.0, 0.0, d("2018-01-02"), d("2018-01-01")).is_err());
    }

    #[test]
    fn maps_inches() {
        let days = map_days_json(r#"{"days":[{"datetime":"2022-01-01","precip":1.0}]}"#, ProviderUnits::Us).unwrap();
        assert_eq!(days[0].rain_mm, Some(25.4));
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(map_days_json("{}", ProviderUnits::Metric), Err(FetchError::Schema(_))));
        assert!(matches!(
            map_days_json(r#"{"days":[{"datetime":"x","precip":1}]}"#, ProviderUnits::Metric),
            Err(FetchError::Schema(_))
        ));
        assert!(matches!(
            map_days_json(r#"{"days":[{"datetime":"2022-01-01","precip":-1}]}"#, ProviderUnits::Metric),
            Err(FetchError::Schema(_))
        ));
    }

    #[test]
    fn null_precip_is_missing() {
        let days = map_days_json(r#"{"days":[{"datetime":"2022-01-01","precip":null}]}"#, ProviderUnits::Metric).unwrap();
        assert_eq!(days[0].rain_mm, None);
    }

    #[test]
    fn backoff_doubles() {
        let c = ProviderConfig {
            backoff_base_ms: 10,
            ..Default::default()
        };
        assert_eq!(c.backoff(1), Duration::from_millis(10));
        assert_eq!(c.backoff(3), Duration::from_millis(40));
    }

    #[test]
    fn debug_hides_key() {
        let c = ProviderConfig {
            api_key: "s3cret".into(),
            ..Default::default()
        };
        assert!(!format!("{c:?}").contains("s3cret"));
    }

    #[test]
    fn path_style_url() {
        let p = HttpProvider::new(ProviderConfig {
            base_url: "http://example.test/timeline/".into(),
            api_key: "k".into(),
            ..Default::default()
        })
        .unwrap();
        let q = StationQuery::new(26.5, 72.25, d("2022-01-01"), d("2022-01-03")).unwrap();
        let url = p.url(&q).unwrap();
        assert_eq!(url.path(), "/timeline/26.5,72.25/2022-01-01/2022-01-03");
        assert!(url.query().unwrap().contains("unitGroup=metric"));
        assert!(url.query().unwrap().contains("key=k"));
    }
}
