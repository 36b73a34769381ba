//! Getting daily rainfall records in and out: canonical CSV, a weather
//! provider client and an on-disk cache of fetched records.

mod cache;
mod csv;
mod fetch;

pub use self::cache::{CacheLookup, CacheMetadata, RainfallCache};
pub(crate) use self::cache::write_atomic_file;
pub use self::csv::{parse_csv, parse_csv_with, write_csv, GapPolicy, ParsedSeries};
pub use self::fetch::{
    fetch_history, fetch_history_from, DailyPrecip, FetchOutcome, FixtureProvider, HttpProvider,
    ProviderConfig, ProviderUnits, RainfallProvider, StationQuery, UrlStyle, API_KEY_ENV,
};
