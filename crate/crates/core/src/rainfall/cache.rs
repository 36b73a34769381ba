use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::csv::{parse_csv, write_csv};
use super::fetch::StationQuery;
use crate::balance::RainfallSeries;

/// Sidecar stored next to each cached series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CacheMetadata {
    pub latitude: String,
    pub longitude: String,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub fetched_at: String,
    pub provider: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CacheLookup {
    Hit(RainfallSeries),
    Miss,
    /// An entry exists but could not be used; treated as a miss.
    Corrupt(String),
}

impl CacheLookup {
    pub fn into_series(self) -> Option<RainfallSeries> {
        match self {
            CacheLookup::Hit(s) => Some(s),
            _ => None,
        }
    }
}

/// Directory of fetched series keyed by coordinates and date range.
#[derive(Debug, Clone)]
pub struct RainfallCache {
    dir: PathBuf,
}

fn coord(v: f64) -> String {
    format!("{v:.5}")
}

impl RainfallCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Content address of a query: coordinates rounded to 5 decimals plus
    /// the exact date range.
    pub fn key(query: &StationQuery) -> String {
        let canonical = format!(
            "{},{},{},{}",
            coord(query.latitude),
            coord(query.longitude),
            query.start_date,
            query.end_date
        );
        Sha256::digest(canonical.as_bytes())
            .iter()
            .take(16)
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn paths(&self, query: &StationQuery) -> (PathBuf, PathBuf) {
        let key = Self::key(query);
        (
            self.dir.join(format!("{key}.csv")),
            self.dir.join(format!("{key}.meta.json")),
        )
    }

    pub fn get(&self, query: &StationQuery) -> CacheLookup {
        let lookup = self.lookup(query);
        if let CacheLookup::Corrupt(reason) = &lookup {
            log::warn!("ignoring corrupt rainfall cache entry: {reason}");
        }
        lookup
    }

    fn lookup(&self, query: &StationQuery) -> CacheLookup {
        let (csv_path, meta_path) = self.paths(query);
        let text = match std::fs::read_to_string(&csv_path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return CacheLookup::Miss,
            Err(e) => return CacheLookup::Corrupt(format!("{}: {e}", csv_path.display())),
        };
        let meta: CacheMetadata = match std::fs::read_to_string(&meta_path)
            .map_err(|e| e.to_string())
            .and_then(|m| serde_json::from_str(&m).map_err(|e| e.to_string()))
        {
            Ok(m) => m,
            Err(e) => return CacheLookup::Corrupt(format!("{}: {e}", meta_path.display())),
        };
        if meta.latitude != coord(query.latitude)
            || meta.longitude != coord(query.longitude)
            || meta.start_date != query.start_date
            || meta.end_date != query.end_date
        {
            return CacheLookup::Miss;
        }
        match parse_csv(&text) {
            Ok(s) if s.start_date() == query.start_date && s.end_date() == query.end_date => CacheLookup::Hit(s),
            Ok(_) => CacheLookup::Corrupt(format!("{}: range does not match metadata", csv_path.display())),
            Err(e) => CacheLookup::Corrupt(format!("{}: {e}", csv_path.display())),
        }
    }

    /// Stores `series` for `query`; each file is replaced atomically.
    pub fn put(&self, query: &StationQuery, series: &RainfallSeries, provider: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let (csv_path, meta_path) = self.paths(query);
        let meta = CacheMetadata {
            latitude: coord(query.latitude),
            longitude: coord(query.longitude),
            start_date: query.start_date,
            end_date: query.end_date,
            fetched_at: Utc::now().to_rfc3339(),
            provider: provider.to_string(),
        };
        let meta_json = serde_json::to_string_pretty(&meta).map_err(std::io::Error::other)?;
        write_atomic_file(&csv_path, write_csv(series).as_bytes())?;
        write_atomic_file(&meta_path, meta_json.as_bytes())
    }
}

pub(crate) fn write_atomic_file(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
