//! Dated observations of stored water and potability, kept in one JSON
//! document per system.
//!
//! Document layout:
//!
//! ```json
//! {
//!   "tankVolumeL": 10000.0,
//!   "records": [
//!     { "date": "2023-06-01", "measuredWaterL": 2000.0, "potable": true, "note": "after cleaning" }
//!   ]
//! }
//! ```

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::RecordError;
use crate::rainfall::write_atomic_file;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObservationRecord {
    pub date: NaiveDate,
    #[serde(rename = "measuredWaterL")]
    pub measured_water: f64,
    pub potable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Document {
    #[serde(rename = "tankVolumeL")]
    tank_volume: f64,
    records: Vec<ObservationRecord>,
}

/// Observation log for one system. A single writer owns the store.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordStore {
    path: Option<PathBuf>,
    tank_volume: f64,
    records: Vec<ObservationRecord>,
}

impl RecordStore {
    /// Loads the document at `path`, or starts empty if it does not exist.
    pub fn open(path: impl Into<PathBuf>, tank_volume: f64) -> Result<Self, RecordError> {
        let path = path.into();
        let records = match std::fs::read_to_string(&path) {
            Ok(text) => {
                let mut doc: Document = serde_json::from_str(&text).map_err(|e| RecordError::Corrupt {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                doc.records.sort_by_key(|r| r.date);
                if let Some(w) = doc.records.windows(2).find(|w| w[0].date == w[1].date) {
                    return Err(RecordError::Corrupt {
                        path,
                        message: format!("duplicate date {}", w[0].date),
                    });
                }
                doc.records
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        Ok(Self {
            path: Some(path),
            tank_volume,
            records,
        })
    }

    /// A store that is never written to disk.
    pub fn in_memory(tank_volume: f64) -> Self {
        Self {
            path: None,
            tank_volume,
            records: Vec::new(),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn tank_volume(&self) -> f64 {
        self.tank_volume
    }

    pub fn validate(&self, record: &ObservationRecord) -> Result<(), RecordError> {
        if !(record.measured_water.is_finite() && record.measured_water >= 0.0) {
            return Err(RecordError::Invalid(format!(
                "measured water {} L must be non-negative",
                record.measured_water
            )));
        }
        if record.measured_water > self.tank_volume {
            return Err(RecordError::ExceedsTank {
                measured: record.measured_water,
                volume: self.tank_volume,
            });
        }
        if self.records.iter().any(|r| r.date == record.date) {
            return Err(RecordError::DuplicateDate(record.date));
        }
        Ok(())
    }

    /// Validates, inserts in date order and persists. On any error the
    /// store is left as it was.
    pub fn add_record(&mut self, record: ObservationRecord) -> Result<(), RecordError> {
        self.validate(&record)?;
        let at = self.records.partition_point(|r| r.date < record.date);
        self.records.insert(at, record);
        if let Err(e) = self.save() {
            self.records.remove(at);
            return Err(e);
        }
        Ok(())
    }

    /// Records in ascending date order, optionally limited to an inclusive
    /// range.
    pub fn list_records(&self, range: Option<(NaiveDate, NaiveDate)>) -> Vec<ObservationRecord> {
        self.records
            .iter()
            .filter(|r| range.is_none_or(|(from, to)| r.date >= from && r.date <= to))
            .cloned()
            .collect()
    }

    /// Most recent observation on or before `date`.
    pub fn latest_on_or_before(&self, date: NaiveDate) -> Option<&ObservationRecord> {
        self.records.iter().rev().find(|r| r.date <= date)
    }

    fn save(&self) -> Result<(), RecordError> {
        let Some(path) = &self.path else { return Ok(()) };
        let doc = Document {
            tank_volume: self.tank_volume,
            records: self.records.clone(),
        };
        let mut text = serde_json::to_string_pretty(&doc).map_err(std::io::Error::other)?;
        text.push('\n');
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        write_atomic_file(path, text.as_bytes())?;
        Ok(())
    }
}
