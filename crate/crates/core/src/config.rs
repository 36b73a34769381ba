//! Scenario files: the system, its demand, and optional provider and
//! service settings, as TOML.
//!
//! ```toml
//! name = "toy"
//!
//! [system]
//! catchment_area_m2 = 10.0
//! runoff_coeff = 0.5
//! tank_volume_l = 100.0
//!
//! [demand]
//! constant = 30.0            # L/day
//! [demand.dated]             # optional per-date overrides
//! "2023-06-01" = 50.0
//!
//! [service]                  # optional
//! bind = "127.0.0.1:8080"
//! rain = "toy.csv"
//! records = "records.json"
//! ```
//!
//! Relative paths are resolved against the directory of the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

use crate::balance::{DemandSchedule, SystemSpec};
use crate::rainfall::ProviderConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    name: Option<String>,
    system: RawSystem,
    #[serde(default)]
    demand: RawDemand,
    #[serde(default)]
    provider: Option<ProviderConfig>,
    #[serde(default)]
    service: RawService,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    catchment_area_m2: f64,
    runoff_coeff: f64,
    tank_volume_l: f64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawDemand {
    #[serde(default)]
    constant: f64,
    #[serde(default)]
    dated: BTreeMap<NaiveDate, f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawService {
    bind: Option<String>,
    rain: Option<PathBuf>,
    records: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ServiceSettings {
    pub bind: String,
    pub rain: Option<PathBuf>,
    pub records: Option<PathBuf>,
}

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub spec: SystemSpec,
    pub demand: DemandSchedule,
    pub provider: ProviderConfig,
    pub service: ServiceSettings,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let default_name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "system".into());
        Self::from_toml(&text, base, &default_name).map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn from_toml(text: &str, base_dir: &Path, default_name: &str) -> Result<Self, String> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        let spec = SystemSpec::new(
            raw.system.catchment_area_m2,
            raw.system.runoff_coeff,
            raw.system.tank_volume_l,
        )
        .map_err(|e| format!("[system] {e}"))?;
        let demand = DemandSchedule::constant_with_overrides(raw.demand.constant, raw.demand.dated)
            .map_err(|e| format!("[demand] {e}"))?;
        let provider = raw.provider.unwrap_or_default();
        provider.validate().map_err(|e| format!("[provider] {e}"))?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };
        Ok(Self {
            name: raw.name.unwrap_or_else(|| default_name.to_string()),
            spec,
            demand,
            provider,
            service: ServiceSettings {
                bind: raw.service.bind.unwrap_or_else(|| DEFAULT_BIND.to_string()),
                rain: raw.service.rain.map(resolve),
                records: raw.service.records.map(resolve),
            },
        })
    }
}
