//! Historical reliability of a system and its qualitative rating.

use std::fmt;
use std::str::FromStr;

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::balance::{simulate, DemandSchedule, RainfallSeries, SystemSpec};
use crate::error::{Error, Result};

/// Length of the conventional reliability record.
pub const HISTORY_YEARS: u32 = 5;

/// Qualitative rating of a success probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Unlikely,
    Occasionally,
    Fair,
    Good,
    VeryGood,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Unlikely => "Unlikely",
            Label::Occasionally => "Occasionally",
            Label::Fair => "Fair",
            Label::Good => "Good",
            Label::VeryGood => "VeryGood",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Unlikely" => Ok(Label::Unlikely),
            "Occasionally" => Ok(Label::Occasionally),
            "Fair" => Ok(Label::Fair),
            "Good" => Ok(Label::Good),
            "VeryGood" => Ok(Label::VeryGood),
            other => Err(Error::invalid(format!("unknown label {other:?}"))),
        }
    }
}

/// Maps a probability to its band. Each band is closed on the right.
pub fn classify(probability: f64) -> Result<Label> {
    if !(0.0..=1.0).contains(&probability) {
        return Err(Error::invalid(format!(
            "probability {probability} is outside [0, 1]"
        )));
    }
    Ok(if probability <= 0.5 {
        Label::Unlikely
    } else if probability <= 0.6 {
        Label::Occasionally
    } else if probability <= 0.8 {
        Label::Fair
    } else if probability <= 0.9 {
        Label::Good
    } else {
        Label::VeryGood
    })
}

/// Percentage rounded half-up to the nearest integer.
pub fn rounded_percent(probability: f64) -> u32 {
    (probability * 100.0 + 0.5).floor() as u32
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Warning {
    /// The record is shorter than the conventional five years.
    ShortHistory { days: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::ShortHistory { days } => write!(
                f,
                "rainfall history covers {days} days, less than {HISTORY_YEARS} years"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityReport {
    /// `None` when the record has no demand day.
    pub probability: Option<f64>,
    pub label: Option<Label>,
    pub demand_days: usize,
    pub success_days: usize,
    pub window: (NaiveDate, NaiveDate),
    pub spec: SystemSpec,
    pub warnings: Vec<Warning>,
}

impl ReliabilityReport {
    pub fn percent(&self) -> Option<u32> {
        self.probability.map(rounded_percent)
    }

    pub fn has_demand(&self) -> bool {
        self.demand_days > 0
    }
}

pub(crate) fn probability_of(success: usize, demand: usize) -> Option<f64> {
    (demand > 0).then(|| success as f64 / demand as f64)
}

pub(crate) fn is_short_history(history: &RainfallSeries) -> bool {
    history
        .start_date()
        .checked_add_months(Months::new(12 * HISTORY_YEARS))
        .is_some_and(|five_years_on| history.end_date() < five_years_on - chrono::Days::new(1))
}

/// Fraction of demand days met over one continuous run from an empty tank.
pub fn estimate_reliability(
    history: &RainfallSeries,
    spec: &SystemSpec,
    demand: &DemandSchedule,
) -> Result<ReliabilityReport> {
    let trajectory = simulate(history, spec, demand, 0.0)?;
    let (demand_days, success_days) = trajectory.demand_counts();
    let probability = probability_of(success_days, demand_days);
    let label = probability.map(classify).transpose()?;
    let mut warnings = Vec::new();
    if is_short_history(history) {
        warnings.push(Warning::ShortHistory {
            days: history.len(),
        });
    }
    Ok(ReliabilityReport {
        probability,
        label,
        demand_days,
        success_days,
        window: (history.start_date(), history.end_date()),
        spec: *spec,
        warnings,
    })
}

/// Reliability of the tank shrunk and grown by `fraction`, bracketing the
/// original: `[smaller, original, larger]`.
pub fn compare_tank_variants(
    history: &RainfallSeries,
    spec: &SystemSpec,
    demand: &DemandSchedule,
    fraction: f64,
) -> Result<[ReliabilityReport; 3]> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "variant fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let v = spec.tank_volume();
    let smaller = spec.with_tank_volume(v * (1.0 - fraction))?;
    let larger = spec.with_tank_volume(v * (1.0 + fraction))?;
    Ok([
        estimate_reliability(history, &smaller, demand)?,
        estimate_reliability(history, spec, demand)?,
        estimate_reliability(history, &larger, demand)?,
    ])
}
