//! Stable JSON shapes shared by the CLI's `--json` output and the HTTP API.
//!
//! Field names are lowerCamelCase, volumes are liters with an `L` suffix,
//! and probabilities are fractions rounded to four decimals.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::balance::{DemandSchedule, RainfallSeries, SystemSpec};
use crate::forecast::ForecastReport;
use crate::reliability::{Label, ReliabilityReport, Warning};
use crate::sweep::{Parameter, ReliabilityCurve};

pub fn round_probability(p: f64) -> f64 {
    (p * 10_000.0).round() / 10_000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReliabilityView {
    pub probability: Option<f64>,
    pub percent: Option<u32>,
    pub label: Option<Label>,
    pub success_days: usize,
    pub demand_days: usize,
    pub no_demand: bool,
    #[serde(rename = "tankVolumeL")]
    pub tank_volume: f64,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub warnings: Vec<Warning>,
}

impl From<&ReliabilityReport> for ReliabilityView {
    fn from(r: &ReliabilityReport) -> Self {
        Self {
            probability: r.probability.map(round_probability),
            percent: r.percent(),
            label: r.label,
            success_days: r.success_days,
            demand_days: r.demand_days,
            no_demand: !r.has_demand(),
            tank_volume: r.spec.tank_volume(),
            window_start: r.window.0,
            window_end: r.window.1,
            warnings: r.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VariantsView {
    pub fraction: f64,
    pub variants: Vec<ReliabilityView>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ForecastView {
    pub start_date: NaiveDate,
    pub horizon_days: usize,
    pub probability: Option<f64>,
    pub percent: Option<u32>,
    pub label: Option<Label>,
    pub success_days: usize,
    pub demand_days: usize,
    pub no_demand: bool,
    #[serde(rename = "minEndWaterL")]
    pub min_end_water: f64,
    #[serde(rename = "perYearEndWaterL")]
    pub per_year_end_water: BTreeMap<String, f64>,
    pub years_used: Vec<i32>,
    pub years_skipped: Vec<i32>,
    #[serde(rename = "effectiveInitialWaterL")]
    pub effective_initial_water: f64,
    #[serde(rename = "initialPurchaseOverflowL")]
    pub initial_purchase_overflow: f64,
}

impl ForecastView {
    pub fn new(start_date: NaiveDate, horizon_days: usize, r: &ForecastReport) -> Self {
        Self {
            start_date,
            horizon_days,
            probability: r.probability.map(round_probability),
            percent: r.probability.map(crate::reliability::rounded_percent),
            label: r.label,
            success_days: r.success_days,
            demand_days: r.demand_days,
            no_demand: r.demand_days == 0,
            min_end_water: r.min_end_water,
            per_year_end_water: r
                .per_year_end_water
                .iter()
                .map(|(y, w)| (y.to_string(), *w))
                .collect(),
            years_used: r.years_used.clone(),
            years_skipped: r.years_skipped.clone(),
            effective_initial_water: r.effective_initial_water,
            initial_purchase_overflow: r.initial_purchase_overflow,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CurvePointView {
    pub value: f64,
    pub probability: Option<f64>,
    pub label: Option<Label>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimumView {
    #[serde(rename = "volumeL")]
    pub volume: f64,
    pub probability: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CurveView {
    pub parameter: String,
    /// Runoff coefficient held fixed on a tank-volume curve.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runoff_coeff: Option<f64>,
    pub points: Vec<CurvePointView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimum: Option<OptimumView>,
}

impl CurveView {
    pub fn new(curve: &ReliabilityCurve, optimum: Option<(f64, f64)>, tolerance: f64) -> Self {
        Self {
            parameter: curve.parameter.to_string(),
            runoff_coeff: (curve.parameter == Parameter::TankVolume).then(|| curve.fixed.runoff_coeff()),
            points: curve
                .points
                .iter()
                .map(|p| CurvePointView {
                    value: p.value,
                    probability: p.probability.map(round_probability),
                    label: p.label,
                })
                .collect(),
            optimum: optimum.map(|(volume, probability)| OptimumView {
                volume,
                probability: round_probability(probability),
                tolerance,
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DemandView {
    #[serde(rename = "constantLPerDay")]
    pub constant: f64,
    #[serde(rename = "datedLPerDay")]
    pub dated: BTreeMap<NaiveDate, f64>,
}

impl From<&DemandSchedule> for DemandView {
    fn from(d: &DemandSchedule) -> Self {
        Self {
            constant: d.base(),
            dated: d.overrides().clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RainfallSummary {
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub days: usize,
}

impl From<&RainfallSeries> for RainfallSummary {
    fn from(s: &RainfallSeries) -> Self {
        Self {
            start_date: s.start_date(),
            end_date: s.end_date(),
            days: s.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SystemView {
    pub name: String,
    #[serde(flatten)]
    pub spec: SystemSpec,
    #[serde(rename = "tankVolumeM3")]
    pub tank_volume_m3: f64,
    pub demand: DemandView,
    pub rainfall: Option<RainfallSummary>,
}
