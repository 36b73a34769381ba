//! Thirty-day outlook from an observed tank level.
//!
//! Every past year of the rainfall record contributes one replay of the
//! calendar window that starts on the forecast's month and day. Each replay
//! starts from the observed water, and success and demand-day counts are
//! pooled across all replays before dividing.
//!
//! Windows are aligned on a 365-day calendar: February 29 is dropped from
//! the record, and a forecast starting on February 29 aligns with March 1.

use std::collections::BTreeMap;

use chrono::{Datelike, Days, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::{self, check_initial_water, DemandSchedule, Forcing, RainfallSeries, SystemSpec, Trajectory};
use crate::error::{Error, Result};
use crate::reliability::{classify, probability_of, Label};

pub const DEFAULT_HORIZON_DAYS: usize = 30;

/// A drought response applied before the outlook is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Strategy {
    /// Replace the demand on every day of the horizon.
    #[serde(rename_all = "camelCase")]
    DemandOverride { liters_per_day: f64 },
    /// Pour `volume_l` into the tank before the harvest of day `on_day`.
    #[serde(rename_all = "camelCase")]
    Purchase {
        #[serde(rename = "volumeL")]
        volume_l: f64,
        on_day: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRequest {
    pub start_date: NaiveDate,
    pub observed_water: f64,
    pub horizon_days: usize,
    pub spec: SystemSpec,
    pub demand: DemandSchedule,
    pub strategies: Vec<Strategy>,
}

impl ForecastRequest {
    pub fn new(start_date: NaiveDate, observed_water: f64, spec: SystemSpec, demand: DemandSchedule) -> Self {
        Self {
            start_date,
            observed_water,
            horizon_days: DEFAULT_HORIZON_DAYS,
            spec,
            demand,
            strategies: Vec::new(),
        }
    }

    pub fn with_horizon(mut self, days: usize) -> Self {
        self.horizon_days = days;
        self
    }

    pub fn with_strategies(mut self, strategies: impl IntoIterator<Item = Strategy>) -> Self {
        self.strategies.extend(strategies);
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_initial_water(self.observed_water, &self.spec)?;
        if self.horizon_days == 0 {
            return Err(Error::invalid("forecast horizon must be at least one day"));
        }
        if self.start_date.checked_add_days(Days::new(self.horizon_days as u64)).is_none() {
            return Err(Error::invalid("forecast horizon runs past the calendar range"));
        }
        let mut overrides = 0;
        for s in &self.strategies {
            match *s {
                Strategy::DemandOverride { liters_per_day } => {
                    overrides += 1;
                    if !(liters_per_day.is_finite() && liters_per_day >= 0.0) {
                        return Err(Error::invalid(format!(
                            "demand override {liters_per_day} L/day must be non-negative"
                        )));
                    }
                }
                Strategy::Purchase { volume_l, on_day } => {
                    if !(volume_l.is_finite() && volume_l > 0.0) {
                        return Err(Error::invalid(format!(
                            "purchase volume {volume_l} L must be positive"
                        )));
                    }
                    if on_day >= self.horizon_days {
                        return Err(Error::invalid(format!(
                            "purchase on day {on_day} is outside the {}-day horizon",
                            self.horizon_days
                        )));
                    }
                }
            }
        }
        if overrides > 1 {
            return Err(Error::invalid("at most one demand override may be given"));
        }
        Ok(())
    }

    /// Calendar dates of the forecast horizon.
    pub fn horizon_dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.horizon_days).map(|i| self.start_date + Days::new(i as u64))
    }
}

/// A request with its strategies resolved.
///
/// The demand override is written into the schedule, purchases on day 0 are
/// folded into the starting water, and later purchases remain as
/// strategies for the replay to apply on their day.
#[derive(Debug, Clone, PartialEq)]
pub struct AppliedRequest {
    pub request: ForecastRequest,
    /// Day-0 purchase volume that did not fit in the tank.
    pub initial_purchase_overflow: f64,
}

pub fn apply_strategies(request: &ForecastRequest) -> Result<AppliedRequest> {
    request.validate()?;
    let mut resolved = request.clone();
    resolved.strategies.clear();
    let mut initial_purchase = 0.0;
    for s in &request.strategies {
        match *s {
            Strategy::DemandOverride { liters_per_day } => {
                let mut overrides = request.demand.overrides().clone();
                overrides.extend(request.horizon_dates().map(|d| (d, liters_per_day)));
                resolved.demand = DemandSchedule::constant_with_overrides(request.demand.base(), overrides)?;
            }
            Strategy::Purchase { volume_l, on_day: 0 } => initial_purchase += volume_l,
            purchase @ Strategy::Purchase { .. } => resolved.strategies.push(purchase),
        }
    }
    let filled = request.observed_water + initial_purchase;
    let capacity = request.spec.tank_volume();
    resolved.observed_water = filled.min(capacity);
    Ok(AppliedRequest {
        request: resolved,
        initial_purchase_overflow: (filled - capacity).max(0.0),
    })
}

/// One past year's replay of the forecast window.
#[derive(Debug, Clone, PartialEq)]
pub struct YearReplay {
    /// Calendar year in which the replayed window starts.
    pub year: i32,
    pub demand_days: usize,
    pub success_days: usize,
    pub end_water: f64,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastReport {
    pub probability: Option<f64>,
    pub label: Option<Label>,
    pub success_days: usize,
    pub demand_days: usize,
    pub per_year_end_water: BTreeMap<i32, f64>,
    /// Smallest end-of-window water over all replays.
    pub min_end_water: f64,
    pub years_used: Vec<i32>,
    /// Years whose window is not fully covered by the record.
    pub years_skipped: Vec<i32>,
    /// Starting water after day-0 purchases.
    pub effective_initial_water: f64,
    pub initial_purchase_overflow: f64,
    pub replays: Vec<YearReplay>,
}

/// Day of year on a 365-day calendar (0-based). February 29 maps to March 1.
fn noleap_ordinal(date: NaiveDate) -> i64 {
    let ordinal = i64::from(date.ordinal0());
    if date.leap_year() && ordinal >= 59 {
        ordinal - 1 + i64::from(date.month() == 2 && date.day() == 29)
    } else {
        ordinal
    }
}

fn is_leap_day(date: NaiveDate) -> bool {
    date.month() == 2 && date.day() == 29
}

fn noleap_index(year: i32, ordinal: i64) -> i64 {
    i64::from(year) * 365 + ordinal
}

/// The record with leap days dropped, indexed on the 365-day calendar.
struct AlignedRecord {
    first_index: i64,
    depths: Vec<f64>,
    first_year: i32,
    last_year: i32,
}

impl AlignedRecord {
    fn new(history: &RainfallSeries) -> Option<Self> {
        let mut days = history.iter().filter(|(d, _)| !is_leap_day(*d)).peekable();
        let (first_date, _) = *days.peek()?;
        Some(Self {
            first_index: noleap_index(first_date.year(), noleap_ordinal(first_date)),
            depths: days.map(|(_, r)| r).collect(),
            first_year: history.start_date().year(),
            last_year: history.end_date().year(),
        })
    }

    fn window(&self, year: i32, ordinal: i64, len: usize) -> Option<&[f64]> {
        let offset = usize::try_from(noleap_index(year, ordinal) - self.first_index).ok()?;
        self.depths.get(offset..offset.checked_add(len)?)
    }
}

/// Pools replays of every past year's window into one outlook.
pub fn forecast(history: &RainfallSeries, request: &ForecastRequest) -> Result<ForecastReport> {
    let applied = apply_strategies(request)?;
    let req = &applied.request;
    let record = AlignedRecord::new(history)
        .ok_or_else(|| Error::InsufficientHistory("rainfall record has no usable days".into()))?;

    let ordinal = noleap_ordinal(req.start_date);
    let horizon = req.horizon_days;
    let forecast_dates: Vec<NaiveDate> = req.horizon_dates().collect();
    let demands: Vec<f64> = forecast_dates.iter().map(|d| req.demand.at(*d)).collect();
    let mut purchases = vec![0.0; horizon];
    for s in &req.strategies {
        if let Strategy::Purchase { volume_l, on_day } = *s {
            purchases[on_day] += volume_l;
        }
    }

    let mut years_skipped = Vec::new();
    let mut windows = Vec::new();
    for year in record.first_year..=record.last_year {
        match record.window(year, ordinal, horizon) {
            Some(w) => windows.push((year, w)),
            None => years_skipped.push(year),
        }
    }
    if windows.is_empty() {
        return Err(Error::InsufficientHistory(format!(
            "no year in {}..{} covers the {horizon}-day window starting {}",
            history.start_date(),
            history.end_date(),
            req.start_date.format("%m-%d"),
        )));
    }

    let replays: Vec<YearReplay> = windows
        .par_iter()
        .map(|&(year, rain)| {
            let trajectory = balance::run(
                &req.spec,
                req.observed_water,
                (0..horizon).map(|i| Forcing {
                    date: replay_date(year, ordinal, i),
                    rain_mm: rain[i],
                    demand: demands[i],
                    purchased: purchases[i],
                }),
            );
            let (demand_days, success_days) = trajectory.demand_counts();
            YearReplay {
                year,
                demand_days,
                success_days,
                end_water: trajectory.final_water(),
                trajectory,
            }
        })
        .collect();

    let demand_days = replays.iter().map(|r| r.demand_days).sum();
    let success_days = replays.iter().map(|r| r.success_days).sum();
    let probability = probability_of(success_days, demand_days);
    let per_year_end_water: BTreeMap<i32, f64> = replays.iter().map(|r| (r.year, r.end_water)).collect();
    let min_end_water = replays.iter().map(|r| r.end_water).fold(f64::INFINITY, f64::min);

    Ok(ForecastReport {
        probability,
        label: probability.map(classify).transpose()?,
        success_days,
        demand_days,
        per_year_end_water,
        min_end_water,
        years_used: replays.iter().map(|r| r.year).collect(),
        years_skipped,
        effective_initial_water: req.observed_water,
        initial_purchase_overflow: applied.initial_purchase_overflow,
        replays,
    })
}

/// Historical date of day `i` of the window starting at `ordinal` in `year`.
fn replay_date(year: i32, ordinal: i64, i: usize) -> NaiveDate {
    let index = noleap_index(year, ordinal) + i as i64;
    let (y, doy) = (index.div_euclid(365), index.rem_euclid(365));
    let y = y as i32;
    // 365-day ordinal back to a real date, skipping February 29
    let jan1 = NaiveDate::from_yo_opt(y, 1).expect("year in range");
    let real = if NaiveDate::from_yo_opt(y, 366).is_some() && doy >= 59 { doy + 1 } else { doy };
    jan1 + Days::new(real as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn toy_spec() -> SystemSpec {
        SystemSpec::new(10.0, 0.5, 100.0).unwrap()
    }

    /// June 1-3 of 2022 and 2023 carry the two replay windows.
    fn two_year_history() -> RainfallSeries {
        let start = d("2022-01-01");
        let end = d("2023-12-31");
        let n = (end - start).num_days() as usize + 1;
        let mut depths = vec![0.0; n];
        for (date, rain) in [("2022-06-01", 10.0), ("2022-06-02", 0.0), ("2022-06-03", 20.0)] {
            depths[(d(date) - start).num_days() as usize] = rain;
        }
        RainfallSeries::new(start, depths).unwrap()
    }

    #[test]
    fn noleap_ordinals() {
        assert_eq!(noleap_ordinal(d("2023-03-01")), 59);
        assert_eq!(noleap_ordinal(d("2024-03-01")), 59);
        assert_eq!(noleap_ordinal(d("2024-02-29")), 59);
        assert_eq!(noleap_ordinal(d("2024-02-28")), 58);
        assert_eq!(noleap_ordinal(d("2024-12-31")), 364);
    }

    #[test]
    fn replay_dates_skip_leap_day() {
        let ord = noleap_ordinal(d("2024-02-27"));
        let dates: Vec<_> = (0..4).map(|i| replay_date(2024, ord, i)).collect();
        assert_eq!(dates, vec![d("2024-02-27"), d("2024-02-28"), d("2024-03-01"), d("2024-03-02")]);
        assert_eq!(replay_date(2022, noleap_ordinal(d("2022-12-31")), 1), d("2023-01-01"));
    }

    #[test]
    fn two_year_toy() {
        let req = ForecastRequest::new(d("2024-06-01"), 40.0, toy_spec(), DemandSchedule::constant(30.0).unwrap())
            .with_horizon(3);
        let r = forecast(&two_year_history(), &req).unwrap();
        assert_eq!(r.years_used, vec![2022, 2023]);
        assert_eq!((r.success_days, r.demand_days), (4, 6));
        assert_eq!(r.probability, Some(4.0 / 6.0));
        assert_eq!(r.label, Some(Label::Fair));
        assert_eq!(r.per_year_end_water[&2022], 70.0);
        assert_eq!(r.per_year_end_water[&2023], 0.0);
        assert_eq!(r.min_end_water, 0.0);
    }

    #[test]
    fn enough_storage_always_succeeds() {
        let spec = SystemSpec::new(150.0, 0.8, 10_000.0).unwrap();
        let req = ForecastRequest::new(d("2024-06-01"), 3000.0, spec, DemandSchedule::constant(100.0).unwrap());
        let r = forecast(&two_year_history(), &req).unwrap();
        assert_eq!(r.probability, Some(1.0));
    }

    #[test]
    fn zero_demand_reports_harvest() {
        let req = ForecastRequest::new(d("2024-06-01"), 0.0, toy_spec(), DemandSchedule::constant(0.0).unwrap())
            .with_horizon(3);
        let r = forecast(&two_year_history(), &req).unwrap();
        assert_eq!(r.probability, None);
        assert_eq!(r.per_year_end_water[&2022], 100.0);
        assert_eq!(r.min_end_water, 0.0);
    }

    #[test]
    fn window_crossing_new_year() {
        let req = ForecastRequest::new(d("2024-12-15"), 0.0, toy_spec(), DemandSchedule::constant(1.0).unwrap());
        let r = forecast(&two_year_history(), &req).unwrap();
        assert_eq!(r.years_used, vec![2022]);
        assert_eq!(r.years_skipped, vec![2023]);
    }

    #[test]
    fn insufficient_history() {
        let s = RainfallSeries::new(d("2022-01-01"), vec![0.0; 10]).unwrap();
        let req = ForecastRequest::new(d("2024-06-01"), 0.0, toy_spec(), DemandSchedule::constant(1.0).unwrap());
        assert!(matches!(forecast(&s, &req), Err(Error::InsufficientHistory(_))));
    }

    #[test]
    fn no_strategies_is_identity() {
        let req = ForecastRequest::new(d("2024-06-01"), 40.0, toy_spec(), DemandSchedule::constant(30.0).unwrap());
        let applied = apply_strategies(&req).unwrap();
        assert_eq!(applied.request, req);
        assert_eq!(applied.initial_purchase_overflow, 0.0);
    }

    #[test]
    fn purchase_below_cap() {
        let spec = SystemSpec::new(166.0, 0.3, 10_000.0).unwrap();
        let req = ForecastRequest::new(d("2024-06-01"), 2000.0, spec, DemandSchedule::constant(100.0).unwrap())
            .with_strategies([Strategy::Purchase { volume_l: 1000.0, on_day: 0 }]);
        let applied = apply_strategies(&req).unwrap();
        assert_eq!(applied.request.observed_water, 3000.0);
        assert!(applied.request.strategies.is_empty());
    }

    #[test]
    fn purchase_over_headroom() {
        let req = ForecastRequest::new(d("2024-06-01"), 90.0, toy_spec(), DemandSchedule::constant(30.0).unwrap())
            .with_strategies([Strategy::Purchase { volume_l: 50.0, on_day: 0 }]);
        let applied = apply_strategies(&req).unwrap();
        assert_eq!(applied.request.observed_water, 100.0);
        assert_eq!(applied.initial_purchase_overflow, 40.0);
    }

    #[test]
    fn later_purchase_lands_on_its_day() {
        let req = ForecastRequest::new(d("2024-06-01"), 40.0, toy_spec(), DemandSchedule::constant(30.0).unwrap())
            .with_horizon(3)
            .with_strategies([Strategy::Purchase { volume_l: 50.0, on_day: 1 }]);
        let r = forecast(&two_year_history(), &req).unwrap();
        let dry = &r.replays[1].trajectory;
        // 40 - 30 = 10; 10 + 50 - 30 = 30; 30 - 30 = 0
        assert_eq!(dry.water_levels(), vec![10.0, 30.0, 0.0]);
        assert_eq!(dry.days[1].purchased, 50.0);
        assert_eq!(r.replays[1].success_days, 3);
    }

    #[test]
    fn demand_override_replaces_horizon_only() {
        let req = ForecastRequest::new(d("2024-06-01"), 0.0, toy_spec(), DemandSchedule::constant(100.0).unwrap())
            .with_horizon(2)
            .with_strategies([Strategy::DemandOverride { liters_per_day: 75.0 }]);
        let applied = apply_strategies(&req).unwrap().request;
        assert_eq!(applied.demand.at(d("2024-06-01")), 75.0);
        assert_eq!(applied.demand.at(d("2024-06-02")), 75.0);
        assert_eq!(applied.demand.at(d("2024-06-03")), 100.0);
    }

    #[test]
    fn strategy_validation() {
        let base = ForecastRequest::new(d("2024-06-01"), 0.0, toy_spec(), DemandSchedule::constant(1.0).unwrap());
        let beyond = base.clone().with_strategies([Strategy::Purchase { volume_l: 10.0, on_day: 30 }]);
        assert!(apply_strategies(&beyond).is_err());
        let empty = base.clone().with_strategies([Strategy::Purchase { volume_l: 0.0, on_day: 0 }]);
        assert!(apply_strategies(&empty).is_err());
        let twice = base.with_strategies([
            Strategy::DemandOverride { liters_per_day: 1.0 },
            Strategy::DemandOverride { liters_per_day: 2.0 },
        ]);
        assert!(apply_strategies(&twice).is_err());
    }

    #[test]
    fn strategy_json_shape() {
        let s: Vec<Strategy> = serde_json::from_str(
            r#"[{"type":"demandOverride","litersPerDay":75},{"type":"purchase","volumeL":1000,"onDay":0}]"#,
        )
        .unwrap();
        assert_eq!(
            s,
            vec![
                Strategy::DemandOverride { liters_per_day: 75.0 },
                Strategy::Purchase { volume_l: 1000.0, on_day: 0 }
            ]
        );
    }
}
