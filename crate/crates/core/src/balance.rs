//! Daily water balance of a covered storage tank.
//!
//! Volumes are liters throughout. Rainfall depth in mm over a catchment in m²
//! converts directly to liters (1 mm over 1 m² is 1 L).
//!
//! Each day the tank receives the harvested runoff, is capped at its volume,
//! and then serves the day's demand. A day whose demand exceeds the available
//! water drains the tank to zero: the available water is supplied and the
//! remainder is counted as shortfall.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance, in liters, for ledger balance checks.
pub const BALANCE_TOLERANCE_L: f64 = 1e-6;

/// A gapless run of daily rainfall depths (mm/day) starting at `start_date`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries")]
pub struct RainfallSeries {
    start_date: NaiveDate,
    depths: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSeries {
    start_date: NaiveDate,
    depths: Vec<f64>,
}

impl TryFrom<RawSeries> for RainfallSeries {
    type Error = Error;

    fn try_from(raw: RawSeries) -> Result<Self> {
        RainfallSeries::new(raw.start_date, raw.depths)
    }
}

impl RainfallSeries {
    pub fn new(start_date: NaiveDate, depths: Vec<f64>) -> Result<Self> {
        if depths.is_empty() {
            return Err(Error::invalid("rainfall series is empty"));
        }
        if let Some((i, d)) = depths
            .iter()
            .enumerate()
            .find(|(_, d)| !d.is_finite() || **d < 0.0)
        {
            return Err(Error::invalid(format!(
                "rainfall depth {d} at day {i} is not a finite non-negative number"
            )));
        }
        if start_date.checked_add_days(Days::new(depths.len() as u64)).is_none() {
            return Err(Error::invalid("rainfall series runs past the calendar range"));
        }
        Ok(Self { start_date, depths })
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    /// Date of the last entry.
    pub fn end_date(&self) -> NaiveDate {
        self.date_at(self.depths.len() - 1)
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start_date + Days::new(index as u64)
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    /// Depth on `date`, if the series covers it.
    pub fn depth_on(&self, date: NaiveDate) -> Option<f64> {
        let offset = (date - self.start_date).num_days();
        usize::try_from(offset).ok().and_then(|i| self.depths.get(i).copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.depths
            .iter()
            .enumerate()
            .map(move |(i, d)| (self.date_at(i), *d))
    }
}

/// Catchment area (m²), runoff coefficient and tank volume (L).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", rename_all = "camelCase")]
pub struct SystemSpec {
    #[serde(rename = "catchmentAreaM2")]
    catchment_area: f64,
    runoff_coeff: f64,
    #[serde(rename = "tankVolumeL")]
    tank_volume: f64,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawSpec {
    #[serde(rename = "catchmentAreaM2")]
    catchment_area: f64,
    runoff_coeff: f64,
    #[serde(rename = "tankVolumeL")]
    tank_volume: f64,
}

impl TryFrom<RawSpec> for SystemSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        SystemSpec::new(raw.catchment_area, raw.runoff_coeff, raw.tank_volume)
    }
}

impl SystemSpec {
    pub fn new(catchment_area: f64, runoff_coeff: f64, tank_volume: f64) -> Result<Self> {
        if !(catchment_area.is_finite() && catchment_area > 0.0) {
            return Err(Error::invalid(format!(
                "catchment area must be positive, got {catchment_area}"
            )));
        }
        if !(0.0..=1.0).contains(&runoff_coeff) {
            return Err(Error::invalid(format!(
                "runoff coefficient must lie in [0, 1], got {runoff_coeff}"
            )));
        }
        if !(tank_volume.is_finite() && tank_volume > 0.0) {
            return Err(Error::invalid(format!(
                "tank volume must be positive, got {tank_volume}"
            )));
        }
        Ok(Self {
            catchment_area,
            runoff_coeff,
            tank_volume,
        })
    }

    pub fn catchment_area(&self) -> f64 {
        self.catchment_area
    }

    pub fn runoff_coeff(&self) -> f64 {
        self.runoff_coeff
    }

    pub fn tank_volume(&self) -> f64 {
        self.tank_volume
    }

    pub fn with_tank_volume(&self, tank_volume: f64) -> Result<Self> {
        Self::new(self.catchment_area, self.runoff_coeff, tank_volume)
    }

    pub fn with_runoff_coeff(&self, runoff_coeff: f64) -> Result<Self> {
        Self::new(self.catchment_area, runoff_coeff, self.tank_volume)
    }

    pub fn with_catchment_area(&self, catchment_area: f64) -> Result<Self> {
        Self::new(catchment_area, self.runoff_coeff, self.tank_volume)
    }
}

/// Daily water demand in liters/day.
///
/// A constant base value applies to every day without a dated entry. A
/// purely dated schedule has a base of zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemandSchedule {
    base: f64,
    dated: BTreeMap<NaiveDate, f64>,
}

impl DemandSchedule {
    pub fn constant(liters_per_day: f64) -> Result<Self> {
        check_demand(liters_per_day)?;
        Ok(Self {
            base: liters_per_day,
            dated: BTreeMap::new(),
        })
    }

    /// Demand only on the listed dates; every other day is zero.
    pub fn dated(by_date: BTreeMap<NaiveDate, f64>) -> Result<Self> {
        Self::constant_with_overrides(0.0, by_date)
    }

    pub fn constant_with_overrides(base: f64, overrides: BTreeMap<NaiveDate, f64>) -> Result<Self> {
        check_demand(base)?;
        for (date, d) in &overrides {
            check_demand(*d).map_err(|e| Error::invalid(format!("{date}: {e}")))?;
        }
        Ok(Self {
            base,
            dated: overrides,
        })
    }

    pub fn at(&self, date: NaiveDate) -> f64 {
        self.dated.get(&date).copied().unwrap_or(self.base)
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn overrides(&self) -> &BTreeMap<NaiveDate, f64> {
        &self.dated
    }

    pub fn is_constant(&self) -> bool {
        self.dated.is_empty()
    }

    /// Every value multiplied by `factor` (≥ 0).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(Error::invalid(format!("demand scale {factor} must be non-negative")));
        }
        Ok(Self {
            base: self.base * factor,
            dated: self.dated.iter().map(|(d, v)| (*d, v * factor)).collect(),
        })
    }

    /// Typical demand of a demand day: the base if positive, otherwise the
    /// mean of the positive dated values.
    pub fn typical_daily(&self) -> f64 {
        if self.base > 0.0 {
            return self.base;
        }
        let positive: Vec<f64> = self.dated.values().copied().filter(|v| *v > 0.0).collect();
        if positive.is_empty() {
            0.0
        } else {
            positive.iter().sum::<f64>() / positive.len() as f64
        }
    }
}

fn check_demand(d: f64) -> Result<()> {
    if d.is_finite() && d >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("demand {d} must be a finite non-negative number")))
    }
}

/// Outcome of one simulated day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DayResult {
    pub date: NaiveDate,
    #[serde(rename = "waterStartL")]
    pub water_start: f64,
    /// Water bought and poured in before the day's harvest.
    #[serde(rename = "purchasedL")]
    pub purchased: f64,
    #[serde(rename = "harvestedL")]
    pub harvested: f64,
    #[serde(rename = "availableL")]
    pub available: f64,
    #[serde(rename = "suppliedL")]
    pub supplied: f64,
    #[serde(rename = "overflowL")]
    pub overflow: f64,
    #[serde(rename = "shortfallL")]
    pub shortfall: f64,
    #[serde(rename = "waterEndL")]
    pub water_end: f64,
    #[serde(rename = "demandL")]
    pub demand: f64,
    pub met: bool,
    pub demand_day: bool,
}

impl DayResult {
    /// inflow − outflow − storage change; zero up to rounding.
    pub fn balance_residual(&self) -> f64 {
        self.water_start + self.purchased + self.harvested
            - self.overflow
            - self.supplied
            - self.water_end
    }
}

/// Runoff volume in liters from `rain_mm` of rainfall.
pub fn harvest_volume(rain_mm: f64, spec: &SystemSpec) -> Result<f64> {
    if !(rain_mm.is_finite() && rain_mm >= 0.0) {
        return Err(Error::invalid(format!(
            "rainfall {rain_mm} mm must be a finite non-negative number"
        )));
    }
    Ok(spec.runoff_coeff * rain_mm * spec.catchment_area)
}

/// Advances the tank by one day.
pub fn step(water_start: f64, harvested: f64, demand: f64, tank_volume: f64) -> Result<DayResult> {
    for (name, v) in [
        ("water_start", water_start),
        ("harvested", harvested),
        ("demand", demand),
        ("tank_volume", tank_volume),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::invalid(format!("{name} = {v} must be finite and non-negative")));
        }
    }
    if water_start > tank_volume {
        return Err(Error::invalid(format!(
            "water_start {water_start} L exceeds tank volume {tank_volume} L"
        )));
    }
    Ok(advance(NaiveDate::MIN, water_start, 0.0, harvested, demand, tank_volume))
}

/// Unchecked day update; callers guarantee the `step` preconditions.
pub(crate) fn advance(
    date: NaiveDate,
    water_start: f64,
    purchased: f64,
    harvested: f64,
    demand: f64,
    tank_volume: f64,
) -> DayResult {
    let inflow_total = water_start + purchased + harvested;
    let available = inflow_total.min(tank_volume);
    let overflow = inflow_total - available;
    let (supplied, shortfall, water_end, met) = if available - demand >= 0.0 {
        (demand, 0.0, available - demand, true)
    } else {
        (available, demand - available, 0.0, false)
    };
    DayResult {
        date,
        water_start,
        purchased,
        harvested,
        available,
        supplied,
        overflow,
        shortfall,
        water_end,
        demand,
        met,
        demand_day: demand > 0.0,
    }
}

/// The evolved tank state over a run of days.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Trajectory {
    #[serde(rename = "initialWaterL")]
    pub initial_water: f64,
    pub days: Vec<DayResult>,
}

/// Summed ledger over a trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LedgerTotals {
    pub purchased: f64,
    pub harvested: f64,
    pub supplied: f64,
    pub overflow: f64,
    pub shortfall: f64,
}

impl Trajectory {
    pub fn final_water(&self) -> f64 {
        self.days.last().map_or(self.initial_water, |d| d.water_end)
    }

    pub fn water_levels(&self) -> Vec<f64> {
        self.days.iter().map(|d| d.water_end).collect()
    }

    /// (demand days, demand days met)
    pub fn demand_counts(&self) -> (usize, usize) {
        self.days
            .iter()
            .filter(|d| d.demand_day)
            .fold((0, 0), |(n, s), d| (n + 1, s + usize::from(d.met)))
    }

    /// Column sums, accumulated with Neumaier compensation so multi-year
    /// runs still balance to [`BALANCE_TOLERANCE_L`].
    pub fn totals(&self) -> LedgerTotals {
        let mut sums = [CompensatedSum::default(); 5];
        for d in &self.days {
            for (sum, v) in sums.iter_mut().zip([d.purchased, d.harvested, d.supplied, d.overflow, d.shortfall]) {
                sum.add(v);
            }
        }
        let [purchased, harvested, supplied, overflow, shortfall] = sums.map(|s| s.value());
        LedgerTotals {
            purchased,
            harvested,
            supplied,
            overflow,
            shortfall,
        }
    }

    /// initial + inflow − outflow − final, summed over the whole run.
    pub fn balance_residual(&self) -> f64 {
        let t = self.totals();
        let mut r = CompensatedSum::default();
        for v in [self.initial_water, t.purchased, t.harvested, -t.overflow, -t.supplied, -self.final_water()] {
            r.add(v);
        }
        r.value()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// One day of forcing for [`run`].
#[derive(Debug, Clone, Copy)]
pub(crate) struct Forcing {
    pub date: NaiveDate,
    pub rain_mm: f64,
    pub demand: f64,
    pub purchased: f64,
}

/// Folds [`advance`] over already-validated forcing.
pub(crate) fn run(
    spec: &SystemSpec,
    initial_water: f64,
    forcing: impl IntoIterator<Item = Forcing>,
) -> Trajectory {
    let factor = spec.runoff_coeff * spec.catchment_area;
    let mut water = initial_water;
    let days = forcing
        .into_iter()
        .map(|f| {
            let day = advance(
                f.date,
                water,
                f.purchased,
                factor * f.rain_mm,
                f.demand,
                spec.tank_volume,
            );
            water = day.water_end;
            day
        })
        .collect();
    Trajectory {
        initial_water,
        days,
    }
}

pub(crate) fn check_initial_water(initial_water: f64, spec: &SystemSpec) -> Result<()> {
    if initial_water.is_finite() && (0.0..=spec.tank_volume).contains(&initial_water) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "initial water {initial_water} L must lie within [0, {}] L",
            spec.tank_volume
        )))
    }
}

/// Evolves the tank over every day of `series` starting from `initial_water`.
pub fn simulate(
    series: &RainfallSeries,
    spec: &SystemSpec,
    demand: &DemandSchedule,
    initial_water: f64,
) -> Result<Trajectory> {
    if series.is_empty() {
        return Err(Error::invalid("rainfall series is empty"));
    }
    check_initial_water(initial_water, spec)?;
    Ok(run(
        spec,
        initial_water,
        series.iter().map(|(date, rain_mm)| Forcing {
            date,
            rain_mm,
            demand: demand.at(date),
            purchased: 0.0,
        }),
    ))
}
