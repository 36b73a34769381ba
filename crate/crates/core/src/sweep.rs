//! Reliability curves over tank volume or runoff coefficient.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::{DemandSchedule, RainfallSeries, SystemSpec};
use crate::error::{Error, Result};
use crate::reliability::{estimate_reliability, Label};

pub const DEFAULT_OPTIMUM_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Parameter {
    TankVolume,
    RunoffCoeff,
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parameter::TankVolume => "tank",
            Parameter::RunoffCoeff => "runoff",
        })
    }
}

impl FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tank" | "tank_volume" | "tankVolume" => Ok(Parameter::TankVolume),
            "runoff" | "k" | "runoff_coeff" | "runoffCoeff" => Ok(Parameter::RunoffCoeff),
            other => Err(Error::invalid(format!(
                "unknown sweep parameter {other:?} (expected `tank` or `runoff`)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub value: f64,
    pub probability: Option<f64>,
    pub label: Option<Label>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityCurve {
    pub parameter: Parameter,
    pub points: Vec<CurvePoint>,
    /// Base system; the swept field is overridden point by point.
    pub fixed: SystemSpec,
    pub demand: DemandSchedule,
}

impl ReliabilityCurve {
    /// Plot-ready CSV: `parameter_value,probability,label`.
    ///
    /// Points without demand days leave probability and label empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter_value,probability,label\n");
        for p in &self.points {
            let prob = p.probability.map(|v| v.to_string()).unwrap_or_default();
            let label = p.label.map(|l| l.as_str()).unwrap_or_default();
            out.push_str(&format!("{},{prob},{label}\n", p.value));
        }
        out
    }
}

fn spec_at(base: &SystemSpec, parameter: Parameter, value: f64) -> Result<SystemSpec> {
    match parameter {
        Parameter::TankVolume => base.with_tank_volume(value),
        Parameter::RunoffCoeff => base.with_runoff_coeff(value),
    }
}

/// One reliability estimate per entry of `values`, evaluated in parallel.
pub fn reliability_curve(
    history: &RainfallSeries,
    base_spec: &SystemSpec,
    demand: &DemandSchedule,
    parameter: Parameter,
    values: &[f64],
) -> Result<ReliabilityCurve> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    let specs = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if i > 0 && values[i - 1].partial_cmp(v) != Some(std::cmp::Ordering::Less) {
                return Err(Error::invalid(format!(
                    "sweep value #{i} ({v}) is not strictly greater than the previous one"
                )));
            }
            spec_at(base_spec, parameter, *v)
                .map_err(|e| Error::invalid(format!("sweep value #{i} ({v}): {e}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let points = specs
        .par_iter()
        .zip(values.par_iter())
        .map(|(spec, value)| {
            estimate_reliability(history, spec, demand).map(|r| CurvePoint {
                value: *value,
                probability: r.probability,
                label: r.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ReliabilityCurve {
        parameter,
        points,
        fixed: *base_spec,
        demand: demand.clone(),
    })
}

/// Smallest swept volume whose reliability is within `tolerance` of the
/// best on the curve.
pub fn optimal_tank(curve: &ReliabilityCurve, tolerance: f64) -> Result<(f64, f64)> {
    if curve.parameter != Parameter::TankVolume {
        return Err(Error::invalid("optimal tank needs a tank-volume curve"));
    }
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::invalid(format!("tolerance {tolerance} must be non-negative")));
    }
    if curve.points.is_empty() {
        return Err(Error::invalid("curve is empty"));
    }
    let scored: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter_map(|p| p.probability.map(|prob| (p.value, prob)))
        .collect();
    if scored.is_empty() {
        return Err(Error::NoDemand);
    }
    let best = scored.iter().map(|(_, p)| *p).fold(f64::NEG_INFINITY, f64::max);
    scored
        .into_iter()
        .find(|(_, p)| *p >= best - tolerance)
        .ok_or_else(|| Error::invalid("curve has no point near its maximum"))
}

/// One tank-volume curve per runoff coefficient, on a shared volume grid.
pub fn runoff_comparison(
    history: &RainfallSeries,
    base_spec: &SystemSpec,
    demand: &DemandSchedule,
    k_values: &[f64],
    tank_values: &[f64],
) -> Result<Vec<ReliabilityCurve>> {
    if k_values.is_empty() {
        return Err(Error::invalid("runoff comparison needs at least one coefficient"));
    }
    k_values
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let spec = base_spec
                .with_runoff_coeff(*k)
                .map_err(|e| Error::invalid(format!("runoff value #{i} ({k}): {e}")))?;
            reliability_curve(history, &spec, demand, Parameter::TankVolume, tank_values)
        })
        .collect()
}

/// `count` log-spaced tank volumes from one day's demand to 120 days' demand.
pub fn default_tank_grid(daily_demand: f64, count: usize) -> Result<Vec<f64>> {
    if !(daily_demand.is_finite() && daily_demand > 0.0) {
        return Err(Error::invalid("default tank grid needs a positive daily demand"));
    }
    if count < 2 {
        return Err(Error::invalid("default tank grid needs at least two points"));
    }
    let (lo, hi) = (daily_demand.ln(), (120.0 * daily_demand).ln());
    let step = (hi - lo) / (count - 1) as f64;
    let mut grid: Vec<f64> = (0..count).map(|i| (lo + step * i as f64).exp()).collect();
    grid[0] = daily_demand;
    grid[count - 1] = 120.0 * daily_demand;
    Ok(grid)
}
