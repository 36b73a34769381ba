//! Daily water-balance simulation of rainwater harvesting systems with a
//! covered storage tank.
//!
//! From a record of daily rainfall the crate estimates how reliably a
//! system (catchment area, runoff coefficient, tank volume) meets a daily
//! demand, forecasts the coming weeks from an observed tank level, sweeps
//! tank sizes and runoff coefficients, and evaluates drought responses such
//! as cutting demand or buying water.

pub mod balance;
pub mod cli;
pub mod config;
pub mod error;
pub mod forecast;
pub mod rainfall;
pub mod records;
pub mod reliability;
pub mod service;
pub mod sweep;
pub mod views;

pub use balance::{harvest_volume, simulate, step, DayResult, DemandSchedule, RainfallSeries, SystemSpec, Trajectory};
pub use error::{Error, Result};
pub use forecast::{apply_strategies, forecast, ForecastReport, ForecastRequest, Strategy};
pub use reliability::{classify, compare_tank_variants, estimate_reliability, Label, ReliabilityReport};
pub use sweep::{optimal_tank, reliability_curve, runoff_comparison, Parameter, ReliabilityCurve};
