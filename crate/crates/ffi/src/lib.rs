//! C ABI for the raintank simulator.
//!
//! Handles are opaque pointers created by `rt_*_new` functions and released by
//! the matching `rt_*_free`. Every fallible call returns an [`RtStatus`]; on a
//! non-zero status the message is available from [`rt_last_error_message`] on
//! the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chrono::NaiveDate;
use raintank::rainfall::parse_csv;
use raintank::{classify, estimate_reliability, forecast, DemandSchedule, ForecastRequest, Label, RainfallSeries, SystemSpec};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    MalformedCsv = 4,
    InsufficientHistory = 5,
    NoDemand = 6,
    Panic = 7,
}

/// Reliability rating band. `RT_LABEL_NONE` when no day had demand.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtLabel {
    None = 0,
    Unlikely = 1,
    Occasionally = 2,
    Fair = 3,
    Good = 4,
    VeryGood = 5,
}

impl From<Label> for RtLabel {
    fn from(label: Label) -> Self {
        match label {
            Label::Unlikely => RtLabel::Unlikely,
            Label::Occasionally => RtLabel::Occasionally,
            Label::Fair => RtLabel::Fair,
            Label::Good => RtLabel::Good,
            Label::VeryGood => RtLabel::VeryGood,
        }
    }
}

/// Reliability of a system against a rainfall record. `probability` is NaN
/// when `demand_days` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RtReliability {
    pub probability: f64,
    pub label: RtLabel,
    pub demand_days: u64,
    pub success_days: u64,
    pub short_history: bool,
}

/// Pooled outcome of a forecast replayed over every historical year.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RtForecast {
    pub probability: f64,
    pub label: RtLabel,
    pub demand_days: u64,
    pub success_days: u64,
    pub min_end_water_l: f64,
    pub years_used: u32,
    pub years_skipped: u32,
}

/// Daily rainfall record.
pub struct RtRainfall(RainfallSeries);

/// Catchment, runoff coefficient and tank.
pub struct RtSystem(SystemSpec);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(text).ok());
}

fn fail(status: RtStatus, message: impl Into<String>) -> RtStatus {
    set_error(message);
    status
}

fn core_status(err: &raintank::Error) -> RtStatus {
    match err {
        raintank::Error::InvalidInput(_) => RtStatus::InvalidInput,
        raintank::Error::InsufficientHistory(_) => RtStatus::InsufficientHistory,
        raintank::Error::NoDemand => RtStatus::NoDemand,
    }
}

fn guard(body: impl FnOnce() -> RtStatus) -> RtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(RtStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, RtStatus> {
    if text.is_null() {
        return Err(fail(RtStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(text)
        .to_str()
        .map_err(|_| fail(RtStatus::InvalidUtf8, "string argument is not valid UTF-8"))
}

unsafe fn read_date(text: *const c_char) -> Result<NaiveDate, RtStatus> {
    let text = read_str(text)?;
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map_err(|_| fail(RtStatus::InvalidInput, format!("invalid date {text:?}, expected YYYY-MM-DD")))
}

fn nan_or(p: Option<f64>) -> f64 {
    p.unwrap_or(f64::NAN)
}

/// Parses `date,rain_mm` CSV text into a new rainfall handle.
///
/// # Safety
/// `csv` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rt_rainfall_from_csv(csv: *const c_char, out: *mut *mut RtRainfall) -> RtStatus {
    guard(|| {
        if out.is_null() {
            return fail(RtStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = match read_str(csv) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match parse_csv(text) {
            Ok(series) => {
                *out = Box::into_raw(Box::new(RtRainfall(series)));
                RtStatus::Ok
            }
            Err(err) => fail(RtStatus::MalformedCsv, err.to_string()),
        }
    })
}

/// Number of days in the record, or 0 for a null handle.
///
/// # Safety
/// `rain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rt_rainfall_len(rain: *const RtRainfall) -> usize {
    rain.as_ref().map_or(0, |r| r.0.len())
}

/// # Safety
/// `rain` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rt_rainfall_free(rain: *mut RtRainfall) {
    if !rain.is_null() {
        drop(Box::from_raw(rain));
    }
}

/// Creates a system from catchment area (m²), runoff coefficient and tank volume (L).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rt_system_new(
    catchment_area_m2: f64,
    runoff_coeff: f64,
    tank_volume_l: f64,
    out: *mut *mut RtSystem,
) -> RtStatus {
    guard(|| {
        if out.is_null() {
            return fail(RtStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        match SystemSpec::new(catchment_area_m2, runoff_coeff, tank_volume_l) {
            Ok(spec) => {
                *out = Box::into_raw(Box::new(RtSystem(spec)));
                RtStatus::Ok
            }
            Err(err) => fail(core_status(&err), err.to_string()),
        }
    })
}

/// # Safety
/// `system` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rt_system_free(system: *mut RtSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Reliability under a constant daily demand (L/day), starting from an empty tank.
///
/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rt_reliability(
    rain: *const RtRainfall,
    system: *const RtSystem,
    demand_l_per_day: f64,
    out: *mut RtReliability,
) -> RtStatus {
    guard(|| {
        let (Some(rain), Some(system), false) = (rain.as_ref(), system.as_ref(), out.is_null()) else {
            return fail(RtStatus::NullPointer, "null handle or output pointer");
        };
        let demand = match DemandSchedule::constant(demand_l_per_day) {
            Ok(d) => d,
            Err(err) => return fail(core_status(&err), err.to_string()),
        };
        match estimate_reliability(&rain.0, &system.0, &demand) {
            Ok(report) => {
                *out = RtReliability {
                    probability: nan_or(report.probability),
                    label: report.label.map_or(RtLabel::None, RtLabel::from),
                    demand_days: report.demand_days as u64,
                    success_days: report.success_days as u64,
                    short_history: !report.warnings.is_empty(),
                };
                RtStatus::Ok
            }
            Err(err) => fail(core_status(&err), err.to_string()),
        }
    })
}

/// Probability of meeting a constant demand over `horizon_days` from
/// `start_date` (YYYY-MM-DD), given the water measured in the tank that day.
///
/// # Safety
/// Handles must be live, `start_date` NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rt_forecast(
    rain: *const RtRainfall,
    system: *const RtSystem,
    demand_l_per_day: f64,
    start_date: *const c_char,
    observed_water_l: f64,
    horizon_days: u32,
    out: *mut RtForecast,
) -> RtStatus {
    guard(|| {
        let (Some(rain), Some(system), false) = (rain.as_ref(), system.as_ref(), out.is_null()) else {
            return fail(RtStatus::NullPointer, "null handle or output pointer");
        };
        let start = match read_date(start_date) {
            Ok(d) => d,
            Err(status) => return status,
        };
        let demand = match DemandSchedule::constant(demand_l_per_day) {
            Ok(d) => d,
            Err(err) => return fail(core_status(&err), err.to_string()),
        };
        let request =
            ForecastRequest::new(start, observed_water_l, system.0, demand).with_horizon(horizon_days as usize);
        match forecast(&rain.0, &request) {
            Ok(report) => {
                *out = RtForecast {
                    probability: nan_or(report.probability),
                    label: report.label.map_or(RtLabel::None, RtLabel::from),
                    demand_days: report.demand_days as u64,
                    success_days: report.success_days as u64,
                    min_end_water_l: report.min_end_water,
                    years_used: report.years_used.len() as u32,
                    years_skipped: report.years_skipped.len() as u32,
                };
                RtStatus::Ok
            }
            Err(err) => fail(core_status(&err), err.to_string()),
        }
    })
}

/// Rating band of a probability in [0, 1].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rt_classify(probability: f64, out: *mut RtLabel) -> RtStatus {
    guard(|| {
        if out.is_null() {
            return fail(RtStatus::NullPointer, "null output pointer");
        }
        match classify(probability) {
            Ok(label) => {
                *out = label.into();
                RtStatus::Ok
            }
            Err(err) => fail(core_status(&err), err.to_string()),
        }
    })
}

/// Human-readable name of a label. The string is static; do not free it.
#[no_mangle]
pub extern "C" fn rt_label_name(label: RtLabel) -> *const c_char {
    let name: &'static CStr = match label {
        RtLabel::None => c"none",
        RtLabel::Unlikely => c"Unlikely",
        RtLabel::Occasionally => c"Occasionally",
        RtLabel::Fair => c"Fair",
        RtLabel::Good => c"Good",
        RtLabel::VeryGood => c"VeryGood",
    };
    name.as_ptr()
}

/// Copy of the last error message on this thread, or null if none.
/// Release it with [`rt_string_free`].
#[no_mangle]
pub extern "C" fn rt_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null_mut(), |m| m.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
