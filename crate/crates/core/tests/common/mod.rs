#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread;

use chrono::{Datelike, Days, NaiveDate};
use raintank::{DemandSchedule, RainfallSeries, SystemSpec};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn d(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

/// Straight transcription of the daily recurrence, kept apart from the
/// library: W = max(0, min(W + k·r·A, V) − D). Returns (levels, met flags).
pub fn oracle_run(rain: &[f64], k: f64, area: f64, volume: f64, demand: &[f64], w0: f64) -> (Vec<f64>, Vec<bool>) {
    let mut w = w0;
    let mut levels = Vec::with_capacity(rain.len());
    let mut met = Vec::with_capacity(rain.len());
    for (r, dem) in rain.iter().zip(demand) {
        let m = f64::min(w + k * area * r, volume) - dem;
        met.push(m >= 0.0);
        w = if m >= 0.0 { m } else { 0.0 };
        levels.push(w);
    }
    (levels, met)
}

/// Pooled (successes, demand days) over a list of met flags and demands.
pub fn oracle_counts(met: &[bool], demand: &[f64]) -> (usize, usize) {
    let mut n_d = 0;
    let mut n_s = 0;
    for (m, dem) in met.iter().zip(demand) {
        if *dem > 0.0 {
            n_d += 1;
            if *m {
                n_s += 1;
            }
        }
    }
    (n_s, n_d)
}

/// Brute-force forecast: walks the real calendar from the start month-day of
/// every year in the record, skipping February 29, and replays each window.
/// Returns per-year (year, successes, demand days, end water).
pub fn oracle_forecast(
    history: &RainfallSeries,
    spec: &SystemSpec,
    demand: &[f64],
    w0: f64,
    start: NaiveDate,
) -> Vec<(i32, usize, usize, f64)> {
    let by_date: HashMap<NaiveDate, f64> = history.iter().collect();
    let (mut month, mut day) = (start.month(), start.day());
    if month == 2 && day == 29 {
        (month, day) = (3, 1);
    }
    let mut out = Vec::new();
    for year in history.start_date().year()..=history.end_date().year() {
        let mut date = NaiveDate::from_ymd_opt(year, month, day).unwrap();
        let mut rain = Vec::new();
        while rain.len() < demand.len() {
            if !(date.month() == 2 && date.day() == 29) {
                match by_date.get(&date) {
                    Some(r) => rain.push(*r),
                    None => break,
                }
            }
            date = date + Days::new(1);
        }
        if rain.len() < demand.len() {
            continue;
        }
        let (levels, met) = oracle_run(&rain, spec.runoff_coeff(), spec.catchment_area(), spec.tank_volume(), demand, w0);
        let (s, n) = oracle_counts(&met, demand);
        out.push((year, s, n, *levels.last().unwrap()));
    }
    out
}

/// Small deterministic generator for synthetic rainfall.
pub struct SplitMix(u64);

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Wet days with probability `wet`, exponential-ish depths around `mean`.
    pub fn rainfall(&mut self, days: usize, wet: f64, mean: f64) -> Vec<f64> {
        (0..days)
            .map(|_| {
                if self.unit() < wet {
                    -mean * (1.0 - self.unit()).ln()
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// A random system, demand and series drawn from `seed`.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub series: RainfallSeries,
    pub spec: SystemSpec,
    pub demand: DemandSchedule,
    pub initial_water: f64,
}

pub fn scenario(seed: u64, max_days: usize) -> Scenario {
    let mut g = SplitMix::new(seed);
    let days = 1 + (g.next_u64() as usize % max_days);
    let start = d("2018-01-01") + Days::new(g.next_u64() % 365);
    let (wet, mean) = (0.1 + 0.6 * g.unit(), 2.0 + 30.0 * g.unit());
    let rain = g.rainfall(days, wet, mean);
    let series = RainfallSeries::new(start, rain).unwrap();
    let spec = SystemSpec::new(1.0 + 499.0 * g.unit(), g.unit(), 1.0 + 20_000.0 * g.unit()).unwrap();
    let base = if g.unit() < 0.1 { 0.0 } else { 500.0 * g.unit() };
    let mut dated = std::collections::BTreeMap::new();
    if g.unit() < 0.3 {
        for _ in 0..(g.next_u64() % 20) {
            let date = start + Days::new(g.next_u64() % days as u64);
            dated.insert(date, 300.0 * g.unit());
        }
    }
    let demand = DemandSchedule::constant_with_overrides(base, dated).unwrap();
    let initial_water = spec.tank_volume() * g.unit();
    Scenario {
        series,
        spec,
        demand,
        initial_water,
    }
}

/// Scripted HTTP responder: each accepted connection gets the next
/// `(status, body)` pair; the last pair repeats.
pub struct StubServer {
    pub url: String,
    pub hits: Arc<Mutex<Vec<String>>>,
}

pub fn stub_server(script: Vec<(u16, String)>) -> StubServer {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/timeline", listener.local_addr().unwrap());
    let hits = Arc::new(Mutex::new(Vec::new()));
    let seen = hits.clone();
    thread::spawn(move || {
        for (i, stream) in listener.incoming().enumerate() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
            }
            seen.lock().unwrap().push(request_line.trim().to_string());
            let (status, body) = &script[i.min(script.len() - 1)];
            let reply = format!(
                "HTTP/1.1 {status} STUB\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(reply.as_bytes());
        }
    });
    StubServer { url, hits }
}

/// Provider JSON for `days` consecutive dates from `start`.
pub fn provider_json(start: NaiveDate, depths: &[f64]) -> String {
    let days: Vec<String> = depths
        .iter()
        .enumerate()
        .map(|(i, p)| format!(r#"{{"datetime":"{}","precip":{p}}}"#, start + Days::new(i as u64)))
        .collect();
    format!(r#"{{"days":[{}]}}"#, days.join(","))
}
