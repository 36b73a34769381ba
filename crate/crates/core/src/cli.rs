//! Command-line front end. `run` returns the process exit code: 0 on
//! success, 1 on data or validation errors, 2 on usage errors.

use std::fmt::Write as _;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use crate::balance::{simulate, RainfallSeries};
use crate::config::ScenarioConfig;
use crate::forecast::{forecast, ForecastReport, ForecastRequest, Strategy, DEFAULT_HORIZON_DAYS};
use crate::rainfall::{
    fetch_history_from, parse_csv_with, write_csv, FixtureProvider, GapPolicy, HttpProvider, RainfallCache,
    RainfallProvider, StationQuery, API_KEY_ENV,
};
use crate::records::{ObservationRecord, RecordStore};
use crate::reliability::{compare_tank_variants, estimate_reliability, ReliabilityReport};
use crate::service::{self, parse_values, AppState, DEFAULT_GRID_POINTS};
use crate::sweep::{
    default_tank_grid, optimal_tank, reliability_curve, runoff_comparison, Parameter, ReliabilityCurve,
    DEFAULT_OPTIMUM_TOLERANCE,
};
use crate::views::{CurveView, ForecastView, ReliabilityView, VariantsView};

#[derive(Debug, Parser)]
#[command(name = "raintank", version, about = "Rainwater harvesting tank simulator")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Historical reliability of the configured system.
    Reliability {
        #[command(flatten)]
        common: Common,
    },
    /// Reliability of the tank shrunk and grown by a fraction.
    Variants {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.25)]
        fraction: f64,
    },
    /// Chance of meeting demand over the coming days from an observed level.
    Forecast(ForecastArgs),
    /// Reliability curve over tank volume or runoff coefficient.
    Sweep(SweepArgs),
    /// Download a daily rainfall record.
    Fetch(FetchArgs),
    /// Monthly observation log.
    Record {
        #[command(subcommand)]
        action: RecordAction,
    },
    /// Serve the JSON API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Rainfall CSV (`date,rain_mm`). Defaults to `[service] rain` in the scenario file.
    #[arg(long)]
    rain: Option<PathBuf>,
    /// Fill missing dates with 0 mm instead of failing.
    #[arg(long)]
    fill_zero: bool,
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
    /// Write the plot-ready CSV artifact here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ForecastArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    start: NaiveDate,
    /// Observed water in the tank (L). Defaults to the latest record in
    /// `--records` on or before the start date.
    #[arg(long)]
    water: Option<f64>,
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_HORIZON_DAYS)]
    horizon: usize,
    /// Replacement daily demand over the horizon (L/day).
    #[arg(long)]
    demand_override: Option<f64>,
    /// Water purchase as `<liters>@<day>`; repeatable.
    #[arg(long = "purchase", value_parser = parse_purchase)]
    purchases: Vec<Strategy>,
    /// Write a baseline-versus-strategies comparison CSV here.
    #[arg(long)]
    compare_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// `tank` or `runoff`.
    #[arg(long, default_value = "tank")]
    parameter: String,
    /// Comma-separated ascending values; defaults to 24 log-spaced tank
    /// volumes between one and 120 days of demand.
    #[arg(long)]
    values: Option<String>,
    /// Comma-separated runoff coefficients: one tank curve per value.
    #[arg(long)]
    k_values: Option<String>,
    #[arg(long, default_value_t = DEFAULT_OPTIMUM_TOLERANCE)]
    tolerance: f64,
}

#[derive(Debug, Args)]
struct FetchArgs {
    #[arg(long, allow_hyphen_values = true)]
    lat: f64,
    #[arg(long, allow_hyphen_values = true)]
    lon: f64,
    #[arg(long)]
    from: NaiveDate,
    #[arg(long)]
    to: NaiveDate,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Scenario file whose `[provider]` section configures the client.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Read provider JSON from this directory instead of the network.
    #[arg(long)]
    fixture_dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum RecordAction {
    Add {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        date: NaiveDate,
        /// Measured water (L).
        #[arg(long)]
        water: f64,
        #[arg(long)]
        not_potable: bool,
        #[arg(long)]
        note: Option<String>,
    },
    List {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        from: Option<NaiveDate>,
        #[arg(long)]
        to: Option<NaiveDate>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    rain: Option<PathBuf>,
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long)]
    bind: Option<SocketAddr>,
    /// Directory of built web UI files to serve at `/`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

fn parse_purchase(s: &str) -> Result<Strategy, String> {
    let (volume, day) = s.split_once('@').ok_or("expected <liters>@<day>")?;
    let volume_l: f64 = volume.trim().parse().map_err(|_| format!("bad volume {volume:?}"))?;
    let on_day: usize = day.trim().parse().map_err(|_| format!("bad day {day:?}"))?;
    Ok(Strategy::Purchase { volume_l, on_day })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            1
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    match command {
        Command::Reliability { common } => cmd_reliability(&common, out, err),
        Command::Variants { common, fraction } => cmd_variants(&common, fraction, out, err),
        Command::Forecast(args) => cmd_forecast(&args, out, err),
        Command::Sweep(args) => cmd_sweep(&args, out, err),
        Command::Fetch(args) => cmd_fetch(&args, out, err),
        Command::Record { action } => cmd_record(action, out),
        Command::Serve(args) => cmd_serve(args, err),
    }
}

fn load_config(path: &Path) -> anyhow::Result<ScenarioConfig> {
    Ok(ScenarioConfig::load(path)?)
}

fn load_rain(path: &Path, fill_zero: bool, err: &mut dyn Write) -> anyhow::Result<RainfallSeries> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let policy = if fill_zero { GapPolicy::FillZero } else { GapPolicy::Reject };
    let parsed = parse_csv_with(&text, policy).with_context(|| format!("{}", path.display()))?;
    if parsed.filled_days > 0 {
        writeln!(err, "warning: filled {} missing day(s) with 0 mm", parsed.filled_days)?;
    }
    Ok(parsed.series)
}

impl Common {
    fn rain_series(&self, cfg: &ScenarioConfig, err: &mut dyn Write) -> anyhow::Result<RainfallSeries> {
        let path = self.rain.as_ref().or(cfg.service.rain.as_ref()).ok_or_else(|| {
            anyhow::anyhow!("no rainfall file: pass --rain or set `rain` under [service] in the scenario file")
        })?;
        load_rain(path, self.fill_zero, err)
    }
}

fn emit_json<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_artifact(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn percent_text(p: Option<f64>) -> String {
    p.map_or_else(|| "n/a (no demand days)".to_string(), |p| format!("{:.1}%", p * 100.0))
}

fn label_text(l: Option<crate::reliability::Label>) -> &'static str {
    l.map_or("-", |l| l.as_str())
}

fn warn_report(r: &ReliabilityReport, err: &mut dyn Write) -> anyhow::Result<()> {
    for w in &r.warnings {
        writeln!(err, "warning: {w}")?;
    }
    Ok(())
}

fn cmd_reliability(c: &Common, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = load_config(&c.config)?;
    let rain = c.rain_series(&cfg, err)?;
    let report = estimate_reliability(&rain, &cfg.spec, &cfg.demand)?;
    warn_report(&report, err)?;
    if let Some(path) = &c.out {
        let trajectory = simulate(&rain, &cfg.spec, &cfg.demand, 0.0)?;
        let mut csv = String::from(
            "date,rain_mm,harvested_l,available_l,demand_l,supplied_l,overflow_l,shortfall_l,water_end_l,met\n",
        );
        for (day, rain_mm) in trajectory.days.iter().zip(rain.depths()) {
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{}",
                day.date,
                rain_mm,
                day.harvested,
                day.available,
                day.demand,
                day.supplied,
                day.overflow,
                day.shortfall,
                day.water_end,
                day.met
            )?;
        }
        write_artifact(path, &csv)?;
    }
    if c.json {
        return emit_json(out, &ReliabilityView::from(&report));
    }
    writeln!(out, "system       {}", cfg.name)?;
    writeln!(out, "window       {} .. {}", report.window.0, report.window.1)?;
    writeln!(
        out,
        "tank         {} L ({} m3)",
        report.spec.tank_volume(),
        report.spec.tank_volume() / 1000.0
    )?;
    writeln!(out, "demand days  {}", report.demand_days)?;
    writeln!(out, "days met     {}", report.success_days)?;
    match report.probability {
        Some(p) => writeln!(
            out,
            "reliability  {} ({}/{})  {}",
            percent_text(Some(p)),
            report.success_days,
            report.demand_days,
            label_text(report.label)
        )?,
        None => writeln!(out, "reliability  {}", percent_text(None))?,
    }
    Ok(())
}

fn cmd_variants(c: &Common, fraction: f64, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = load_config(&c.config)?;
    let rain = c.rain_series(&cfg, err)?;
    let reports = compare_tank_variants(&rain, &cfg.spec, &cfg.demand, fraction)?;
    warn_report(&reports[1], err)?;
    if let Some(path) = &c.out {
        let mut csv = String::from("tank_volume_l,probability,label\n");
        for r in &reports {
            let p = r.probability.map(|p| p.to_string()).unwrap_or_default();
            writeln!(csv, "{},{p},{}", r.spec.tank_volume(), r.label.map(|l| l.as_str()).unwrap_or(""))?;
        }
        write_artifact(path, &csv)?;
    }
    if c.json {
        return emit_json(
            out,
            &VariantsView {
                fraction,
                variants: reports.iter().map(ReliabilityView::from).collect(),
            },
        );
    }
    writeln!(out, "{:>14}  {:>12}  {:>8}  label", "tank (L)", "reliability", "met")?;
    for r in &reports {
        writeln!(
            out,
            "{:>14}  {:>12}  {:>8}  {}",
            r.spec.tank_volume(),
            percent_text(r.probability),
            format!("{}/{}", r.success_days, r.demand_days),
            label_text(r.label)
        )?;
    }
    Ok(())
}

fn per_year_csv(report: &ForecastReport) -> String {
    let mut csv = String::from("year,success_days,demand_days,end_water_l\n");
    for r in &report.replays {
        let _ = writeln!(csv, "{},{},{},{}", r.year, r.success_days, r.demand_days, r.end_water);
    }
    csv
}

fn cmd_forecast(a: &ForecastArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    let c = &a.common;
    let cfg = load_config(&c.config)?;
    let rain = c.rain_series(&cfg, err)?;
    let water = match (a.water, &a.records) {
        (Some(w), _) => w,
        (None, Some(path)) => {
            let store = RecordStore::open(path, cfg.spec.tank_volume())?;
            let record = store
                .latest_on_or_before(a.start)
                .ok_or_else(|| anyhow!("no observation on or before {} in {}", a.start, path.display()))?;
            writeln!(err, "using observation of {}: {} L", record.date, record.measured_water)?;
            record.measured_water
        }
        (None, None) => bail!("give --water or --records to set the observed tank level"),
    };

    let mut strategies: Vec<Strategy> = a.purchases.clone();
    if let Some(d) = a.demand_override {
        strategies.push(Strategy::DemandOverride { liters_per_day: d });
    }
    let base = ForecastRequest::new(a.start, water, cfg.spec, cfg.demand.clone()).with_horizon(a.horizon);
    let request = base.clone().with_strategies(strategies.iter().copied());
    let report = forecast(&rain, &request)?;

    if let Some(path) = &c.out {
        write_artifact(path, &per_year_csv(&report))?;
    }
    if let Some(path) = &a.compare_out {
        let mut scenarios: Vec<(&str, Vec<Strategy>)> = vec![("baseline", vec![])];
        let overrides: Vec<Strategy> = strategies
            .iter()
            .copied()
            .filter(|s| matches!(s, Strategy::DemandOverride { .. }))
            .collect();
        if !overrides.is_empty() && !a.purchases.is_empty() {
            scenarios.push(("reduce-demand", overrides));
            scenarios.push(("purchase", a.purchases.clone()));
        }
        if !strategies.is_empty() {
            scenarios.push(("combined", strategies.clone()));
        }
        let mut csv = String::from("scenario,probability,label,success_days,demand_days,min_end_water_l\n");
        for (name, s) in scenarios {
            let r = forecast(&rain, &base.clone().with_strategies(s))?;
            let p = r.probability.map(|p| p.to_string()).unwrap_or_default();
            writeln!(
                csv,
                "{name},{p},{},{},{},{}",
                r.label.map(|l| l.as_str()).unwrap_or(""),
                r.success_days,
                r.demand_days,
                r.min_end_water
            )?;
        }
        write_artifact(path, &csv)?;
    }
    if c.json {
        return emit_json(out, &ForecastView::new(a.start, a.horizon, &report));
    }
    writeln!(out, "start        {} ({} days)", a.start, a.horizon)?;
    writeln!(out, "start water  {} L", report.effective_initial_water)?;
    if report.initial_purchase_overflow > 0.0 {
        writeln!(out, "overflowed   {} L of the day-0 purchase", report.initial_purchase_overflow)?;
    }
    let years: Vec<String> = report.years_used.iter().map(i32::to_string).collect();
    writeln!(out, "years        {}", years.join(", "))?;
    writeln!(
        out,
        "probability  {} ({}/{})  {}",
        percent_text(report.probability),
        report.success_days,
        report.demand_days,
        label_text(report.label)
    )?;
    writeln!(out, "min end water {} L", report.min_end_water)?;
    for r in &report.replays {
        writeln!(out, "  {}: {}/{} met, {} L at end", r.year, r.success_days, r.demand_days, r.end_water)?;
    }
    Ok(())
}

fn print_curve(out: &mut dyn Write, curve: &ReliabilityCurve) -> anyhow::Result<()> {
    for p in &curve.points {
        writeln!(out, "{:>14}  {:>12}  {}", p.value, percent_text(p.probability), label_text(p.label))?;
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    let c = &a.common;
    let cfg = load_config(&c.config)?;
    let rain = c.rain_series(&cfg, err)?;
    let parameter: Parameter = a.parameter.parse()?;
    let values = match (&a.values, parameter) {
        (Some(v), _) => parse_values(v).map_err(|e| anyhow!(e))?,
        (None, Parameter::TankVolume) => default_tank_grid(cfg.demand.typical_daily(), DEFAULT_GRID_POINTS)?,
        (None, Parameter::RunoffCoeff) => (1..=10).map(|i| f64::from(i) / 10.0).collect(),
    };

    if let Some(k_text) = &a.k_values {
        if parameter != Parameter::TankVolume {
            bail!("--k-values compares tank-volume curves; use --parameter tank");
        }
        let ks = parse_values(k_text).map_err(|e| anyhow!(e))?;
        let curves = runoff_comparison(&rain, &cfg.spec, &cfg.demand, &ks, &values)?;
        let views: Vec<CurveView> = curves
            .iter()
            .map(|cv| CurveView::new(cv, optimal_tank(cv, a.tolerance).ok(), a.tolerance))
            .collect();
        if let Some(path) = &c.out {
            let mut csv = String::from("runoff_coeff,parameter_value,probability,label\n");
            for cv in &curves {
                for line in cv.to_csv().lines().skip(1) {
                    writeln!(csv, "{},{line}", cv.fixed.runoff_coeff())?;
                }
            }
            write_artifact(path, &csv)?;
        }
        if c.json {
            return emit_json(out, &views);
        }
        for (cv, view) in curves.iter().zip(&views) {
            writeln!(out, "runoff coefficient {}", cv.fixed.runoff_coeff())?;
            print_curve(out, cv)?;
            if let Some(o) = &view.optimum {
                writeln!(out, "  optimum {} L at {:.1}%", o.volume, o.probability * 100.0)?;
            }
        }
        return Ok(());
    }

    let curve = reliability_curve(&rain, &cfg.spec, &cfg.demand, parameter, &values)?;
    let optimum = match parameter {
        Parameter::TankVolume => optimal_tank(&curve, a.tolerance).ok(),
        Parameter::RunoffCoeff => None,
    };
    if let Some(path) = &c.out {
        write_artifact(path, &curve.to_csv())?;
    }
    if c.json {
        return emit_json(out, &CurveView::new(&curve, optimum, a.tolerance));
    }
    print_curve(out, &curve)?;
    if let Some((v, p)) = optimum {
        writeln!(out, "optimum tank {v} L at {:.1}%", p * 100.0)?;
    }
    Ok(())
}

fn cmd_fetch(a: &FetchArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    let query = StationQuery::new(a.lat, a.lon, a.from, a.to)?;
    let cache = a.cache_dir.as_ref().map(RainfallCache::new);
    let cached = cache.as_ref().and_then(|c| c.get(&query).into_series());
    let series = match cached {
        Some(s) => {
            writeln!(err, "cache hit")?;
            s
        }
        None => {
            let provider: Box<dyn RainfallProvider> = match &a.fixture_dir {
                Some(dir) => Box::new(FixtureProvider::new(dir)),
                None => {
                    let config = match &a.config {
                        Some(p) => load_config(p)?.provider,
                        None => Default::default(),
                    }
                    .with_api_key_from_env();
                    if config.api_key.is_empty() {
                        bail!("set {API_KEY_ENV} to the provider API key");
                    }
                    Box::new(HttpProvider::new(config)?)
                }
            };
            let outcome = fetch_history_from(&query, provider.as_ref())?;
            if outcome.retries > 0 {
                writeln!(err, "fetched after {} retr(ies)", outcome.retries)?;
            }
            if let Some(cache) = &cache {
                cache
                    .put(&query, &outcome.series, &outcome.provider)
                    .with_context(|| format!("cannot write cache in {}", cache.dir().display()))?;
            }
            outcome.series
        }
    };
    let text = write_csv(&series);
    match &a.out {
        Some(path) => write_artifact(path, &text)?,
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

fn cmd_record(action: RecordAction, out: &mut dyn Write) -> anyhow::Result<()> {
    match action {
        RecordAction::Add {
            config,
            records,
            date,
            water,
            not_potable,
            note,
        } => {
            let cfg = load_config(&config)?;
            let mut store = RecordStore::open(&records, cfg.spec.tank_volume())?;
            store.add_record(ObservationRecord {
                date,
                measured_water: water,
                potable: !not_potable,
                note,
            })?;
            writeln!(out, "recorded {date}: {water} L")?;
        }
        RecordAction::List {
            config,
            records,
            from,
            to,
            json,
        } => {
            let cfg = load_config(&config)?;
            let store = RecordStore::open(&records, cfg.spec.tank_volume())?;
            let range = (from.is_some() || to.is_some())
                .then(|| (from.unwrap_or(NaiveDate::MIN), to.unwrap_or(NaiveDate::MAX)));
            let list = store.list_records(range);
            if json {
                return emit_json(out, &list);
            }
            for r in list {
                writeln!(
                    out,
                    "{}  {:>10} L  {}{}",
                    r.date,
                    r.measured_water,
                    if r.potable { "potable" } else { "not potable" },
                    r.note.map(|n| format!("  {n}")).unwrap_or_default()
                )?;
            }
        }
    }
    Ok(())
}

fn cmd_serve(a: ServeArgs, err: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = load_config(&a.config)?;
    let rain_path = a.rain.or_else(|| cfg.service.rain.clone());
    let rain = match &rain_path {
        Some(path) => match load_rain(path, false, err) {
            Ok(s) => Some(s),
            Err(e) => {
                writeln!(err, "warning: {e:#}; data endpoints will answer 503")?;
                None
            }
        },
        None => {
            writeln!(err, "warning: no rainfall file configured; data endpoints will answer 503")?;
            None
        }
    };
    let records = match a.records.or_else(|| cfg.service.records.clone()) {
        Some(path) => RecordStore::open(path, cfg.spec.tank_volume())?,
        None => RecordStore::in_memory(cfg.spec.tank_volume()),
    };
    let bind: SocketAddr = match a.bind {
        Some(b) => b,
        None => cfg.service.bind.parse().with_context(|| format!("bad bind address {:?}", cfg.service.bind))?,
    };
    let state = AppState::new(cfg, rain, records);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime
        .block_on(service::serve(state, bind, a.static_dir))
        .with_context(|| format!("cannot serve on {bind}"))?;
    Ok(())
}
