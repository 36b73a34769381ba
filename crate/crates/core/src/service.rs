//! HTTP JSON facade over the simulator, one system per server.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::NaiveDate;
use serde::Deserialize;

use crate::balance::RainfallSeries;
use crate::config::ScenarioConfig;
use crate::error::{Error, RecordError};
use crate::forecast::{forecast, ForecastRequest, Strategy, DEFAULT_HORIZON_DAYS};
use crate::records::{ObservationRecord, RecordStore};
use crate::reliability::{compare_tank_variants, estimate_reliability};
use crate::sweep::{default_tank_grid, optimal_tank, reliability_curve, Parameter, DEFAULT_OPTIMUM_TOLERANCE};
use crate::views::{CurveView, ErrorBody, ForecastView, RainfallSummary, ReliabilityView, SystemView, VariantsView};

pub const DEFAULT_GRID_POINTS: usize = 24;

pub struct AppState {
    pub config: ScenarioConfig,
    /// `None` when no rainfall record could be loaded; data endpoints
    /// answer 503.
    pub rain: Option<RainfallSeries>,
    pub records: RwLock<RecordStore>,
}

impl AppState {
    pub fn new(config: ScenarioConfig, rain: Option<RainfallSeries>, records: RecordStore) -> Self {
        Self {
            config,
            rain,
            records: RwLock::new(records),
        }
    }

    fn rain(&self) -> Result<&RainfallSeries, ApiError> {
        self.rain.as_ref().ok_or_else(|| ApiError {
            status: StatusCode::SERVICE_UNAVAILABLE,
            kind: "no-data",
            message: "no rainfall record is loaded".into(),
        })
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            kind: "invalid-input",
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            kind: self.kind.to_string(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InsufficientHistory(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        Self {
            status,
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

impl From<RecordError> for ApiError {
    fn from(e: RecordError) -> Self {
        let status = match e {
            RecordError::DuplicateDate(_) => StatusCode::CONFLICT,
            RecordError::ExceedsTank { .. } | RecordError::Invalid(_) => StatusCode::BAD_REQUEST,
            RecordError::Corrupt { .. } | RecordError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self {
            status,
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self::bad_request(e.body_text())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::bad_request(e.body_text())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;
type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/system", get(system))
        .route("/api/reliability", get(reliability))
        .route("/api/variants", get(variants))
        .route("/api/forecast", axum::routing::post(post_forecast))
        .route("/api/sweep", get(sweep))
        .route("/api/records", get(list_records).post(add_record))
        .fallback(not_found)
        .with_state(state)
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        kind: "not-found",
        message: "no such endpoint".into(),
    }
}

async fn health(State(state): State<Shared>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "rainfallLoaded": state.rain.is_some() }))
}

async fn system(State(state): State<Shared>) -> Json<SystemView> {
    let c = &state.config;
    Json(SystemView {
        name: c.name.clone(),
        spec: c.spec,
        tank_volume_m3: c.spec.tank_volume() / 1000.0,
        demand: (&c.demand).into(),
        rainfall: state.rain.as_ref().map(RainfallSummary::from),
    })
}

#[derive(Deserialize)]
struct SystemQuery {
    system: Option<String>,
}

async fn reliability(
    State(state): State<Shared>,
    query: Result<Query<SystemQuery>, QueryRejection>,
) -> ApiResult<ReliabilityView> {
    let Query(q) = query?;
    if let Some(name) = q.system {
        if name != state.config.name {
            return Err(ApiError {
                status: StatusCode::NOT_FOUND,
                kind: "not-found",
                message: format!("unknown system {name:?}"),
            });
        }
    }
    let report = estimate_reliability(state.rain()?, &state.config.spec, &state.config.demand)?;
    Ok(Json((&report).into()))
}

#[derive(Deserialize)]
struct VariantsQuery {
    fraction: Option<f64>,
}

async fn variants(
    State(state): State<Shared>,
    query: Result<Query<VariantsQuery>, QueryRejection>,
) -> ApiResult<VariantsView> {
    let Query(q) = query?;
    let fraction = q.fraction.unwrap_or(0.25);
    let reports = compare_tank_variants(state.rain()?, &state.config.spec, &state.config.demand, fraction)?;
    Ok(Json(VariantsView {
        fraction,
        variants: reports.iter().map(ReliabilityView::from).collect(),
    }))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ForecastBody {
    start: NaiveDate,
    #[serde(rename = "observedWaterL")]
    observed_water: f64,
    horizon_days: Option<usize>,
    #[serde(default)]
    strategies: Vec<Strategy>,
}

async fn post_forecast(
    State(state): State<Shared>,
    body: Result<Json<ForecastBody>, JsonRejection>,
) -> ApiResult<ForecastView> {
    let Json(body) = body?;
    let horizon = body.horizon_days.unwrap_or(DEFAULT_HORIZON_DAYS);
    let request = ForecastRequest::new(body.start, body.observed_water, state.config.spec, state.config.demand.clone())
        .with_horizon(horizon)
        .with_strategies(body.strategies);
    let report = forecast(state.rain()?, &request)?;
    Ok(Json(ForecastView::new(body.start, horizon, &report)))
}

#[derive(Deserialize)]
struct SweepQuery {
    parameter: Option<String>,
    values: Option<String>,
    tolerance: Option<f64>,
}

pub(crate) fn parse_values(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("bad number {s:?} in value list")))
        .collect()
}

async fn sweep(State(state): State<Shared>, query: Result<Query<SweepQuery>, QueryRejection>) -> ApiResult<CurveView> {
    let Query(q) = query?;
    let parameter: Parameter = q.parameter.as_deref().unwrap_or("tank").parse()?;
    let tolerance = q.tolerance.unwrap_or(DEFAULT_OPTIMUM_TOLERANCE);
    let values = match (&q.values, parameter) {
        (Some(v), _) => parse_values(v).map_err(ApiError::bad_request)?,
        (None, Parameter::TankVolume) => {
            default_tank_grid(state.config.demand.typical_daily(), DEFAULT_GRID_POINTS)?
        }
        (None, Parameter::RunoffCoeff) => (1..=10).map(|i| f64::from(i) / 10.0).collect(),
    };
    let state = state.clone();
    let view = tokio::task::spawn_blocking(move || -> Result<CurveView, ApiError> {
        let curve = reliability_curve(state.rain()?, &state.config.spec, &state.config.demand, parameter, &values)?;
        let optimum = match parameter {
            Parameter::TankVolume => optimal_tank(&curve, tolerance).ok(),
            Parameter::RunoffCoeff => None,
        };
        Ok(CurveView::new(&curve, optimum, tolerance))
    })
    .await
    .map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        kind: "internal",
        message: e.to_string(),
    })??;
    Ok(Json(view))
}

#[derive(Deserialize)]
struct RangeQuery {
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
}

async fn list_records(
    State(state): State<Shared>,
    query: Result<Query<RangeQuery>, QueryRejection>,
) -> ApiResult<Vec<ObservationRecord>> {
    let Query(q) = query?;
    let range = (q.from.is_some() || q.to.is_some())
        .then(|| (q.from.unwrap_or(NaiveDate::MIN), q.to.unwrap_or(NaiveDate::MAX)));
    let store = state.records.read().unwrap_or_else(|e| e.into_inner());
    Ok(Json(store.list_records(range)))
}

async fn add_record(
    State(state): State<Shared>,
    body: Result<Json<ObservationRecord>, JsonRejection>,
) -> Result<(StatusCode, Json<ObservationRecord>), ApiError> {
    let Json(record) = body?;
    let mut store = state.records.write().unwrap_or_else(|e| e.into_inner());
    store.add_record(record.clone())?;
    Ok((StatusCode::CREATED, Json(record)))
}

/// Runs the server until Ctrl-C.
pub async fn serve(state: AppState, bind: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let mut app = router(Arc::new(state));
    if let Some(dir) = static_dir {
        app = app.fallback_service(tower_http::services::ServeDir::new(dir));
    }
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
