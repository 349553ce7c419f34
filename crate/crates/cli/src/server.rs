//! HTTP JSON API.
//!
//! | route            | body                                   | result                         |
//! |------------------|----------------------------------------|--------------------------------|
//! | `POST /simulate` | simulation spec                        | dataset id and points          |
//! | `POST /fit`      | `dataset_id`, `variant`, `config`      | model id, summary, document    |
//! | `POST /boundary` | `model_id`, `resolution`, `bbox`?      | prediction grid                |
//! | `POST /bench`    | benchmark spec (simulated data only)   | benchmark report               |
//! | `GET /health`    |                                        | status and store sizes         |
//!
//! Every response carries `schema_version`. Failures have the shape
//! `{"schema_version": 1, "error": {"code": ..., "message": ...}}` with status
//! 400 for malformed or oversized requests, 404 for unknown ids and 422 when
//! fitting or benchmarking fails.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pptree::bench::{error_rate, run_benchmark, BenchSpec, DatasetSource};
use pptree::boundary::{boundary_grid, data_bbox, DEFAULT_RESOLUTION};
use pptree::simulate::{simulate, SimSpec};
use pptree::tree::fit;
use pptree::{Dataset, Execution, FitConfig, FittedTree, Variant};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;
pub const MAX_ROWS: usize = 50_000;
pub const MAX_RESOLUTION: usize = 501;
pub const MAX_BENCH_REPETITIONS: usize = 200;
pub const DEFAULT_TTL: Duration = Duration::from_secs(3600);

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn not_found(code: &'static str, id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            code,
            format!("no entry with id {id:?}"),
        )
    }

    fn unprocessable(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "schema_version": SCHEMA_VERSION,
            "error": {"code": self.code, "message": self.message},
        });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

struct Stored<T> {
    value: Arc<T>,
    created: Instant,
}

struct StoredModel {
    tree: FittedTree,
    bbox: Vec<(f64, f64)>,
}

#[derive(Default)]
struct Store {
    datasets: HashMap<String, Stored<Dataset>>,
    models: HashMap<String, Stored<StoredModel>>,
}

impl Store {
    fn evict(&mut self, ttl: Duration) {
        let now = Instant::now();
        self.datasets
            .retain(|_, e| now.duration_since(e.created) < ttl);
        self.models
            .retain(|_, e| now.duration_since(e.created) < ttl);
    }
}

/// Shared server state: the in-memory store and execution settings.
#[derive(Clone)]
pub struct AppState {
    store: Arc<Mutex<Store>>,
    ttl: Duration,
    threads: Option<usize>,
}

impl AppState {
    pub fn new(ttl: Duration, threads: Option<usize>) -> Self {
        AppState {
            store: Arc::default(),
            ttl,
            threads,
        }
    }

    fn with_store<R>(&self, f: impl FnOnce(&mut Store) -> R) -> R {
        let mut store = self.store.lock().unwrap_or_else(|p| p.into_inner());
        store.evict(self.ttl);
        f(&mut store)
    }
}

impl Default for AppState {
    fn default() -> Self {
        AppState::new(DEFAULT_TTL, None)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/simulate", post(simulate_route))
        .route("/fit", post(fit_route))
        .route("/boundary", post(boundary_route))
        .route("/bench", post(bench_route))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: AppState) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request("invalid_request", e.to_string()))
}

/// Runs CPU-bound work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> T + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))
}

fn new_id() -> String {
    uuid::Uuid::new_v4().to_string()
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    let (datasets, models) = state.with_store(|s| (s.datasets.len(), s.models.len()));
    Json(json!({
        "schema_version": SCHEMA_VERSION,
        "status": "ok",
        "datasets": datasets,
        "models": models,
    }))
}

async fn simulate_route(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let spec: SimSpec = parse(&body)?;
    if spec.n > MAX_ROWS {
        return Err(ApiError::bad_request(
            "limit_exceeded",
            format!("n must not exceed {MAX_ROWS}"),
        ));
    }
    spec.validate()
        .map_err(|e| ApiError::bad_request("invalid_spec", e.to_string()))?;
    let data = blocking(move || simulate(&spec))
        .await?
        .map_err(|e| ApiError::bad_request("invalid_spec", e.to_string()))?;
    let id = new_id();
    let points: Vec<&[f64]> = data.rows().collect();
    let body = json!({
        "schema_version": SCHEMA_VERSION,
        "dataset_id": id,
        "spec": spec,
        "n_rows": data.n_rows(),
        "n_features": data.n_features(),
        "class_names": data.class_names(),
        "bbox": data_bbox(&data),
        "points": points,
        "labels": data.labels(),
    });
    state.with_store(|s| {
        s.datasets.insert(
            id,
            Stored {
                value: Arc::new(data),
                created: Instant::now(),
            },
        )
    });
    Ok(Json(body))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FitRequest {
    dataset_id: String,
    #[serde(default = "default_variant")]
    variant: Variant,
    #[serde(default)]
    config: FitConfig,
}

fn default_variant() -> Variant {
    Variant::Original
}

async fn fit_route(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let req: FitRequest = parse(&body)?;
    req.config
        .validate()
        .map_err(|e| ApiError::bad_request("invalid_config", e.to_string()))?;
    let data = state
        .with_store(|s| s.datasets.get(&req.dataset_id).map(|e| e.value.clone()))
        .ok_or_else(|| ApiError::not_found("unknown_dataset", &req.dataset_id))?;
    let (variant, cfg) = (req.variant, req.config);
    let fitted = blocking(move || {
        let tree = fit(&data, variant, &cfg)?;
        let err = error_rate(&tree.predict_dataset(&data)?, data.labels())?;
        Ok::<_, pptree::Error>((tree, err, data_bbox(&data)))
    })
    .await?;
    let (tree, training_error, bbox) =
        fitted.map_err(|e| ApiError::unprocessable("fit_failed", e.to_string()))?;
    let id = new_id();
    let body = json!({
        "schema_version": SCHEMA_VERSION,
        "model_id": id,
        "dataset_id": req.dataset_id,
        "variant": tree.variant,
        "training_error": training_error,
        "n_internal": tree.n_internal(),
        "n_leaves": tree.n_leaves(),
        "depth": tree.root.depth(),
        "warnings": tree.warnings,
        "model": tree.to_value(),
    });
    state.with_store(|s| {
        let value = Arc::new(StoredModel { tree, bbox });
        s.models.insert(
            id,
            Stored {
                value,
                created: Instant::now(),
            },
        )
    });
    Ok(Json(body))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryRequest {
    model_id: String,
    #[serde(default = "default_resolution")]
    resolution: usize,
    /// Defaults to the training data range plus 10% per side.
    #[serde(default)]
    bbox: Option<Vec<(f64, f64)>>,
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

async fn boundary_route(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let req: BoundaryRequest = parse(&body)?;
    if !(2..=MAX_RESOLUTION).contains(&req.resolution) {
        return Err(ApiError::bad_request(
            "limit_exceeded",
            format!("resolution must lie in 2..={MAX_RESOLUTION}"),
        ));
    }
    let model = state
        .with_store(|s| s.models.get(&req.model_id).map(|e| e.value.clone()))
        .ok_or_else(|| ApiError::not_found("unknown_model", &req.model_id))?;
    if model.tree.n_features != 2 {
        return Err(ApiError::bad_request(
            "unsupported_dimension",
            format!(
                "grids need a 2-feature model, this one has {}",
                model.tree.n_features
            ),
        ));
    }
    let bbox = req.bbox.unwrap_or_else(|| model.bbox.clone());
    let resolution = req.resolution;
    let threads = state.threads;
    let grid = blocking(move || {
        Execution::with_threads(threads, || {
            boundary_grid(&model.tree, &bbox, resolution, Execution::Parallel)
        })
    })
    .await?
    .map_err(|e| ApiError::bad_request("invalid_request", e.to_string()))?;
    Ok(Json(json!({
        "schema_version": SCHEMA_VERSION,
        "model_id": req.model_id,
        "grid": grid,
    })))
}

async fn bench_route(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let spec: BenchSpec = parse(&body)?;
    for d in &spec.datasets {
        match &d.source {
            DatasetSource::Csv(_) => {
                return Err(ApiError::bad_request(
                    "unsupported_source",
                    format!("dataset {:?}: only simulated datasets are accepted", d.name),
                ))
            }
            DatasetSource::Simulate(sim) if sim.n > MAX_ROWS => {
                return Err(ApiError::bad_request(
                    "limit_exceeded",
                    format!("dataset {:?}: n must not exceed {MAX_ROWS}", d.name),
                ))
            }
            DatasetSource::Simulate(_) => {}
        }
    }
    if spec.repetitions > MAX_BENCH_REPETITIONS {
        return Err(ApiError::bad_request(
            "limit_exceeded",
            format!("repetitions must not exceed {MAX_BENCH_REPETITIONS}"),
        ));
    }
    spec.validate()
        .map_err(|e| ApiError::bad_request("invalid_spec", e.to_string()))?;
    let threads = state.threads;
    let report = blocking(move || {
        Execution::with_threads(threads, || run_benchmark(&spec, Execution::Parallel))
    })
    .await?
    .map_err(|e| ApiError::unprocessable("bench_failed", e.to_string()))?;
    Ok(Json(
        json!({"schema_version": SCHEMA_VERSION, "report": report}),
    ))
}
