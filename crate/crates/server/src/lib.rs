//! Read-only HTTP API over a loaded star schema: schema metadata, measure
//! queries, dashboard specs, narrative lint and the findings report.
//!
//! All state is built once at startup and shared immutably between
//! requests; queries run on the blocking pool so long scans do not stall
//! the reactor.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use storeboard_core::analytics::{build_findings_report, AnalyticsConfig, FindingsReport};
use storeboard_core::dashboard::{self, DashboardSpec, NarrativeScore, Violation};
use storeboard_core::ingest::FACT_TABLE;
use storeboard_core::measure::MeasureCatalog;
use storeboard_core::model::{ColumnKind, PaymentSource, StarSchema};
use storeboard_core::query::{self, GroupQuery, QueryResult};
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    QueryError,
    Internal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError { code, message: message.into(), detail: None }
    }

    fn status(&self) -> StatusCode {
        match self.code {
            ErrorCode::BadRequest | ErrorCode::QueryError => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(ErrorCode::BadRequest, r.body_text())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("dashboard spec {id} is invalid:\n{}", violations.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    InvalidSpec { id: String, violations: Vec<Violation> },
    #[error("duplicate dashboard id {0}")]
    DuplicateSpec(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnInfo {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableInfo {
    pub name: String,
    pub role: &'static str,
    pub rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub columns: Vec<ColumnInfo>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemaInfo {
    pub source: String,
    pub fact_rows: usize,
    pub distinct_orders: f64,
    pub customers: f64,
    pub skus: f64,
    pub rejected_rows: usize,
    pub payment_source: PaymentSource,
    pub checksum: String,
    pub tables: Vec<TableInfo>,
    pub measures: MeasureCatalog,
}

/// Everything the handlers read; immutable once built.
pub struct AppState {
    pub schema: StarSchema,
    pub catalog: MeasureCatalog,
    pub specs: Vec<(String, DashboardSpec)>,
    pub findings: FindingsReport,
    schema_info: SchemaInfo,
}

impl AppState {
    /// Validates every spec against the schema and precomputes the findings.
    pub fn new(
        schema: StarSchema,
        specs: Vec<(String, DashboardSpec)>,
        config: &AnalyticsConfig,
    ) -> Result<Self, StartupError> {
        let catalog = MeasureCatalog::builtin();
        for (i, (id, spec)) in specs.iter().enumerate() {
            if specs[..i].iter().any(|(other, _)| other == id) {
                return Err(StartupError::DuplicateSpec(id.clone()));
            }
            let violations = dashboard::validate(spec, &schema, &catalog);
            if !violations.is_empty() {
                return Err(StartupError::InvalidSpec { id: id.clone(), violations });
            }
        }
        let findings = build_findings_report(&schema, &catalog, config);
        let fp = &findings.fingerprint;
        let tables = schema
            .tables()
            .map(|t| TableInfo {
                name: t.name().to_string(),
                role: if t.name() == FACT_TABLE { "fact" } else { "dimension" },
                rows: t.row_count(),
                key: t.key_column().map(str::to_string),
                columns: t.columns().iter().map(|c| ColumnInfo { name: c.name.clone(), kind: c.kind }).collect(),
            })
            .collect();
        let schema_info = SchemaInfo {
            source: schema.meta().source.clone(),
            fact_rows: schema.row_count(),
            distinct_orders: fp.orders,
            customers: fp.customers,
            skus: fp.skus,
            rejected_rows: schema.meta().rejected_rows,
            payment_source: schema.meta().payment_source.clone(),
            checksum: fp.checksum.clone(),
            tables,
            measures: catalog.clone(),
        };
        Ok(AppState { schema, catalog, specs, findings, schema_info })
    }

    pub fn spec(&self, id: &str) -> Option<&DashboardSpec> {
        self.specs.iter().find(|(k, _)| k == id).map(|(_, s)| s)
    }
}

/// Which browser origins may call the API.
#[derive(Debug, Clone, Default)]
pub enum Cors {
    /// `http://localhost:*` and `http://127.0.0.1:*`.
    #[default]
    LocalDev,
    Origins(Vec<String>),
    Disabled,
}

#[derive(Debug, Clone, Default)]
pub struct ServerOptions {
    pub cors: Cors,
    /// Static UI bundle served from `/`.
    pub ui_dir: Option<PathBuf>,
}

fn is_local_origin(origin: &HeaderValue) -> bool {
    let Ok(o) = origin.to_str() else { return false };
    ["http://localhost", "http://127.0.0.1", "http://[::1]"].iter().any(|p| {
        o.strip_prefix(p).is_some_and(|rest| rest.is_empty() || rest.starts_with(':'))
    })
}

fn cors_layer(cors: &Cors) -> Option<CorsLayer> {
    let origin = match cors {
        Cors::Disabled => return None,
        Cors::LocalDev => AllowOrigin::predicate(|o, _| is_local_origin(o)),
        Cors::Origins(list) => AllowOrigin::list(list.iter().filter_map(|o| HeaderValue::from_str(o).ok())),
    };
    Some(
        CorsLayer::new()
            .allow_origin(origin)
            .allow_methods([Method::GET, Method::POST])
            .allow_headers([header::CONTENT_TYPE]),
    )
}

pub fn router(state: Arc<AppState>, options: &ServerOptions) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/schema", get(schema_info))
        .route("/api/query", post(run_query))
        .route("/api/dashboards", get(list_dashboards))
        .route("/api/dashboards/{id}", get(get_dashboard))
        .route("/api/lint", post(lint_spec))
        .route("/api/findings", get(findings))
        .fallback(not_found)
        .with_state(state);
    let mut app = match &options.ui_dir {
        Some(dir) => Router::new().merge(api.clone()).fallback_service(ServeDir::new(dir)),
        None => api,
    };
    if options.ui_dir.is_some() {
        // API misses still answer with the JSON error shape.
        app = app.route("/api/{*rest}", get(not_found).post(not_found));
    }
    if let Some(cors) = cors_layer(&options.cors) {
        app = app.layer(cors);
    }
    app.layer(TraceLayer::new_for_http())
}

/// Serves until ctrl-c.
pub async fn serve(listener: TcpListener, state: Arc<AppState>, options: &ServerOptions) -> std::io::Result<()> {
    let addr: SocketAddr = listener.local_addr()?;
    tracing::info!(%addr, rows = state.schema.row_count(), "listening");
    axum::serve(listener, router(state, options))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn not_found() -> ApiError {
    ApiError::new(ErrorCode::NotFound, "no such endpoint")
}

async fn health(State(s): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "name": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "rows": s.schema.row_count(),
        "source": s.schema.meta().source,
        "checksum": s.schema_info.checksum,
    }))
}

async fn schema_info(State(s): State<Arc<AppState>>) -> Json<SchemaInfo> {
    Json(s.schema_info.clone())
}

async fn run_query(
    State(s): State<Arc<AppState>>,
    body: Result<Json<GroupQuery>, JsonRejection>,
) -> Result<Json<QueryResult>, ApiError> {
    let Json(q) = body?;
    let result = tokio::task::spawn_blocking(move || query::run(&s.schema, &s.catalog, &q))
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?;
    result.map(Json).map_err(|e| ApiError::new(ErrorCode::QueryError, e.to_string()))
}

async fn list_dashboards(State(s): State<Arc<AppState>>) -> Json<Vec<String>> {
    Json(s.specs.iter().map(|(id, _)| id.clone()).collect())
}

async fn get_dashboard(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<DashboardSpec>, ApiError> {
    s.spec(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::new(ErrorCode::NotFound, format!("no dashboard {id:?}")))
}

async fn lint_spec(body: Result<Json<DashboardSpec>, JsonRejection>) -> Result<Json<NarrativeScore>, ApiError> {
    let Json(spec) = body?;
    let violations = dashboard::validate_structure(&spec);
    if !violations.is_empty() {
        return Err(ApiError {
            code: ErrorCode::BadRequest,
            message: format!("spec has {} violation(s)", violations.len()),
            detail: Some(json!(violations)),
        });
    }
    Ok(Json(dashboard::lint(&spec)))
}

async fn findings(State(s): State<Arc<AppState>>) -> Json<FindingsReport> {
    Json(s.findings.clone())
}
