//! HTTP session service for interactive texture design.
//!
//! A session holds one uploaded mesh and its chart, the current element
//! and the latest plan. Mutating requests on a session run one at a time in
//! arrival order; region lookups only read the immutable mesh and run
//! alongside them.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tessera_core::autocomplete::{adjust, Edit, Layout};
use tessera_core::element::{load_element_with, TextureElement};
use tessera_core::extrude::ExtrudeMode;
use tessera_core::mesh::{check_watertight, export_mesh, load_mesh, ExportFormat, MeshFormat, TriMesh};
use tessera_core::pipeline::{build, plan_with_chart, ChartFile, Config, DemoFile, Plan, PlacementsFile, RegionFile};
use tessera_core::segment::RegionIndex;
use tessera_core::uv::{parametrize, Parameterization};
use tessera_core::Point3;
use tokio::sync::Mutex as AsyncMutex;
use uuid::Uuid;

/// Region lookups are cached on a grid of this pitch, mm.
pub const REGION_QUANTUM: f64 = 0.1;
/// Sessions untouched this long are dropped.
pub const IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);
const MAX_UPLOAD: usize = 256 << 20;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub engine: Config,
    pub idle_timeout: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { engine: Config::default(), idle_timeout: IDLE_TIMEOUT }
    }
}

/// Shared state behind the router.
#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

struct Shared {
    sessions: Mutex<HashMap<Uuid, Arc<Session>>>,
    config: ServiceConfig,
}

struct Session {
    prepared: Arc<Prepared>,
    work: Arc<AsyncMutex<Work>>,
    last_used: Mutex<Instant>,
    regions: Mutex<HashMap<[i64; 3], Arc<RegionFile>>>,
}

/// What never changes after upload.
struct Prepared {
    mesh: TriMesh,
    param: Parameterization,
    regions: RegionIndex,
}

#[derive(Default)]
struct Work {
    element: Option<TextureElement>,
    plan: Option<Plan>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState { shared: Arc::new(Shared { sessions: Mutex::new(HashMap::new()), config }) }
    }

    pub fn session_count(&self) -> usize {
        self.shared.sessions.lock().unwrap().len()
    }

    /// Drops sessions idle for longer than the configured timeout and
    /// returns how many went.
    pub fn evict_idle(&self, now: Instant) -> usize {
        let timeout = self.shared.config.idle_timeout;
        let mut sessions = self.shared.sessions.lock().unwrap();
        let before = sessions.len();
        sessions.retain(|_, s| now.saturating_duration_since(*s.last_used.lock().unwrap()) <= timeout);
        before - sessions.len()
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        let id = Uuid::parse_str(id).map_err(|_| ApiError::NotFound)?;
        let s = self.shared.sessions.lock().unwrap().get(&id).cloned().ok_or(ApiError::NotFound)?;
        *s.last_used.lock().unwrap() = Instant::now();
        Ok(s)
    }

    fn engine(&self) -> &Config {
        &self.shared.config.engine
    }
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound,
    Conflict(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, message) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::NotFound => (StatusCode::NOT_FOUND, "no such session".to_string()),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(json!({ "error": message }))).into_response()
    }
}

fn bad(e: impl std::fmt::Display) -> ApiError {
    ApiError::BadRequest(e.to_string())
}

fn conflict(e: impl std::fmt::Display) -> ApiError {
    ApiError::Conflict(e.to_string())
}

/// Runs engine work off the async threads.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(e.to_string()))?
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(session_summary).delete(delete_session))
        .route("/v1/sessions/{id}/region", get(region))
        .route("/v1/sessions/{id}/element", post(set_element))
        .route("/v1/sessions/{id}/events", post(events))
        .route("/v1/sessions/{id}/adjust", post(adjust_pattern))
        .route("/v1/sessions/{id}/apply", post(apply))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD))
        .with_state(state)
}

/// Evicts idle sessions once a minute until the process ends.
pub fn spawn_evictor(state: AppState) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            state.evict_idle(Instant::now());
        }
    })
}

#[derive(Debug, Deserialize)]
struct UploadQuery {
    format: Option<MeshFormat>,
}

/// STL is recognised by its media type or its layout; anything else is
/// read as OBJ.
fn mesh_format(query: &UploadQuery, headers: &HeaderMap, body: &[u8]) -> MeshFormat {
    if let Some(f) = query.format {
        return f;
    }
    let media = headers.get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or("");
    if media.contains("stl") {
        return MeshFormat::Stl;
    }
    if media.contains("obj") {
        return MeshFormat::Obj;
    }
    let binary_stl = body.len() >= 84 && {
        let n = u32::from_le_bytes(body[80..84].try_into().unwrap()) as usize;
        n.checked_mul(50).and_then(|b| b.checked_add(84)) == Some(body.len())
    };
    if binary_stl || body.trim_ascii_start().starts_with(b"solid") {
        MeshFormat::Stl
    } else {
        MeshFormat::Obj
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub mesh: MeshSummary,
    pub chart: ChartSummary,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub faces: usize,
    pub closed: bool,
    pub surface_area: f64,
    pub volume: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChartSummary {
    pub max_distortion: f64,
    pub mean_distortion: f64,
    pub seam_edges: usize,
}

fn summary(id: Uuid, p: &Prepared) -> SessionSummary {
    let chart = ChartFile::new(&p.param.chart);
    SessionSummary {
        id: id.to_string(),
        mesh: MeshSummary {
            vertices: p.mesh.num_vertices(),
            faces: p.mesh.num_faces(),
            closed: check_watertight(&p.mesh).is_closed,
            surface_area: p.mesh.surface_area(),
            volume: p.mesh.signed_volume(),
        },
        chart: ChartSummary {
            max_distortion: chart.max_distortion,
            mean_distortion: chart.mean_distortion,
            seam_edges: chart.seam_edges.len(),
        },
    }
}

async fn create_session(
    State(state): State<AppState>,
    Query(query): Query<UploadQuery>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionSummary>), ApiError> {
    let format = mesh_format(&query, &headers, &body);
    let config = state.engine().clone();
    let prepared = blocking(move || {
        let mesh = load_mesh(&body, format).map_err(bad)?;
        let param = parametrize(&mesh, &config.param, config.exec).map_err(bad)?;
        let regions = RegionIndex::new(&mesh, &config.segment, config.exec).map_err(bad)?;
        Ok(Prepared { mesh, param, regions })
    })
    .await?;
    let id = Uuid::new_v4();
    let out = summary(id, &prepared);
    let session = Session {
        prepared: Arc::new(prepared),
        work: Arc::new(AsyncMutex::new(Work::default())),
        last_used: Mutex::new(Instant::now()),
        regions: Mutex::new(HashMap::new()),
    };
    state.shared.sessions.lock().unwrap().insert(id, Arc::new(session));
    Ok((StatusCode::CREATED, Json(out)))
}

async fn session_summary(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionSummary>, ApiError> {
    let s = state.session(&id)?;
    Ok(Json(summary(Uuid::parse_str(&id).expect("checked"), &s.prepared)))
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    let uuid = Uuid::parse_str(&id).map_err(|_| ApiError::NotFound)?;
    match state.shared.sessions.lock().unwrap().remove(&uuid) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::NotFound),
    }
}

#[derive(Debug, Deserialize)]
struct Cursor {
    x: f64,
    y: f64,
    z: f64,
}

/// Region around the cursor snapped to the cache grid, computed once per
/// grid cell.
async fn region_at(session: &Arc<Session>, p: Point3) -> Result<Arc<RegionFile>, ApiError> {
    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
        return Err(bad("cursor must be finite"));
    }
    let key = [p.x, p.y, p.z].map(|c| (c / REGION_QUANTUM).round() as i64);
    if let Some(r) = session.regions.lock().unwrap().get(&key) {
        return Ok(r.clone());
    }
    let snapped = Point3::new(key[0] as f64, key[1] as f64, key[2] as f64) * REGION_QUANTUM;
    let prepared = session.prepared.clone();
    let region = blocking(move || {
        let r = prepared.regions.infer(&prepared.mesh, &snapped).map_err(bad)?;
        Ok(Arc::new(RegionFile::new(snapped, &r)))
    })
    .await?;
    session.regions.lock().unwrap().insert(key, region.clone());
    Ok(region)
}

async fn region(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(c): Query<Cursor>,
) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let r = region_at(&s, Point3::new(c.x, c.y, c.z)).await?;
    Ok(([(header::CACHE_CONTROL, "private, max-age=600")], Json(r.as_ref().clone())).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ElementSummary {
    pub area: f64,
    pub parts: usize,
    pub nominal_size: f64,
}

async fn set_element(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ElementSummary>, ApiError> {
    let s = state.session(&id)?;
    let mut work = s.work.clone().lock_owned().await;
    let deviation = state.engine().svg_deviation;
    let element = blocking(move || load_element_with(&body, deviation).map_err(bad)).await?;
    let out = ElementSummary { area: element.area(), parts: element.parts.len(), nominal_size: element.nominal_size };
    work.element = Some(element);
    work.plan = None;
    Ok(Json(out))
}

fn placements_json(plan: &Plan) -> Json<PlacementsFile> {
    Json(PlacementsFile::new(plan.placements.clone(), plan.suggestion.clone()))
}

/// Replaces the demonstration. The body is a demo document; its suggestion
/// (or `null`) comes back with the placements that `/apply` would use.
async fn events(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> Result<Json<PlacementsFile>, ApiError> {
    let s = state.session(&id)?;
    let demo = DemoFile::from_json(&body).map_err(bad)?;
    let region = match demo.seed {
        Some(seed) => Some(region_at(&s, seed).await?),
        None => None,
    };
    let mut work = s.work.clone().lock_owned().await;
    let element = work.element.clone().ok_or_else(|| conflict("no element uploaded"))?;
    let prepared = s.prepared.clone();
    let plan = blocking(move || {
        let faces = region.as_ref().map(|r| r.faces.as_slice());
        plan_with_chart(&prepared.mesh, prepared.param.clone(), &element, &demo, faces).map_err(bad)
    })
    .await?;
    let out = placements_json(&plan);
    work.plan = Some(plan);
    Ok(out)
}

async fn adjust_pattern(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<PlacementsFile>, ApiError> {
    let edit: Edit = serde_json::from_slice(&body).map_err(bad)?;
    let s = state.session(&id)?;
    let mut work = s.work.clone().lock_owned().await;
    let (Some(element), Some(plan)) = (&work.element, &work.plan) else {
        return Err(conflict("no pattern to adjust"));
    };
    let Some(suggestion) = &plan.suggestion else {
        return Err(conflict("no pattern to adjust"));
    };
    let layout = Layout { region: &plan.region, element: Some(element) };
    let next = adjust(suggestion, edit, &layout).map_err(bad)?;
    let plan = work.plan.as_mut().expect("checked");
    plan.placements = next.placements.clone();
    plan.suggestion = Some(next);
    Ok(placements_json(plan))
}

#[derive(Debug, Deserialize)]
struct ApplyRequest {
    mode: ExtrudeMode,
    depth: f64,
}

async fn apply(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: ApplyRequest = serde_json::from_slice(&body).map_err(bad)?;
    let s = state.session(&id)?;
    let work = s.work.clone().lock_owned().await;
    if work.plan.as_ref().is_none_or(|p| p.placements.is_empty()) {
        return Err(conflict("no placements accepted yet"));
    }
    let prepared = s.prepared.clone();
    let exec = state.engine().exec;
    let stl = blocking(move || {
        let (element, plan) = (work.element.as_ref().expect("plan implies element"), work.plan.as_ref().expect("checked"));
        let out = build(&prepared.mesh, element, plan, req.mode, req.depth, exec).map_err(conflict)?;
        if !out.report.is_closed {
            return Err(conflict(format!(
                "result is not watertight: {} boundary, {} non-manifold, {} misoriented edges",
                out.report.boundary_edge_count, out.report.nonmanifold_edge_count, out.report.inconsistent_winding_pairs
            )));
        }
        Ok(export_mesh(&out.mesh, ExportFormat::StlBinary))
    })
    .await?;
    Ok((
        [(header::CONTENT_TYPE, "model/stl"), (header::CONTENT_DISPOSITION, "attachment; filename=\"textured.stl\"")],
        stl,
    )
        .into_response())
}
