//! JSON-over-HTTP session service: grid state, pattern evaluation, joint
//! presets, trimming, design sweeps and schedule planning.
//!
//! Every mutation carries the version it was prepared against and is
//! rejected with 409 when the session has moved on. Reads snapshot the
//! session and compute outside the lock.

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use voxskin_core::calibration::CalibrationStore;
use voxskin_core::design::{design_sweep, sweep_values, DesignSweep, SweepParameter, SweepState};
use voxskin_core::geometry::{build_grid, Address, DesignParams, VoxelGrid};
use voxskin_core::joints::{
    evaluate_pattern, preset_specs, synthesize_pattern, ActivationPattern, JointReport, JointSpec,
};
use voxskin_core::mechanics::MechConfig;
use voxskin_core::scheduler::{
    grid_drives, plan_schedule, ActivationRequest, PlanOptions, PowerBudget, Schedule, TargetPhase, TimelineEvent,
};
use voxskin_core::thermal::{HeaterParams, ThermalParams};
use voxskin_core::voxel::{trim, Diagnostic};
use voxskin_core::{SkinError, VERSION};

/// Models behind a session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub params: DesignParams,
    pub mechanics: MechConfig,
    pub heater: HeaterParams,
    pub thermal: ThermalParams,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            params: DesignParams::reference(),
            mechanics: MechConfig::default(),
            heater: HeaterParams::default(),
            thermal: ThermalParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Session {
    pub config: SessionConfig,
    pub grid: VoxelGrid,
    pub pattern: ActivationPattern,
    #[serde(default)]
    pub calibration: Option<CalibrationStore>,
    pub version: u64,
}

impl Session {
    pub fn new(config: SessionConfig) -> voxskin_core::Result<Self> {
        Ok(Session {
            grid: build_grid(&config.params)?,
            config,
            pattern: ActivationPattern::new("empty", []),
            calibration: None,
            version: 0,
        })
    }
}

pub type SharedSession = Arc<RwLock<Session>>;

/// Error body `{"error": kind, "message": text}` with its status.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
    pub current_version: Option<u64>,
}

impl From<SkinError> for ApiError {
    fn from(e: SkinError) -> Self {
        let status = match e {
            SkinError::Validation(_) | SkinError::OutOfRange(_) => StatusCode::BAD_REQUEST,
            SkinError::Infeasible(_) | SkinError::Singular { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            SkinError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            kind: e.kind(),
            message: e.to_string(),
            current_version: None,
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            kind: "schema",
            message: e.body_text(),
            current_version: None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"error": self.kind, "message": self.message});
        if let Some(v) = self.current_version {
            body["current_version"] = json!(v);
        }
        (self.status, axum::Json(body)).into_response()
    }
}

fn stale(expected: u64, current: u64) -> ApiError {
    ApiError {
        status: StatusCode::CONFLICT,
        kind: "stale_version",
        message: format!("request prepared against version {expected}, session is at {current}"),
        current_version: Some(current),
    }
}

/// JSON body extractor whose rejections become 400 errors.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let axum::Json(v) = axum::Json::<T>::from_request(req, state).await?;
        Ok(Body(v))
    }
}

type Reply<T> = Result<axum::Json<T>, ApiError>;

fn snapshot(state: &SharedSession) -> Session {
    state.read().expect("session lock poisoned").clone()
}

/// Runs a computation off the async executor.
async fn compute<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        kind: "internal",
        message: e.to_string(),
        current_version: None,
    })?
}

/// Applies `f` to a copy of the session and swaps it in only on success,
/// under the write lock and after the version check.
fn mutate<T>(
    state: &SharedSession,
    expected: u64,
    f: impl FnOnce(&mut Session) -> Result<T, ApiError>,
) -> Result<(u64, T), ApiError> {
    let mut guard = state.write().expect("session lock poisoned");
    if guard.version != expected {
        return Err(stale(expected, guard.version));
    }
    let mut next = guard.clone();
    let out = f(&mut next)?;
    *guard = next;
    Ok((guard.version, out))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GridResponse {
    pub version: u64,
    pub grid: VoxelGrid,
    pub pattern: ActivationPattern,
}

async fn get_grid(State(state): State<SharedSession>) -> Reply<GridResponse> {
    let s = snapshot(&state);
    Ok(axum::Json(GridResponse {
        version: s.version,
        grid: s.grid,
        pattern: s.pattern,
    }))
}

/// Either an explicit address set or a joint spec to synthesize.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternInput {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub addresses: Option<BTreeSet<Address>>,
    #[serde(default)]
    pub spec: Option<JointSpec>,
}

impl PatternInput {
    fn resolve(&self, grid: &VoxelGrid) -> Result<ActivationPattern, ApiError> {
        let mut pattern = match (&self.addresses, &self.spec) {
            (Some(a), None) => ActivationPattern::new(self.label.clone().unwrap_or_else(|| "custom".into()), a.clone()),
            (None, Some(spec)) => synthesize_pattern(spec, grid)?,
            _ => return Err(SkinError::validation("pattern needs exactly one of addresses or spec").into()),
        };
        if let Some(l) = &self.label {
            pattern.label = l.clone();
        }
        pattern.validate(grid)?;
        Ok(pattern)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PutPattern {
    pub version: u64,
    pub pattern: PatternInput,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PatternResponse {
    pub version: u64,
    pub pattern: ActivationPattern,
}

async fn put_pattern(State(state): State<SharedSession>, Body(req): Body<PutPattern>) -> Reply<PatternResponse> {
    let (version, pattern) = mutate(&state, req.version, |s| {
        s.pattern = req.pattern.resolve(&s.grid)?;
        s.version += 1;
        Ok(s.pattern.clone())
    })?;
    Ok(axum::Json(PatternResponse { version, pattern }))
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    /// Pattern to evaluate instead of the session's current one.
    #[serde(default)]
    pub pattern: Option<PatternInput>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub version: u64,
    pub report: JointReport,
}

/// The body is optional: an empty body evaluates the session's pattern.
async fn evaluate(State(state): State<SharedSession>, body: axum::body::Bytes) -> Reply<EvaluateResponse> {
    let req: EvaluateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        EvaluateRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError {
            status: StatusCode::BAD_REQUEST,
            kind: "schema",
            message: e.to_string(),
            current_version: None,
        })?
    };
    let s = snapshot(&state);
    let version = s.version;
    let report = compute(move || {
        let pattern = match &req.pattern {
            Some(p) => p.resolve(&s.grid)?,
            None => s.pattern.clone(),
        };
        Ok(evaluate_pattern(&s.grid, &pattern, &s.config.mechanics)?)
    })
    .await?;
    Ok(axum::Json(EvaluateResponse { version, report }))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRequest {
    pub budget: PowerBudget,
    /// Defaults to melting the session's current pattern.
    #[serde(default)]
    pub requests: Option<Vec<ActivationRequest>>,
    #[serde(default)]
    pub options: PlanOptions,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlanResponse {
    pub version: u64,
    pub schedule: Schedule,
    pub timeline: Vec<TimelineEvent>,
}

async fn plan(State(state): State<SharedSession>, Body(req): Body<PlanRequest>) -> Reply<PlanResponse> {
    let s = snapshot(&state);
    let version = s.version;
    let schedule = compute(move || {
        let requests = req.requests.unwrap_or_else(|| {
            vec![ActivationRequest {
                addresses: s.pattern.addresses.clone(),
                target: TargetPhase::Melted,
                deadline: None,
            }]
        });
        for r in &requests {
            if let Some(a) = r.addresses.iter().find(|a| !s.grid.is_active(**a)) {
                return Err(SkinError::validation(format!("voxel {a} is outside the grid or trimmed")).into());
            }
        }
        let drives = grid_drives(&s.grid, s.calibration.as_ref(), &s.config.heater, &s.config.thermal)?;
        Ok(plan_schedule(&requests, &req.budget, &drives, req.options)?)
    })
    .await?;
    Ok(axum::Json(PlanResponse {
        version,
        timeline: schedule.timeline(),
        schedule,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub spec: JointSpec,
    pub pattern: ActivationPattern,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PresetsResponse {
    pub version: u64,
    pub presets: Vec<Preset>,
}

async fn presets(State(state): State<SharedSession>) -> Reply<PresetsResponse> {
    let s = snapshot(&state);
    let presets = preset_specs(&s.grid)
        .into_iter()
        .map(|(name, spec)| {
            let pattern = synthesize_pattern(&spec, &s.grid)?;
            Ok(Preset { name, spec, pattern })
        })
        .collect::<Result<Vec<_>, SkinError>>()?;
    Ok(axum::Json(PresetsResponse {
        version: s.version,
        presets,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrimRequest {
    pub version: u64,
    pub addresses: BTreeSet<Address>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrimResponse {
    pub version: u64,
    pub trimmed: BTreeSet<Address>,
    pub diagnostic: Option<Diagnostic>,
}

/// Trims the grid and drops trimmed voxels from the current pattern. Both
/// are mutations, so the version advances by two.
async fn post_trim(State(state): State<SharedSession>, Body(req): Body<TrimRequest>) -> Reply<TrimResponse> {
    let (version, diagnostic) = mutate(&state, req.version, |s| {
        let (grid, diagnostic) = trim(&s.grid, &req.addresses)?;
        s.grid = grid;
        s.version += 1;
        s.pattern.addresses.retain(|a| !req.addresses.contains(a));
        s.version += 1;
        Ok(diagnostic)
    })?;
    Ok(axum::Json(TrimResponse {
        version,
        trimmed: req.addresses,
        diagnostic,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub parameter: SweepParameter,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    #[serde(default)]
    pub state: SweepState,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepResponse {
    pub version: u64,
    pub sweep: DesignSweep,
}

async fn sweep(State(state): State<SharedSession>, Body(req): Body<SweepRequest>) -> Reply<SweepResponse> {
    let s = snapshot(&state);
    let version = s.version;
    if req.steps > 64 {
        return Err(SkinError::validation("at most 64 sweep steps per request").into());
    }
    let sweep = compute(move || {
        let values = sweep_values(req.parameter, req.from, req.to, req.steps)?;
        Ok(design_sweep(
            &s.config.params,
            req.parameter,
            &values,
            req.state,
            &s.config.mechanics,
        )?)
    })
    .await?;
    Ok(axum::Json(SweepResponse { version, sweep }))
}

async fn get_session(State(state): State<SharedSession>) -> Reply<Session> {
    Ok(axum::Json(snapshot(&state)))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImportRequest {
    pub version: u64,
    pub session: Session,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VersionResponse {
    pub version: u64,
}

/// Replaces the session with an exported one; the version keeps counting
/// from the current session.
async fn put_session(State(state): State<SharedSession>, Body(req): Body<ImportRequest>) -> Reply<VersionResponse> {
    let (version, ()) = mutate(&state, req.version, |s| {
        req.session.config.params.validate()?;
        if req.session.grid.params != req.session.config.params {
            return Err(SkinError::validation("imported grid does not match its design parameters").into());
        }
        req.session.pattern.validate(&req.session.grid)?;
        let next = s.version + 1;
        *s = req.session;
        s.version = next;
        Ok(())
    })?;
    Ok(axum::Json(VersionResponse { version }))
}

async fn schema() -> axum::Json<Value> {
    axum::Json(schema_document())
}

/// Endpoint catalogue with request and response shapes.
pub fn schema_document() -> Value {
    let address = json!({"row": "integer", "col": "integer"});
    let pattern_input = json!({
        "label": "string?",
        "addresses": [address],
        "spec": {"kind": "bend_unilateral|hinge_bilateral|twist|shear|axial_compress", "location": address,
                 "band_width": "integer", "magnitude": "small|large", "rows_activated": "integer?",
                 "stagger": "integer?", "span": "integer?", "gap": "integer?"}
    });
    json!({
        "version": VERSION,
        "errors": {
            "400": "malformed body or validation failure",
            "409": "stale version on a mutation; body carries current_version",
            "422": "infeasible request, e.g. a voxel above the power budget"
        },
        "endpoints": [
            {"method": "GET", "path": "/grid", "response": {"version": "integer", "grid": "VoxelGrid", "pattern": "ActivationPattern"}},
            {"method": "PUT", "path": "/pattern", "request": {"version": "integer", "pattern": pattern_input}, "response": {"version": "integer", "pattern": "ActivationPattern"}},
            {"method": "POST", "path": "/evaluate", "request": {"pattern": "PatternInput?"}, "response": {"version": "integer", "report": "JointReport"}},
            {"method": "POST", "path": "/schedule/plan", "request": {"budget": {"peak": "W", "branches": [{"addresses": [address], "limit": "W"}]}, "requests": [{"addresses": [address], "target": "melted|solid", "deadline": "s?"}], "options": {"duration_model": "closed_form|simulated", "equalize": "bool"}}, "response": {"version": "integer", "schedule": "Schedule", "timeline": [{"t": "s", "address": address, "duty": "number", "cumulative_power": "W"}]}},
            {"method": "GET", "path": "/presets/joints", "response": {"version": "integer", "presets": [{"name": "string", "spec": "JointSpec", "pattern": "ActivationPattern"}]}},
            {"method": "POST", "path": "/trim", "request": {"version": "integer", "addresses": [address]}, "response": {"version": "integer", "trimmed": [address], "diagnostic": "Diagnostic?"}},
            {"method": "POST", "path": "/design/sweep", "request": {"parameter": "t_f|t_sheet|N_theta", "from": "number", "to": "number", "steps": "integer", "state": "solid|melted"}, "response": {"version": "integer", "sweep": "DesignSweep"}},
            {"method": "GET", "path": "/session", "response": "Session"},
            {"method": "PUT", "path": "/session", "request": {"version": "integer", "session": "Session"}, "response": {"version": "integer"}},
            {"method": "GET", "path": "/schema", "response": "this document"}
        ]
    })
}

pub fn router(state: SharedSession) -> Router {
    Router::new()
        .route("/grid", get(get_grid))
        .route("/pattern", axum::routing::put(put_pattern))
        .route("/evaluate", post(evaluate))
        .route("/schedule/plan", post(plan))
        .route("/presets/joints", get(presets))
        .route("/trim", post(post_trim))
        .route("/design/sweep", post(sweep))
        .route("/session", get(get_session).put(put_session))
        .route("/schema", get(schema))
        .with_state(state)
}

/// Serves a fresh session until the process is stopped.
pub async fn serve(addr: SocketAddr, session: Session) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Arc::new(RwLock::new(session)))).await
}
