//! Read-only HTTP API over one checkpoint and one dataset.
//!
//! Global importances are computed once at startup; every other response is
//! a pure function of the request, so repeated GETs return identical bodies.

use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use patway_core::checkpoint::{Checkpoint, ModelKind};
use patway_core::eventlog::EncodedDataset;
use patway_core::interpret::{importance, predict_pathway, BundleConfig, Importance, InterpretError, InterpretationBundle, Prediction};
use patway_core::nncore::PatWayNet;

use crate::commands::{read_dataset, ServeArgs};
use crate::error::CliError;

pub struct AppState {
    ds: EncodedDataset,
    net: PatWayNet,
    model_kind: ModelKind,
    model_hash: String,
    /// Set when the dataset was encoded with a different schema than the
    /// checkpoint; model endpoints then answer 409.
    schema_error: Option<String>,
    importances: Vec<Importance>,
    bundle: BundleConfig,
}

impl AppState {
    pub fn new(ckpt: &Checkpoint, ds: EncodedDataset, bundle: BundleConfig) -> Result<Self, CliError> {
        let model = ckpt.model()?;
        let model_kind = model.kind();
        let net = model
            .network()
            .cloned()
            .ok_or_else(|| CliError::Usage(format!("cannot serve a {model_kind} checkpoint; train patwaynet or lstm")))?;
        let schema_error = ckpt.check_dataset(&ds).err().map(|e| e.to_string());
        let importances = match &schema_error {
            None => importance(&net, &ds).or_else(|e| match e {
                InterpretError::NotInterpretable => Ok(Vec::new()),
                e => Err(e),
            })?,
            Some(msg) => {
                log::warn!("{msg}; model endpoints will answer 409");
                Vec::new()
            }
        };
        Ok(Self {
            ds,
            net,
            model_kind,
            model_hash: ckpt.model_hash()?,
            schema_error,
            importances,
            bundle,
        })
    }
}

/// JSON error body `{"error": kind, "message": ...}` with a status code.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: &'a str,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.kind,
            message: &self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<InterpretError> for ApiError {
    fn from(e: InterpretError) -> Self {
        let (status, kind) = match &e {
            InterpretError::UnknownPathway(_) => (StatusCode::NOT_FOUND, "unknown_pathway"),
            InterpretError::SchemaMismatch { .. } => (StatusCode::CONFLICT, "schema_mismatch"),
            InterpretError::TimeStep { .. } | InterpretError::TransitionStep(..) => (StatusCode::BAD_REQUEST, "invalid_prefix_len"),
            InterpretError::NotInterpretable => (StatusCode::UNPROCESSABLE_ENTITY, "not_interpretable"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError {
            status,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            kind: "invalid_prefix_len",
            message: e.body_text(),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn unknown(id: &str) -> ApiError {
    InterpretError::UnknownPathway(id.to_string()).into()
}

impl AppState {
    fn model_ready(&self) -> Result<(), ApiError> {
        match &self.schema_error {
            Some(msg) => Err(ApiError {
                status: StatusCode::CONFLICT,
                kind: "schema_mismatch",
                message: msg.clone(),
            }),
            None => Ok(()),
        }
    }

    fn pathway(&self, id: &str) -> Result<usize, ApiError> {
        self.ds.pathway_index(id).ok_or_else(|| unknown(id))
    }

    fn named(&self, names: &[patway_core::eventlog::FeatureInfo], values: &[f64]) -> Vec<NamedValue> {
        names
            .iter()
            .zip(values)
            .map(|(f, &value)| NamedValue {
                name: f.name.clone(),
                value,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientSummary {
    pub id: String,
    pub n_events: usize,
    pub label: f64,
    /// Encoded (scaled) static features.
    pub static_features: Vec<NamedValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    /// 1-based position in the pathway.
    pub step: usize,
    pub activity: String,
    pub timestamp: String,
    /// Encoded sequential channels after this event.
    pub values: Vec<NamedValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientTimeline {
    pub id: String,
    pub label: f64,
    pub static_features: Vec<NamedValue>,
    pub events: Vec<TimelineEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientList {
    pub patients: Vec<PatientSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelImportance {
    pub model_kind: ModelKind,
    pub model_hash: String,
    pub importances: Vec<Importance>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
pub struct PrefixQuery {
    pub prefix_len: Option<usize>,
}

async fn list_patients(State(s): State<Arc<AppState>>) -> ApiResult<PatientList> {
    let patients = s
        .ds
        .pathways
        .iter()
        .map(|p| PatientSummary {
            id: p.id.clone(),
            n_events: p.len,
            label: p.label,
            static_features: s.named(&s.ds.static_features, &p.x_static),
        })
        .collect();
    Ok(Json(PatientList { patients }))
}

async fn patient(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<PatientTimeline> {
    let pi = s.pathway(&id)?;
    let p = &s.ds.pathways[pi];
    let seq = s.ds.pathway_seq(pi);
    let events = (0..p.len)
        .map(|t| TimelineEvent {
            step: t + 1,
            activity: p.activities[t].clone(),
            timestamp: p.timestamps[t].clone(),
            values: s.named(&s.ds.seq_features, seq.step(t)),
        })
        .collect();
    Ok(Json(PatientTimeline {
        id: p.id.clone(),
        label: p.label,
        static_features: s.named(&s.ds.static_features, &p.x_static),
        events,
    }))
}

async fn prediction(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    q: Result<Query<PrefixQuery>, QueryRejection>,
) -> ApiResult<Prediction> {
    s.pathway(&id)?;
    let Query(q) = q?;
    s.model_ready()?;
    Ok(Json(predict_pathway(&s.net, &s.ds, &id, q.prefix_len, &s.bundle.bands)?))
}

async fn interpretation(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    q: Result<Query<PrefixQuery>, QueryRejection>,
) -> ApiResult<InterpretationBundle> {
    s.pathway(&id)?;
    let Query(q) = q?;
    s.model_ready()?;
    let cfg = BundleConfig {
        prefix_len: q.prefix_len,
        ..s.bundle.clone()
    };
    let state = s.clone();
    let bundle = tokio::task::spawn_blocking(move || {
        InterpretationBundle::build(&state.net, &state.ds, &id, &cfg, &state.model_hash, &state.importances)
    })
    .await
    .map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        kind: "internal",
        message: e.to_string(),
    })??;
    Ok(Json(bundle))
}

async fn model_importance(State(s): State<Arc<AppState>>) -> ApiResult<ModelImportance> {
    s.model_ready()?;
    Ok(Json(ModelImportance {
        model_kind: s.model_kind,
        model_hash: s.model_hash.clone(),
        importances: s.importances.clone(),
    }))
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        kind: "not_found",
        message: "no such endpoint".into(),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/patients", get(list_patients))
        .route("/api/patients/{id}", get(patient))
        .route("/api/patients/{id}/prediction", get(prediction))
        .route("/api/patients/{id}/interpretation", get(interpretation))
        .route("/api/model/importance", get(model_importance))
        .fallback(not_found)
        .with_state(state)
}

pub fn run_server(a: &ServeArgs) -> Result<(), CliError> {
    let ckpt = Checkpoint::load(&a.ckpt)?;
    let ds = read_dataset(&a.dataset)?;
    let state = Arc::new(AppState::new(&ckpt, ds, BundleConfig::default())?);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io("tokio runtime", e))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&a.addr)
            .await
            .map_err(|e| CliError::io(&a.addr, e))?;
        log::info!("listening on http://{}", a.addr);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::io(&a.addr, e))
    })
}
