//! HTTP routes. Mutations take the session's writer lock without waiting
//! (a busy session answers `ALREADY_RUNNING`) and run on the blocking pool;
//! reads only touch the last committed snapshot.

use std::collections::HashMap;
use std::path::{Path as FsPath, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::Mutex;

use snoopy_core::knn::LabelEdit;
use snoopy_core::{load_manifest, StudyManifest};

use crate::cost::CostModel;
use crate::error::ServiceError;
use crate::session::{Session, SessionStatus, Snapshot, WhatIfQuery};
use crate::store::{list_sessions, ReferenceLabels};

/// JSON body extractor whose rejections use the service error shape.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ServiceError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(e) => Err(ServiceError::InvalidRequest(rejection_text(&e))),
        }
    }
}

fn rejection_text(e: &JsonRejection) -> String {
    e.body_text()
}

pub struct SessionHandle {
    writer: Arc<Mutex<Session>>,
    snapshot: RwLock<Arc<Snapshot>>,
}

impl SessionHandle {
    fn new(session: Session) -> Self {
        let snapshot = Arc::new(session.snapshot(session.resting_status()));
        SessionHandle {
            writer: Arc::new(Mutex::new(session)),
            snapshot: RwLock::new(snapshot),
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock poisoned").clone()
    }

    fn publish(&self, snapshot: Snapshot) {
        *self.snapshot.write().expect("snapshot lock poisoned") = Arc::new(snapshot);
    }

    fn mark_running(&self) {
        let mut s = (*self.snapshot()).clone();
        s.info.status = SessionStatus::Running;
        self.publish(s);
    }

    /// Runs `f` on the session in the blocking pool and publishes the
    /// resulting state, whether `f` succeeded or not.
    async fn mutate<R, F>(self: &Arc<Self>, id: &str, running: bool, f: F) -> Result<R, ServiceError>
    where
        R: Send + 'static,
        F: FnOnce(&mut Session) -> Result<R, ServiceError> + Send + 'static,
    {
        let mut guard = self
            .writer
            .clone()
            .try_lock_owned()
            .map_err(|_| ServiceError::AlreadyRunning(id.to_string()))?;
        if running {
            self.mark_running();
        }
        let handle = self.clone();
        tokio::task::spawn_blocking(move || {
            let out = f(&mut guard);
            handle.publish(guard.snapshot(guard.resting_status()));
            out
        })
        .await
        .map_err(|e| ServiceError::Internal(format!("worker failed: {e}")))?
    }
}

pub struct AppState {
    data_dir: PathBuf,
    sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
}

impl AppState {
    /// Opens a data directory and recovers every session found in it.
    /// Sessions that fail to recover are logged and left on disk.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Arc<AppState>, ServiceError> {
        let data_dir = data_dir.into();
        std::fs::create_dir_all(data_dir.join("sessions"))?;
        let mut sessions = HashMap::new();
        for id in list_sessions(&data_dir)? {
            match Session::recover(&data_dir, &id) {
                Ok(s) => {
                    sessions.insert(id, Arc::new(SessionHandle::new(s)));
                }
                Err(e) => log::error!("session {id} not recovered: {e}"),
            }
        }
        log::info!("recovered {} session(s) from {}", sessions.len(), data_dir.display());
        Ok(Arc::new(AppState {
            data_dir,
            sessions: RwLock::new(sessions),
        }))
    }

    pub fn data_dir(&self) -> &FsPath {
        &self.data_dir
    }

    pub fn session(&self, id: &str) -> Result<Arc<SessionHandle>, ServiceError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::SessionNotFound(id.to_string()))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    /// Path to a manifest file; relative entries resolve against its directory.
    #[serde(default)]
    pub manifest_path: Option<PathBuf>,
    /// Inline manifest; relative entries resolve against `base_dir`.
    #[serde(default)]
    pub manifest: Option<Value>,
    #[serde(default)]
    pub base_dir: Option<PathBuf>,
    #[serde(default)]
    pub cost_model: Option<CostModel>,
    #[serde(default)]
    pub reference_labels: Option<ReferenceLabels>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub status: SessionStatus,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditRequest {
    pub edits: Vec<LabelEdit>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleanStepRequest {
    pub fraction: f64,
}

fn resolve_manifest(req: &CreateSessionRequest) -> Result<StudyManifest, ServiceError> {
    match (&req.manifest_path, &req.manifest) {
        (Some(path), None) => load_manifest(path).map_err(ServiceError::manifest),
        (None, Some(inline)) => {
            let mut m = StudyManifest::from_json_str(&inline.to_string()).map_err(ServiceError::manifest)?;
            if let Some(base) = &req.base_dir {
                m.resolve_paths(base);
            }
            Ok(m)
        }
        _ => Err(ServiceError::InvalidRequest(
            "give exactly one of manifest_path or manifest".into(),
        )),
    }
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    ApiJson(req): ApiJson<CreateSessionRequest>,
) -> Result<impl IntoResponse, ServiceError> {
    let data_dir = app.data_dir.clone();
    let session = tokio::task::spawn_blocking(move || {
        let manifest = resolve_manifest(&req)?;
        let mut reference = req.reference_labels;
        if let (Some(r), Some(base)) = (reference.as_mut(), req.base_dir.as_ref()) {
            for p in [&mut r.train, &mut r.test] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Session::create(&data_dir, manifest, req.cost_model.unwrap_or_default(), reference)
    })
    .await
    .map_err(|e| ServiceError::Internal(e.to_string()))??;
    let id = session.id().to_string();
    log::info!("created session {id}");
    app.sessions
        .write()
        .expect("session map poisoned")
        .insert(id.clone(), Arc::new(SessionHandle::new(session)));
    Ok((
        StatusCode::CREATED,
        Json(CreatedSession {
            session_id: id,
            status: SessionStatus::Created,
        }),
    ))
}

async fn list(State(app): State<Arc<AppState>>) -> impl IntoResponse {
    let handles: Vec<Arc<SessionHandle>> = app
        .sessions
        .read()
        .expect("session map poisoned")
        .values()
        .cloned()
        .collect();
    let mut infos: Vec<_> = handles.iter().map(|h| h.snapshot().info.clone()).collect();
    infos.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    Json(infos)
}

async fn get_session(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(app.session(&id)?.snapshot().info.clone()))
}

async fn run(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    let handle = app.session(&id)?;
    let view = handle.mutate(&id, true, |s| s.run()).await?;
    Ok(Json(view))
}

async fn result(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    let snap = app.session(&id)?.snapshot();
    match &snap.latest {
        Some(v) => Ok(Json(v.clone())),
        None => Err(ServiceError::NoPriorRun(id)),
    }
}

async fn curves(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    let snap = app.session(&id)?.snapshot();
    match &snap.curves {
        Some(c) => Ok(Json(c.clone())),
        None => Err(ServiceError::NoPriorRun(id)),
    }
}

async fn labels(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<EditRequest>,
) -> Result<impl IntoResponse, ServiceError> {
    let handle = app.session(&id)?;
    let result = handle.mutate(&id, false, move |s| s.edit_labels(&req.edits)).await?;
    Ok(Json(result))
}

async fn clean_step(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<CleanStepRequest>,
) -> Result<impl IntoResponse, ServiceError> {
    let handle = app.session(&id)?;
    let outcome = handle.mutate(&id, false, move |s| s.clean_step(req.fraction)).await?;
    Ok(Json(outcome))
}

async fn whatif(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    ApiJson(query): ApiJson<WhatIfQuery>,
) -> Result<impl IntoResponse, ServiceError> {
    let snap = app.session(&id)?.snapshot();
    Ok(Json(crate::session::whatif(&snap, &query)?))
}

async fn costs(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(app.session(&id)?.snapshot().costs.clone()))
}

async fn not_found() -> ServiceError {
    ServiceError::InvalidRequest("no such route".into())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/run", post(run))
        .route("/sessions/{id}/result", get(result))
        .route("/sessions/{id}/curves", get(curves))
        .route("/sessions/{id}/labels", post(labels))
        .route("/sessions/{id}/clean_step", post(clean_step))
        .route("/sessions/{id}/whatif", post(whatif))
        .route("/sessions/{id}/costs", get(costs))
        .fallback(not_found)
        .with_state(state)
}
